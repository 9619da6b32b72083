"""Self-contained decentralized academic-certificate registry.

A deterministic ledger node with contract-style issuance semantics,
content-addressed metadata storage, an HTTP API, and a CLI.
"""

__version__ = "0.1.0"
