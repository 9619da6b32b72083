"""HTTP client for a running node: request signing, submission, receipt polling.

The signing scheme matches the service: the body carries the transaction
fields, and the signature headers cover the canonical transaction bytes
rebuilt from that body.
"""

from __future__ import annotations

import time
from typing import Any, Mapping, Optional

import httpx

from .cas import ContentId, metadata_document
from .certificate import CertificateData, cert_hash
from .chain import canonical_transaction_bytes
from .contract import AuthorizeIssuer, Payload, RegisterCertificate
from .keys import KeyPair, decode_address


class NodeError(Exception):
    """The node answered with an error body."""

    def __init__(self, http_status: int, machine_code: str, message: str):
        super().__init__(f"{machine_code}: {message}")
        self.http_status = http_status
        self.machine_code = machine_code
        self.message = message


class NodeUnreachable(Exception):
    """Transport-level failure, distinct from domain errors."""


class NodeClient:
    def __init__(self, base_url: str, timeout: float = 10.0):
        self.base_url = base_url.rstrip("/")
        self._http = httpx.Client(base_url=self.base_url, timeout=timeout)

    def close(self) -> None:
        self._http.close()

    def __enter__(self) -> "NodeClient":
        return self

    def __exit__(self, *exc_info) -> None:
        self.close()

    # -- plumbing ------------------------------------------------------------

    def _request(self, method: str, path: str, **kwargs) -> Any:
        try:
            response = self._http.request(method, path, **kwargs)
        except httpx.HTTPError as err:
            raise NodeUnreachable(f"{self.base_url}: {err}") from err
        if response.status_code >= 400:
            try:
                error = response.json()["error"]
                raise NodeError(response.status_code, error["machine_code"], error["message"])
            except (KeyError, ValueError):
                raise NodeError(response.status_code, "http_error", response.text) from None
        return response

    def _signed_headers(
        self, keypair: KeyPair, payload: Payload, nonce: int, timestamp_ms: int
    ) -> dict[str, str]:
        message = canonical_transaction_bytes(
            keypair.address, nonce, timestamp_ms, keypair.public_key, payload
        )
        return {
            "X-Sender": keypair.address_b58,
            "X-Public-Key": keypair.public_key.hex(),
            "X-Signature": keypair.sign(message).hex(),
        }

    # -- writes ----------------------------------------------------------------

    def authorize_issuer(self, admin: KeyPair, issuer_address: str) -> dict:
        nonce = self.next_nonce(admin.address_b58)
        timestamp_ms = int(time.time() * 1000)
        payload = AuthorizeIssuer(issuer=decode_address(issuer_address))
        body = {"issuer_address": issuer_address, "nonce": nonce, "timestamp_ms": timestamp_ms}
        headers = self._signed_headers(admin, payload, nonce, timestamp_ms)
        return self._request("POST", "/v1/issuers", json=body, headers=headers).json()

    def issue_certificate(
        self,
        issuer: KeyPair,
        certificate: Mapping[str, Any],
        extras: Mapping[str, Any] | None = None,
    ) -> dict:
        cert = CertificateData.from_mapping(certificate)
        extras = dict(extras or {})
        cid = ContentId.for_content(metadata_document(cert, extras))
        nonce = self.next_nonce(issuer.address_b58)
        timestamp_ms = int(time.time() * 1000)
        payload = RegisterCertificate(cert=cert, metadata_cid=cid)
        body = {
            "certificate": cert.to_dict(),
            "extras": extras,
            "nonce": nonce,
            "timestamp_ms": timestamp_ms,
        }
        headers = self._signed_headers(issuer, payload, nonce, timestamp_ms)
        return self._request("POST", "/v1/certificates", json=body, headers=headers).json()

    # -- reads -----------------------------------------------------------------

    def next_nonce(self, address: str) -> int:
        return self._request("GET", f"/v1/accounts/{address}").json()["next_nonce"]

    def validate(self, digest_hex: str, issuer_address: str) -> dict:
        return self._request(
            "GET", f"/v1/certificates/{digest_hex}", params={"issuer": issuer_address}
        ).json()

    def receipt(self, txid_hex: str) -> dict:
        return self._request("GET", f"/v1/receipts/{txid_hex}").json()

    def metadata(self, cid: str) -> bytes:
        return self._request("GET", f"/v1/metadata/{cid}").content

    def block(self, height: int) -> dict:
        return self._request("GET", f"/v1/blocks/{height}").json()

    def stats(self) -> dict:
        return self._request("GET", "/v1/stats").json()

    def wait_for_receipt(
        self, txid_hex: str, timeout: float = 30.0, poll_interval: float = 0.2
    ) -> dict:
        """Poll until the transaction has a receipt with a block height (or a
        pre-inclusion rejection); raises TimeoutError otherwise."""
        deadline = time.monotonic() + timeout
        last: Optional[dict] = None
        while time.monotonic() < deadline:
            try:
                last = self.receipt(txid_hex)
            except NodeError as err:
                if err.http_status != 404:
                    raise
            else:
                if last["status"] == "rejected_pre_inclusion" or last["block_height"] is not None:
                    return last
            time.sleep(poll_interval)
        raise TimeoutError(f"no receipt for {txid_hex} within {timeout}s (last: {last})")


def offline_digest(certificate: Mapping[str, Any]) -> str:
    """Digest of a certificate JSON document, computed without a node."""
    return cert_hash(CertificateData.from_mapping(certificate)).hex()
