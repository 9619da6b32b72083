"""Simulated blockchain substrate: signed transactions, replay protection,
a mempool, timed block production, receipts, and bandwidth fees.

Wire formats (bit-exact, also consumed by the web client):

* canonical transaction bytes::

      sender(21) || nonce u64be || timestamp_ms u64be || public_key(32) || payload

* payload bytes: tag ``0x01`` + issuer(21) for issuer authorization, or tag
  ``0x02`` + the certificate field encoding + content id raw bytes(36) for
  registration. The Ed25519 signature covers the canonical bytes; the full
  wire form appends the 64-byte signature, and the transaction id is SHA-256
  over the full wire form.

* block bytes: height u64be || parent_hash(32) || timestamp u64be ||
  tx_root(32) || state_root(32) || tx count u32be || per-tx (length u32be ||
  tx wire bytes). The block hash is SHA-256 over the block bytes.

Replay defense is two independent mechanisms: per-sender nonces (each
transaction binds to one execution slot) and a persistent global seen-set of
transaction ids. An admitted txid is never admissible again, across restarts
included; to retry a lost pending transaction, re-sign with a fresh timestamp.

Concurrency: one internal lock serializes all mutations (submission and block
production); reads hand out immutable snapshots, so no reader ever observes a
half-applied block.
"""

from __future__ import annotations

import enum
import hashlib
import struct
import threading
from dataclasses import dataclass, replace
from datetime import date
from pathlib import Path
from typing import Optional

from . import contract
from .cas import CID_PREFIX_BYTES, ContentId
from .certificate import CertificateData, InvalidField, encode_fields, parse_canonical, validate_certificate
from .config import MS_PER_DAY, ChainConfig, FeeConfig, GenesisConfig
from .contract import AuthorizeIssuer, Payload, RegisterCertificate, RegistryState, RevertReason
from .keys import ADDRESS_SIZE, PUBLIC_KEY_SIZE, SIGNATURE_SIZE, KeyPair, address_from_public_key, verify_signature

ZERO32 = b"\x00" * 32

_TAG_AUTHORIZE = 0x01
_TAG_REGISTER = 0x02


class WireError(ValueError):
    """Bytes do not decode as a valid wire structure."""


class NotFound(KeyError):
    """Unknown transaction id or block height."""


class RejectReason(enum.Enum):
    DUPLICATE_TRANSACTION = "duplicate_transaction"
    STALE_NONCE = "stale_nonce"
    FUTURE_NONCE = "future_nonce"
    BAD_SIGNATURE = "bad_signature"
    INVALID_PARAMETERS = "invalid_parameters"
    INSUFFICIENT_BALANCE = "insufficient_balance"


class SubmitRejected(Exception):
    """Transaction refused before entering the mempool."""

    def __init__(self, reason: RejectReason, detail: str = ""):
        super().__init__(f"{reason.value}" + (f": {detail}" if detail else ""))
        self.reason = reason
        self.detail = detail


class InsufficientBalance(Exception):
    """Account cannot cover the bandwidth fee for a transaction."""


# ---------------------------------------------------------------------------
# Wire encodings


def encode_payload(payload: Payload) -> bytes:
    if isinstance(payload, AuthorizeIssuer):
        if len(payload.issuer) != ADDRESS_SIZE:
            raise WireError("issuer must be 21 bytes")
        return bytes([_TAG_AUTHORIZE]) + payload.issuer
    if isinstance(payload, RegisterCertificate):
        return bytes([_TAG_REGISTER]) + encode_fields(payload.cert) + payload.metadata_cid.raw
    raise WireError(f"unknown payload type {type(payload).__name__}")


def decode_payload(data: bytes) -> Payload:
    if not data:
        raise WireError("empty payload")
    tag, body = data[0], data[1:]
    if tag == _TAG_AUTHORIZE:
        if len(body) != ADDRESS_SIZE:
            raise WireError("authorize payload must carry a 21-byte address")
        return AuthorizeIssuer(issuer=body)
    if tag == _TAG_REGISTER:
        if len(body) < 36:
            raise WireError("register payload truncated")
        cert_bytes, cid_raw = body[:-36], body[-36:]
        cert = _decode_cert_fields(cert_bytes)
        if cid_raw[:4] != CID_PREFIX_BYTES:
            raise WireError("unrecognized content id layout")
        return RegisterCertificate(cert=cert, metadata_cid=ContentId(digest=cid_raw[4:]))
    raise WireError(f"unknown payload tag {tag:#x}")


def _decode_cert_fields(data: bytes) -> CertificateData:
    # Lenient counterpart of the canonical parser: empty strings and bad date
    # ordering stay representable so downstream guards can reject them.
    try:
        return parse_canonical(data)
    except InvalidField:
        pass
    values: list[str] = []
    offset = 0
    for _ in range(6):
        if offset + 4 > len(data):
            raise WireError("certificate fields truncated")
        (length,) = struct.unpack_from(">I", data, offset)
        offset += 4
        if offset + length > len(data):
            raise WireError("certificate fields truncated")
        values.append(data[offset : offset + length].decode("utf-8", errors="strict"))
        offset += length
    if offset != len(data):
        raise WireError("trailing bytes after certificate fields")
    try:
        completion = date.fromisoformat(values[4])
        issue = date.fromisoformat(values[5])
    except ValueError:
        raise WireError("certificate dates are not ISO-8601") from None
    return CertificateData(values[0], values[1], values[2], values[3], completion, issue)


@dataclass(frozen=True)
class Transaction:
    sender: bytes
    nonce: int
    payload: Payload
    timestamp_ms: int
    public_key: bytes
    signature: bytes

    def canonical_bytes(self) -> bytes:
        return canonical_transaction_bytes(
            self.sender, self.nonce, self.timestamp_ms, self.public_key, self.payload
        )

    def to_wire(self) -> bytes:
        return self.canonical_bytes() + self.signature

    @property
    def txid(self) -> bytes:
        return hashlib.sha256(self.to_wire()).digest()

    @property
    def size(self) -> int:
        return len(self.to_wire())


def canonical_transaction_bytes(
    sender: bytes, nonce: int, timestamp_ms: int, public_key: bytes, payload: Payload
) -> bytes:
    if len(sender) != ADDRESS_SIZE:
        raise WireError("sender must be 21 bytes")
    if len(public_key) != PUBLIC_KEY_SIZE:
        raise WireError("public key must be 32 bytes")
    return (
        sender
        + struct.pack(">Q", nonce)
        + struct.pack(">Q", timestamp_ms)
        + public_key
        + encode_payload(payload)
    )


def decode_transaction(data: bytes) -> Transaction:
    header = ADDRESS_SIZE + 8 + 8 + PUBLIC_KEY_SIZE
    if len(data) < header + 1 + SIGNATURE_SIZE:
        raise WireError("transaction too short")
    sender = data[:ADDRESS_SIZE]
    nonce, timestamp_ms = struct.unpack_from(">QQ", data, ADDRESS_SIZE)
    public_key = data[ADDRESS_SIZE + 16 : header]
    payload = decode_payload(data[header:-SIGNATURE_SIZE])
    return Transaction(
        sender=sender,
        nonce=nonce,
        payload=payload,
        timestamp_ms=timestamp_ms,
        public_key=public_key,
        signature=data[-SIGNATURE_SIZE:],
    )


def sign_transaction(
    keypair: KeyPair, payload: Payload, nonce: int, timestamp_ms: int
) -> Transaction:
    """Build and sign a transaction; Ed25519 is deterministic, so identical
    inputs always produce the identical txid."""
    message = canonical_transaction_bytes(
        keypair.address, nonce, timestamp_ms, keypair.public_key, payload
    )
    return Transaction(
        sender=keypair.address,
        nonce=nonce,
        payload=payload,
        timestamp_ms=timestamp_ms,
        public_key=keypair.public_key,
        signature=keypair.sign(message),
    )


def merkle_root(txids: list[bytes]) -> bytes:
    """Binary Merkle tree over txids; an odd leaf is paired with itself.
    A single leaf is its own root; the empty list maps to 32 zero bytes."""
    if not txids:
        return ZERO32
    level = list(txids)
    while len(level) > 1:
        if len(level) % 2:
            level.append(level[-1])
        level = [
            hashlib.sha256(level[i] + level[i + 1]).digest() for i in range(0, len(level), 2)
        ]
    return level[0]


@dataclass(frozen=True)
class Block:
    height: int
    parent_hash: bytes
    timestamp_ms: int
    tx_root: bytes
    transactions: tuple[Transaction, ...]
    state_root: bytes

    def to_wire(self) -> bytes:
        out = bytearray()
        out += struct.pack(">Q", self.height)
        out += self.parent_hash
        out += struct.pack(">Q", self.timestamp_ms)
        out += self.tx_root
        out += self.state_root
        out += struct.pack(">I", len(self.transactions))
        for tx in self.transactions:
            wire = tx.to_wire()
            out += struct.pack(">I", len(wire))
            out += wire
        return bytes(out)

    @property
    def block_hash(self) -> bytes:
        return hashlib.sha256(self.to_wire()).digest()


def decode_block(data: bytes) -> Block:
    if len(data) < 8 + 32 + 8 + 32 + 32 + 4:
        raise WireError("block too short")
    offset = 0
    (height,) = struct.unpack_from(">Q", data, offset)
    offset += 8
    parent_hash = data[offset : offset + 32]
    offset += 32
    (timestamp_ms,) = struct.unpack_from(">Q", data, offset)
    offset += 8
    tx_root = data[offset : offset + 32]
    offset += 32
    state_root = data[offset : offset + 32]
    offset += 32
    (count,) = struct.unpack_from(">I", data, offset)
    offset += 4
    transactions = []
    for _ in range(count):
        if offset + 4 > len(data):
            raise WireError("block transaction list truncated")
        (length,) = struct.unpack_from(">I", data, offset)
        offset += 4
        transactions.append(decode_transaction(data[offset : offset + length]))
        offset += length
    if offset != len(data):
        raise WireError("trailing bytes after block")
    return Block(height, parent_hash, timestamp_ms, tx_root, tuple(transactions), state_root)


# ---------------------------------------------------------------------------
# Accounts and fees


@dataclass(frozen=True)
class AccountMeta:
    next_nonce: int = 0
    free_bandwidth_remaining: int = 0
    balance_sun: int = 0
    quota_day: int = -1


def reset_quota_if_new_day(meta: AccountMeta, now_ms: int, fees: FeeConfig) -> AccountMeta:
    day = now_ms // MS_PER_DAY
    if day != meta.quota_day:
        return replace(meta, free_bandwidth_remaining=fees.free_bandwidth_per_day, quota_day=day)
    return meta


def charge_bandwidth(meta: AccountMeta, tx_size: int, fees: FeeConfig) -> tuple[AccountMeta, int]:
    """Consume free quota first; overflow bytes cost ``sun_per_byte`` each.
    Raises InsufficientBalance when the account cannot pay the overflow."""
    if tx_size <= meta.free_bandwidth_remaining:
        return replace(meta, free_bandwidth_remaining=meta.free_bandwidth_remaining - tx_size), 0
    overflow = tx_size - meta.free_bandwidth_remaining
    fee = overflow * fees.sun_per_byte
    if fee > meta.balance_sun:
        raise InsufficientBalance(
            f"fee {fee} sun exceeds balance {meta.balance_sun} sun"
        )
    return replace(meta, free_bandwidth_remaining=0, balance_sun=meta.balance_sun - fee), fee


# ---------------------------------------------------------------------------
# Receipts


class ReceiptStatus(enum.Enum):
    SUCCESS = "success"
    REVERTED = "reverted"
    REJECTED_PRE_INCLUSION = "rejected_pre_inclusion"


@dataclass(frozen=True)
class Receipt:
    txid: bytes
    status: ReceiptStatus
    revert_reason: Optional[RevertReason] = None
    reject_reason: Optional[str] = None
    block_height: Optional[int] = None
    bandwidth_consumed: int = 0
    fee_paid: int = 0
    digest: Optional[bytes] = None


# ---------------------------------------------------------------------------
# The node


class Node:
    """Single-producer chain node: registry state, mempool, chain, accounts.

    With ``data_dir`` set, blocks are persisted as an append-only log and the
    node restores (and re-verifies) the whole chain on startup. Without it the
    node is purely in-memory, which tests and benchmarks use.
    """

    def __init__(
        self,
        genesis: GenesisConfig | None = None,
        chain_config: ChainConfig | None = None,
        data_dir: Path | str | None = None,
    ):
        self.genesis_config = genesis
        self.config = chain_config or ChainConfig()
        self.data_dir = Path(data_dir) if data_dir is not None else None
        self._lock = threading.RLock()

        self._blocks: list[Block] = []
        self._accounts: dict[bytes, AccountMeta] = {}
        self._receipts: dict[bytes, Receipt] = {}
        self._seen_txids: set[bytes] = set()
        self._pending: dict[bytes, dict[int, Transaction]] = {}
        self._pending_count = 0
        self._total_fees_sun = 0

        self._blocks_file = None
        self._txids_file = None
        if self.data_dir is not None:
            self.data_dir.mkdir(parents=True, exist_ok=True)
            self._restore_or_init()
        else:
            if genesis is None:
                raise ValueError("an in-memory node needs a genesis config")
            self._state = self._genesis_state()
            self._blocks.append(self._make_genesis_block())

    # -- construction helpers ------------------------------------------------

    def _genesis_state(self) -> RegistryState:
        return RegistryState.genesis(
            admin=self.genesis_config.admin,
            initial_issuers=self.genesis_config.initial_issuers,
            initial_total_certificates=self.genesis_config.initial_total_certificates,
        )

    def _make_genesis_block(self) -> Block:
        return Block(
            height=0,
            parent_hash=ZERO32,
            timestamp_ms=self.genesis_config.timestamp_ms,
            tx_root=ZERO32,
            transactions=(),
            state_root=contract.state_root(self._genesis_state()),
        )

    def _restore_or_init(self) -> None:
        blocks_path = self.data_dir / "blocks.log"
        txids_path = self.data_dir / "txids.idx"
        genesis_path = self.data_dir / "genesis.json"
        if blocks_path.exists():
            self._load_genesis_doc(genesis_path)
            self._state = self._genesis_state()
            for raw in _read_length_prefixed(blocks_path):
                block = decode_block(raw)
                if block.height == 0:
                    self._verify_and_adopt_genesis(block)
                else:
                    self._replay_block(block)
            if txids_path.exists():
                raw = txids_path.read_bytes()
                for i in range(0, len(raw), 32):
                    self._seen_txids.add(raw[i : i + 32])
        else:
            if self.genesis_config is None:
                raise ValueError(f"no chain found under {self.data_dir}")
            self._state = self._genesis_state()
            self._write_genesis_doc(genesis_path)
            self._blocks.append(self._make_genesis_block())
            with open(blocks_path, "ab") as handle:
                _append_length_prefixed(handle, self._blocks[0].to_wire())
        self._blocks_file = open(blocks_path, "ab")
        self._txids_file = open(txids_path, "ab")

    def _write_genesis_doc(self, path: Path) -> None:
        import json

        doc = {
            "admin": self.genesis_config.admin.hex(),
            "timestamp_ms": self.genesis_config.timestamp_ms,
            "initial_issuers": [a.hex() for a in self.genesis_config.initial_issuers],
            "initial_total_certificates": self.genesis_config.initial_total_certificates,
            "free_bandwidth_per_day": self.config.fees.free_bandwidth_per_day,
            "sun_per_byte": self.config.fees.sun_per_byte,
            "initial_balance_sun": self.config.fees.initial_balance_sun,
        }
        path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")

    def _load_genesis_doc(self, path: Path) -> None:
        import json

        doc = json.loads(path.read_text())
        self.genesis_config = GenesisConfig(
            admin=bytes.fromhex(doc["admin"]),
            timestamp_ms=doc["timestamp_ms"],
            initial_issuers=tuple(bytes.fromhex(a) for a in doc["initial_issuers"]),
            initial_total_certificates=doc["initial_total_certificates"],
        )
        self.config = replace(
            self.config,
            fees=FeeConfig(
                free_bandwidth_per_day=doc["free_bandwidth_per_day"],
                sun_per_byte=doc["sun_per_byte"],
                initial_balance_sun=doc["initial_balance_sun"],
            ),
        )

    def _verify_and_adopt_genesis(self, block: Block) -> None:
        expected = self._make_genesis_block()
        if block.to_wire() != expected.to_wire():
            raise WireError("stored genesis block does not match genesis config")
        self._blocks.append(block)

    def _replay_block(self, block: Block) -> None:
        parent = self._blocks[-1]
        if block.parent_hash != parent.block_hash:
            raise WireError(f"block {block.height}: broken parent link")
        if block.height != parent.height + 1:
            raise WireError(f"block {block.height}: non-consecutive height")
        txids = [tx.txid for tx in block.transactions]
        if merkle_root(txids) != block.tx_root:
            raise WireError(f"block {block.height}: tx root mismatch")
        new_state, receipts, fees = self._execute(
            self._state, list(block.transactions), block.height, block.timestamp_ms
        )
        if contract.state_root(new_state) != block.state_root:
            raise WireError(f"block {block.height}: state root mismatch")
        self._state = new_state
        self._total_fees_sun += fees
        for receipt in receipts:
            self._receipts[receipt.txid] = receipt
        self._seen_txids.update(txids)
        self._blocks.append(block)

    # -- account helpers -----------------------------------------------------

    def _account(self, address: bytes) -> AccountMeta:
        meta = self._accounts.get(address)
        if meta is None:
            meta = AccountMeta(
                next_nonce=0,
                free_bandwidth_remaining=self.config.fees.free_bandwidth_per_day,
                balance_sun=self.config.fees.initial_balance_sun,
                quota_day=self.genesis_config.timestamp_ms // MS_PER_DAY,
            )
        return meta

    def account_meta(self, address: bytes) -> AccountMeta:
        with self._lock:
            return self._account(address)

    def next_nonce(self, address: bytes) -> int:
        """Next unused nonce for a sender, counting contiguous pending txs."""
        with self._lock:
            expected = self._account(address).next_nonce
            pending = self._pending.get(address, {})
            while expected in pending:
                expected += 1
            return expected

    # -- submission ----------------------------------------------------------

    def submit(self, tx: Transaction) -> bytes:
        """Admit a transaction to the mempool and return its txid.

        Raises SubmitRejected for a bad signature, a replayed txid, a nonce out
        of sequence, or payload parameters that fail static validation.
        """
        tx = decode_transaction(tx.to_wire())  # normalization barrier: in-process
        # submissions take the same path as wire-decoded ones
        with self._lock:
            if not verify_signature(tx.public_key, tx.signature, tx.canonical_bytes()):
                raise SubmitRejected(RejectReason.BAD_SIGNATURE)
            if address_from_public_key(tx.public_key) != tx.sender:
                raise SubmitRejected(
                    RejectReason.BAD_SIGNATURE, "public key does not derive sender address"
                )
            txid = tx.txid
            if txid in self._seen_txids:
                raise SubmitRejected(RejectReason.DUPLICATE_TRANSACTION, txid.hex())
            expected = self._account(tx.sender).next_nonce
            pending = self._pending.setdefault(tx.sender, {})
            while expected in pending:
                expected += 1
            if tx.nonce < expected:
                raise SubmitRejected(
                    RejectReason.STALE_NONCE, f"nonce {tx.nonce}, expected {expected}"
                )
            if tx.nonce > expected:
                raise SubmitRejected(
                    RejectReason.FUTURE_NONCE, f"nonce {tx.nonce}, expected {expected}"
                )
            self._validate_payload(tx.payload)
            pending[tx.nonce] = tx
            self._pending_count += 1
            self._seen_txids.add(txid)
            if self._txids_file is not None:
                self._txids_file.write(txid)
                self._txids_file.flush()
            return txid

    @staticmethod
    def _validate_payload(payload: Payload) -> None:
        if isinstance(payload, AuthorizeIssuer):
            if len(payload.issuer) != ADDRESS_SIZE or payload.issuer[0] != 0x41:
                raise SubmitRejected(RejectReason.INVALID_PARAMETERS, "malformed issuer address")
        elif isinstance(payload, RegisterCertificate):
            try:
                validate_certificate(payload.cert)
            except InvalidField as exc:
                raise SubmitRejected(RejectReason.INVALID_PARAMETERS, str(exc)) from None
        else:
            raise SubmitRejected(RejectReason.INVALID_PARAMETERS, "unknown payload kind")

    # -- block production ----------------------------------------------------

    def produce_block(self, now_ms: int) -> Block:
        """Drain the mempool in (sender, nonce) order and append a block.

        Individual transactions may revert; the block still forms. An empty
        mempool yields an empty block. Timestamps never move backwards; a
        stale wall clock is clamped to the current head's timestamp.
        """
        with self._lock:
            parent = self._blocks[-1]
            height = parent.height + 1
            timestamp = max(now_ms, parent.timestamp_ms)
            batch = self._drain(self.config.max_block_txs)
            new_state, receipts, fees = self._execute(self._state, batch, height, timestamp)
            included_txs = tuple(
                tx
                for tx, receipt in zip(batch, receipts)
                if receipt.status is not ReceiptStatus.REJECTED_PRE_INCLUSION
            )
            block = Block(
                height=height,
                parent_hash=parent.block_hash,
                timestamp_ms=timestamp,
                tx_root=merkle_root([tx.txid for tx in included_txs]),
                transactions=included_txs,
                state_root=contract.state_root(new_state),
            )
            self._state = new_state
            self._total_fees_sun += fees
            for receipt in receipts:
                self._receipts[receipt.txid] = receipt
            self._blocks.append(block)
            if self._blocks_file is not None:
                _append_length_prefixed(self._blocks_file, block.to_wire())
                self._blocks_file.flush()
            return block

    def _drain(self, limit: int) -> list[Transaction]:
        batch: list[Transaction] = []
        for sender in sorted(self._pending):
            queue = self._pending[sender]
            nonce = self._account(sender).next_nonce
            while nonce in queue and len(batch) < limit:
                batch.append(queue.pop(nonce))
                self._pending_count -= 1
                nonce += 1
            if not queue:
                del self._pending[sender]
            if len(batch) >= limit:
                break
        return batch

    def _execute(
        self,
        state: RegistryState,
        batch: list[Transaction],
        height: int,
        block_timestamp_ms: int,
    ) -> tuple[RegistryState, list[Receipt], int]:
        """Charge fees and apply payloads; the shared path for production and
        restart replay, so replay reproduces state roots exactly."""
        receipts: list[Receipt] = []
        total_fees = 0
        for tx in batch:
            meta = reset_quota_if_new_day(
                self._account(tx.sender), block_timestamp_ms, self.config.fees
            )
            size = tx.size
            try:
                meta, fee = charge_bandwidth(meta, size, self.config.fees)
            except InsufficientBalance as exc:
                # Dropped, not included: the nonce stays unconsumed, so later
                # pending txs from this sender wait until it is refilled.
                self._accounts[tx.sender] = meta
                receipts.append(
                    Receipt(
                        txid=tx.txid,
                        status=ReceiptStatus.REJECTED_PRE_INCLUSION,
                        reject_reason=f"{RejectReason.INSUFFICIENT_BALANCE.value}: {exc}",
                        bandwidth_consumed=0,
                        fee_paid=0,
                    )
                )
                continue
            state, outcome = contract.apply_call(state, tx.sender, tx.payload, height)
            self._accounts[tx.sender] = replace(meta, next_nonce=tx.nonce + 1)
            total_fees += fee
            if outcome.success:
                receipts.append(
                    Receipt(
                        txid=tx.txid,
                        status=ReceiptStatus.SUCCESS,
                        block_height=height,
                        bandwidth_consumed=size,
                        fee_paid=fee,
                        digest=outcome.digest,
                    )
                )
            else:
                receipts.append(
                    Receipt(
                        txid=tx.txid,
                        status=ReceiptStatus.REVERTED,
                        revert_reason=outcome.revert_reason,
                        block_height=height,
                        bandwidth_consumed=size,
                        fee_paid=fee,
                    )
                )
        return state, receipts, total_fees

    # -- reads ---------------------------------------------------------------

    def get_receipt(self, txid: bytes) -> Receipt:
        with self._lock:
            try:
                return self._receipts[txid]
            except KeyError:
                raise NotFound(txid.hex()) from None

    def get_block(self, height: int) -> Block:
        with self._lock:
            if 0 <= height < len(self._blocks):
                return self._blocks[height]
            raise NotFound(str(height))

    def chain_head(self) -> tuple[int, bytes]:
        with self._lock:
            head = self._blocks[-1]
            return head.height, head.block_hash

    def state_snapshot(self) -> RegistryState:
        with self._lock:
            return self._state

    def mempool_size(self) -> int:
        with self._lock:
            return self._pending_count

    def confirmation_height(self, inclusion_height: int) -> int:
        return inclusion_height + self.config.confirmation_depth

    def is_confirmed(self, receipt: Receipt) -> bool:
        if receipt.block_height is None:
            return False
        with self._lock:
            return self._blocks[-1].height >= self.confirmation_height(receipt.block_height)

    def stats(self) -> dict:
        with self._lock:
            head = self._blocks[-1]
            height = head.height
            if height > 0:
                mean_interval = (head.timestamp_ms - self._blocks[0].timestamp_ms) / height
            else:
                mean_interval = 0.0
            return {
                "chain_height": height,
                "mean_block_interval_ms": mean_interval,
                "total_certificates": self._state.total_certificates,
                "total_fees_sun": self._total_fees_sun,
                "mempool_size": self._pending_count,
            }

    def close(self) -> None:
        with self._lock:
            for handle in (self._blocks_file, self._txids_file):
                if handle is not None:
                    handle.close()
            self._blocks_file = None
            self._txids_file = None


def _append_length_prefixed(handle, data: bytes) -> None:
    handle.write(struct.pack(">I", len(data)))
    handle.write(data)


def _read_length_prefixed(path: Path):
    with open(path, "rb") as handle:
        while True:
            header = handle.read(4)
            if not header:
                return
            if len(header) != 4:
                raise WireError("truncated length prefix in block log")
            (length,) = struct.unpack(">I", header)
            data = handle.read(length)
            if len(data) != length:
                raise WireError("truncated record in block log")
            yield data
