"""HTTP node: issuance, validation, metadata, and chain-inspection endpoints.

Authentication is a detached-signature scheme: the request body carries the
transaction fields (payload data, nonce, timestamp) and the ``X-Sender``,
``X-Public-Key``, and ``X-Signature`` headers carry the sender address, the
raw public key (hex), and an Ed25519 signature (hex) over the canonical
transaction bytes rebuilt from the body. That same signature is the
transaction signature, so the node never holds client keys. Clients fetch
their next nonce from ``GET /v1/accounts/{address}``.

Error bodies are ``{"error": {"machine_code": ..., "message": ...}}``; machine
codes mirror the contract revert reasons and the pre-inclusion rejection
reasons. Caller faults are 4xx; 5xx is reserved for internal faults.
"""

from __future__ import annotations

import threading
import time
from typing import Any, Optional

from fastapi import FastAPI, Header, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, Response
from pydantic import BaseModel, Field

from . import cas as cas_mod
from .cas import ContentId, ContentStore, metadata_document
from .certificate import CertificateData, InvalidField, cert_hash, parse_digest_hex
from .chain import (
    Node,
    NotFound,
    ReceiptStatus,
    RejectReason,
    SubmitRejected,
    Transaction,
    canonical_transaction_bytes,
)
from .contract import (
    AuthorizeIssuer,
    Payload,
    RegisterCertificate,
    RevertReason,
    validate_certificate_record,
)
from .keys import (
    AddressError,
    address_from_public_key,
    decode_address,
    encode_address,
    verify_signature,
)


class ApiError(Exception):
    def __init__(self, http_status: int, machine_code: str, message: str):
        super().__init__(message)
        self.http_status = http_status
        self.machine_code = machine_code
        self.message = message


_REJECT_STATUS = {
    RejectReason.DUPLICATE_TRANSACTION: 409,
    RejectReason.STALE_NONCE: 409,
    RejectReason.FUTURE_NONCE: 409,
    RejectReason.BAD_SIGNATURE: 403,
    RejectReason.INVALID_PARAMETERS: 400,
    RejectReason.INSUFFICIENT_BALANCE: 402,
}


class IssuerRequest(BaseModel):
    issuer_address: str
    nonce: int = Field(ge=0)
    timestamp_ms: int = Field(ge=0)


class CertificateRequest(BaseModel):
    certificate: dict[str, Any]
    extras: dict[str, Any] = Field(default_factory=dict)
    nonce: int = Field(ge=0)
    timestamp_ms: int = Field(ge=0)


def create_app(node: Node, store: ContentStore, cors_origin: str = "*") -> FastAPI:
    app = FastAPI(title="certchain node", version="0.1.0", docs_url=None, redoc_url=None)
    app.add_middleware(
        CORSMiddleware,
        allow_origins=[cors_origin] if cors_origin != "*" else ["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    app.state.node = node
    app.state.store = store

    @app.exception_handler(ApiError)
    async def _api_error_handler(request: Request, exc: ApiError):
        return JSONResponse(
            status_code=exc.http_status,
            content={"error": {"machine_code": exc.machine_code, "message": exc.message}},
        )

    @app.exception_handler(RequestValidationError)
    async def _validation_error_handler(request: Request, exc: RequestValidationError):
        return JSONResponse(
            status_code=400,
            content={"error": {"machine_code": "invalid_parameters", "message": str(exc.errors())}},
        )

    # -- write endpoints ---------------------------------------------------

    @app.post("/v1/issuers", status_code=202)
    def authorize_issuer_endpoint(
        body: IssuerRequest,
        x_sender: str = Header(),
        x_public_key: str = Header(),
        x_signature: str = Header(),
    ):
        try:
            issuer = decode_address(body.issuer_address)
        except AddressError as err:
            raise ApiError(400, "invalid_parameters", f"malformed issuer address: {err}")
        payload = AuthorizeIssuer(issuer=issuer)
        tx = _authenticated_transaction(
            payload, body.nonce, body.timestamp_ms, x_sender, x_public_key, x_signature
        )
        if tx.sender != node.genesis_config.admin:
            raise ApiError(403, RevertReason.NOT_ADMIN.value, "request not signed by the admin key")
        txid = _submit(node, tx)
        return {"txid": txid.hex()}

    @app.post("/v1/certificates", status_code=202)
    def register_certificate_endpoint(
        body: CertificateRequest,
        x_sender: str = Header(),
        x_public_key: str = Header(),
        x_signature: str = Header(),
    ):
        try:
            cert = CertificateData.from_mapping(body.certificate)
        except InvalidField as err:
            # rejected before any transaction is created
            raise ApiError(400, RevertReason.INVALID_PARAMETERS.value, str(err))
        document = metadata_document(cert, body.extras)
        try:
            cid = store.put(document)  # stored first; idempotent, orphans are harmless
        except cas_mod.TooLarge as err:
            raise ApiError(400, RevertReason.INVALID_PARAMETERS.value, str(err))
        payload = RegisterCertificate(cert=cert, metadata_cid=cid)
        tx = _authenticated_transaction(
            payload, body.nonce, body.timestamp_ms, x_sender, x_public_key, x_signature
        )
        txid = _submit(node, tx)
        return {
            "txid": txid.hex(),
            "digest": cert_hash(cert).hex(),
            "metadata_cid": cid.encode(),
        }

    # -- read endpoints ------------------------------------------------------

    @app.get("/v1/certificates/{digest_hex}")
    def validate_endpoint(digest_hex: str, issuer: str):
        try:
            digest = parse_digest_hex(digest_hex)
        except ValueError as err:
            raise ApiError(400, "invalid_parameters", str(err))
        try:
            issuer_address = decode_address(issuer)
        except AddressError as err:
            raise ApiError(400, "invalid_parameters", f"malformed issuer address: {err}")
        result = validate_certificate_record(node.state_snapshot(), digest, issuer_address)
        body: dict[str, Any] = {"status": result.status.value, "record": None, "metadata_cid": None}
        if result.record is not None:
            body["record"] = _record_json(result.record)
            body["metadata_cid"] = result.record.metadata_cid.encode()
        return body

    @app.get("/v1/metadata/{cid_text}")
    def metadata_endpoint(cid_text: str):
        try:
            cid = ContentId.decode(cid_text)
        except ValueError as err:
            raise ApiError(400, "invalid_parameters", str(err))
        try:
            content = store.get(cid)
        except cas_mod.NotFound:
            raise ApiError(404, "not_found", f"no object for {cid_text}")
        except cas_mod.CorruptObject:
            raise ApiError(500, "corrupt_object", f"stored object fails digest check: {cid_text}")
        return Response(content=content, media_type="application/json")

    @app.get("/v1/receipts/{txid_hex}")
    def receipt_endpoint(txid_hex: str):
        try:
            txid = bytes.fromhex(txid_hex)
        except ValueError:
            raise ApiError(400, "invalid_parameters", "txid must be hex")
        try:
            receipt = node.get_receipt(txid)
        except NotFound:
            raise ApiError(404, "not_found", f"no receipt for {txid_hex}")
        return {
            "txid": receipt.txid.hex(),
            "status": receipt.status.value,
            "revert_reason": receipt.revert_reason.value if receipt.revert_reason else None,
            "reject_reason": receipt.reject_reason,
            "block_height": receipt.block_height,
            "bandwidth_consumed": receipt.bandwidth_consumed,
            "fee_paid": receipt.fee_paid,
            "digest": receipt.digest.hex() if receipt.digest else None,
            "confirmed": node.is_confirmed(receipt),
        }

    @app.get("/v1/blocks/{height}")
    def block_endpoint(height: int):
        try:
            block = node.get_block(height)
        except NotFound:
            raise ApiError(404, "not_found", f"no block at height {height}")
        return {
            "height": block.height,
            "parent_hash": block.parent_hash.hex(),
            "timestamp_ms": block.timestamp_ms,
            "tx_root": block.tx_root.hex(),
            "state_root": block.state_root.hex(),
            "block_hash": block.block_hash.hex(),
            "transactions": [
                {
                    "txid": tx.txid.hex(),
                    "sender": encode_address(tx.sender),
                    "nonce": tx.nonce,
                    "kind": type(tx.payload).__name__,
                }
                for tx in block.transactions
            ],
        }

    @app.get("/v1/stats")
    def stats_endpoint():
        return node.stats()

    @app.get("/v1/accounts/{address}")
    def account_endpoint(address: str):
        try:
            addr = decode_address(address)
        except AddressError as err:
            raise ApiError(400, "invalid_parameters", f"malformed address: {err}")
        meta = node.account_meta(addr)
        return {
            "address": address,
            "next_nonce": node.next_nonce(addr),
            "included_nonce": meta.next_nonce,
            "free_bandwidth_remaining": meta.free_bandwidth_remaining,
            "balance_sun": meta.balance_sun,
        }

    def _authenticated_transaction(
        payload: Payload,
        nonce: int,
        timestamp_ms: int,
        x_sender: str,
        x_public_key: str,
        x_signature: str,
    ) -> Transaction:
        try:
            sender = decode_address(x_sender)
        except AddressError as err:
            raise ApiError(400, "invalid_parameters", f"malformed X-Sender: {err}")
        try:
            public_key = bytes.fromhex(x_public_key)
            signature = bytes.fromhex(x_signature)
        except ValueError:
            raise ApiError(400, "invalid_parameters", "X-Public-Key and X-Signature must be hex")
        if len(public_key) != 32 or address_from_public_key(public_key) != sender:
            raise ApiError(
                403,
                RevertReason.UNKNOWN_ISSUER.value,
                "public key does not derive the X-Sender address",
            )
        message = canonical_transaction_bytes(sender, nonce, timestamp_ms, public_key, payload)
        if len(signature) != 64 or not verify_signature(public_key, signature, message):
            raise ApiError(
                403, RejectReason.BAD_SIGNATURE.value, "signature does not cover the request body"
            )
        return Transaction(
            sender=sender,
            nonce=nonce,
            payload=payload,
            timestamp_ms=timestamp_ms,
            public_key=public_key,
            signature=signature,
        )

    return app


def _submit(node: Node, tx: Transaction) -> bytes:
    try:
        return node.submit(tx)
    except SubmitRejected as err:
        raise ApiError(_REJECT_STATUS[err.reason], err.reason.value, str(err)) from None


def _record_json(record) -> dict[str, Any]:
    return {
        "digest": record.digest.hex(),
        "certificate_id": record.certificate_id,
        "issuer": encode_address(record.issuer),
        "completion_date": record.completion_date.isoformat(),
        "issue_date": record.issue_date.isoformat(),
        "metadata_cid": record.metadata_cid.encode(),
        "registered_at": record.registered_at,
    }


class BlockProducer:
    """Wall-clock block production for a served node; one thread, one writer."""

    def __init__(self, node: Node, block_interval_ms: int):
        self.node = node
        self.block_interval_ms = block_interval_ms
        self._stop = threading.Event()
        self._thread: Optional[threading.Thread] = None

    def start(self) -> None:
        self._thread = threading.Thread(target=self._run, name="block-producer", daemon=True)
        self._thread.start()

    def _run(self) -> None:
        interval = self.block_interval_ms / 1000
        while not self._stop.wait(interval):
            self.node.produce_block(int(time.time() * 1000))

    def stop(self) -> None:
        self._stop.set()
        if self._thread is not None:
            self._thread.join(timeout=5)
