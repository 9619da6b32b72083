"""Deterministic registry state machine: issuer authorization, duplicate
prevention, and public validation.

All mutating operations are pure: they take a state and return a new one, or
raise :class:`ContractRevert`. :func:`apply_call` is the single dispatch point
the block executor uses; on revert it hands back the original state unchanged
together with the reason, so a failed call can never leave a partial mutation.

Parameter validation runs before authorization checks, so a malformed payload
is rejected before any state is read.
"""

from __future__ import annotations

import enum
import hashlib
import json
from dataclasses import dataclass, replace
from datetime import date
from typing import Optional, Union

from .cas import ContentId
from .certificate import CertificateData, InvalidField, cert_hash, validate_certificate
from .keys import ADDRESS_SIZE, encode_address

U64_MAX = 2**64 - 1


class RevertReason(enum.Enum):
    NOT_ADMIN = "not_admin"
    ISSUER_NOT_AUTHORIZED = "issuer_not_authorized"
    DUPLICATE_CERTIFICATE = "duplicate_certificate"
    INVALID_PARAMETERS = "invalid_parameters"
    COUNTER_OVERFLOW = "counter_overflow"
    ALREADY_AUTHORIZED = "already_authorized"
    UNKNOWN_ISSUER = "unknown_issuer"


class ContractRevert(Exception):
    """Atomic rejection of a state transition."""

    def __init__(self, reason: RevertReason, detail: str = ""):
        super().__init__(f"{reason.value}" + (f": {detail}" if detail else ""))
        self.reason = reason
        self.detail = detail


@dataclass(frozen=True)
class AuthorizeIssuer:
    issuer: bytes


@dataclass(frozen=True)
class RegisterCertificate:
    cert: CertificateData
    metadata_cid: ContentId


Payload = Union[AuthorizeIssuer, RegisterCertificate]


@dataclass(frozen=True)
class CertificateRecord:
    """The on-chain record stored under the certificate digest."""

    digest: bytes
    certificate_id: str
    issuer: bytes
    completion_date: date
    issue_date: date
    metadata_cid: ContentId
    registered_at: int


class ValidationStatus(enum.Enum):
    VALID = "valid"
    NOT_FOUND = "not_found"
    ISSUER_MISMATCH = "issuer_mismatch"


@dataclass(frozen=True)
class ValidationResult:
    status: ValidationStatus
    record: Optional[CertificateRecord] = None


@dataclass(frozen=True)
class RegistryState:
    """Contract storage: admin, authorized-issuer set, digest-keyed records, counter."""

    admin: bytes
    authorized_issuers: frozenset[bytes]
    certificates: "dict[bytes, CertificateRecord]"
    total_certificates: int

    @classmethod
    def genesis(
        cls,
        admin: bytes,
        initial_issuers: tuple[bytes, ...] = (),
        initial_total_certificates: int = 0,
    ) -> "RegistryState":
        """Fresh state. ``initial_total_certificates`` exists so tests can force
        the counter to its limit without issuing 2**64 certificates."""
        return cls(
            admin=admin,
            authorized_issuers=frozenset(initial_issuers),
            certificates={},
            total_certificates=initial_total_certificates,
        )


def _check_address(value: bytes, what: str) -> None:
    if not isinstance(value, bytes) or len(value) != ADDRESS_SIZE:
        raise ContractRevert(RevertReason.INVALID_PARAMETERS, f"malformed {what} address")


def authorize_issuer(state: RegistryState, caller: bytes, issuer: bytes) -> RegistryState:
    """Admin-only: add an address to the authorized-issuer set."""
    _check_address(issuer, "issuer")
    if caller != state.admin:
        raise ContractRevert(RevertReason.NOT_ADMIN)
    if issuer in state.authorized_issuers:
        raise ContractRevert(RevertReason.ALREADY_AUTHORIZED, encode_address(issuer))
    return replace(state, authorized_issuers=state.authorized_issuers | {issuer})


def register_certificate(
    state: RegistryState,
    caller: bytes,
    cert: CertificateData,
    metadata_cid: ContentId,
    height: int,
) -> tuple[RegistryState, bytes]:
    """Record a certificate under its digest; increments the counter with a
    checked bound so the limit reverts instead of wrapping."""
    try:
        validate_certificate(cert)
    except InvalidField as exc:
        raise ContractRevert(RevertReason.INVALID_PARAMETERS, str(exc)) from None
    if not isinstance(metadata_cid, ContentId):
        raise ContractRevert(RevertReason.INVALID_PARAMETERS, "missing metadata content id")
    if caller not in state.authorized_issuers:
        raise ContractRevert(RevertReason.ISSUER_NOT_AUTHORIZED)
    digest = cert_hash(cert)
    if digest in state.certificates:
        raise ContractRevert(RevertReason.DUPLICATE_CERTIFICATE, digest.hex())
    if state.total_certificates >= U64_MAX:
        raise ContractRevert(RevertReason.COUNTER_OVERFLOW)
    record = CertificateRecord(
        digest=digest,
        certificate_id=cert.to_dict()["certificate_id"],
        issuer=caller,
        completion_date=cert.completion_date,
        issue_date=cert.issue_date,
        metadata_cid=metadata_cid,
        registered_at=height,
    )
    certificates = dict(state.certificates)
    certificates[digest] = record
    new_state = replace(
        state,
        certificates=certificates,
        total_certificates=state.total_certificates + 1,
    )
    return new_state, digest


def validate_certificate_record(
    state: RegistryState, digest: bytes, issuer: bytes
) -> ValidationResult:
    """Public read-only lookup: Valid, NotFound, or IssuerMismatch. Never mutates."""
    record = state.certificates.get(digest)
    if record is None:
        return ValidationResult(status=ValidationStatus.NOT_FOUND)
    if record.issuer != issuer:
        return ValidationResult(status=ValidationStatus.ISSUER_MISMATCH, record=record)
    return ValidationResult(status=ValidationStatus.VALID, record=record)


@dataclass(frozen=True)
class CallOutcome:
    success: bool
    revert_reason: Optional[RevertReason] = None
    digest: Optional[bytes] = None


def apply_call(
    state: RegistryState, caller: bytes, payload: Payload, height: int
) -> tuple[RegistryState, CallOutcome]:
    """Dispatch a payload; reverts return the input state untouched plus the reason."""
    try:
        _check_address(caller, "caller")
        if isinstance(payload, AuthorizeIssuer):
            return authorize_issuer(state, caller, payload.issuer), CallOutcome(success=True)
        if isinstance(payload, RegisterCertificate):
            new_state, digest = register_certificate(
                state, caller, payload.cert, payload.metadata_cid, height
            )
            return new_state, CallOutcome(success=True, digest=digest)
        raise ContractRevert(RevertReason.INVALID_PARAMETERS, "unknown payload kind")
    except ContractRevert as exc:
        return state, CallOutcome(success=False, revert_reason=exc.reason)


def serialize_state(state: RegistryState) -> bytes:
    """Deterministic snapshot with map entries ordered by digest bytes.

    Hex keys sort identically to the underlying bytes, so plain lexicographic
    JSON key ordering satisfies the byte-order requirement.
    """
    doc = {
        "admin": state.admin.hex(),
        "authorized_issuers": sorted(a.hex() for a in state.authorized_issuers),
        "certificates": {
            digest.hex(): {
                "certificate_id": record.certificate_id,
                "issuer": record.issuer.hex(),
                "completion_date": record.completion_date.isoformat(),
                "issue_date": record.issue_date.isoformat(),
                "metadata_cid": record.metadata_cid.encode(),
                "registered_at": record.registered_at,
            }
            for digest, record in state.certificates.items()
        },
        "total_certificates": state.total_certificates,
    }
    return json.dumps(doc, sort_keys=True, separators=(",", ":"), ensure_ascii=False).encode("utf-8")


def state_root(state: RegistryState) -> bytes:
    return hashlib.sha256(serialize_state(state)).digest()


def deserialize_state(data: bytes) -> RegistryState:
    doc = json.loads(data.decode("utf-8"))
    certificates = {}
    for digest_hex, rec in doc["certificates"].items():
        digest = bytes.fromhex(digest_hex)
        certificates[digest] = CertificateRecord(
            digest=digest,
            certificate_id=rec["certificate_id"],
            issuer=bytes.fromhex(rec["issuer"]),
            completion_date=date.fromisoformat(rec["completion_date"]),
            issue_date=date.fromisoformat(rec["issue_date"]),
            metadata_cid=ContentId.decode(rec["metadata_cid"]),
            registered_at=rec["registered_at"],
        )
    return RegistryState(
        admin=bytes.fromhex(doc["admin"]),
        authorized_issuers=frozenset(bytes.fromhex(a) for a in doc["authorized_issuers"]),
        certificates=certificates,
        total_certificates=doc["total_certificates"],
    )
