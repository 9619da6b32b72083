"""Certificate attributes, their canonical byte encoding, and the identifying digest.

The canonical encoding is a bit-exact public format so third parties can
recompute digests: the six fields in fixed order (certificate_id, holder_name,
course_title, institution_name, completion_date, issue_date), each emitted as a
4-byte big-endian length prefix followed by the field's UTF-8 bytes. String
fields are trimmed of surrounding whitespace and normalized to Unicode NFC
before encoding; dates are emitted as ISO-8601 ``YYYY-MM-DD``. The certificate
digest is SHA-256 over those bytes.
"""

from __future__ import annotations

import hashlib
import struct
import unicodedata
from dataclasses import dataclass, fields as dataclass_fields
from datetime import date
from typing import Any, Iterator, Mapping

DIGEST_SIZE = 32

FIELD_ORDER = (
    "certificate_id",
    "holder_name",
    "course_title",
    "institution_name",
    "completion_date",
    "issue_date",
)

_STRING_FIELDS = FIELD_ORDER[:4]
_DATE_FIELDS = FIELD_ORDER[4:]


class InvalidField(ValueError):
    """A certificate field fails validation (empty, malformed date, bad date order)."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


@dataclass(frozen=True)
class CertificateData:
    """The raw academic certificate attributes entered by an issuer."""

    certificate_id: str
    holder_name: str
    course_title: str
    institution_name: str
    completion_date: date
    issue_date: date

    @classmethod
    def from_mapping(cls, data: Mapping[str, Any]) -> "CertificateData":
        """Build from key/value input (e.g. parsed JSON), raising InvalidField early.

        Key order in the input never matters; the canonical field order is fixed.
        """
        kwargs: dict[str, Any] = {}
        for name in FIELD_ORDER:
            if name not in data:
                raise InvalidField(name, "missing")
            value = data[name]
            if name in _DATE_FIELDS:
                kwargs[name] = _parse_date(name, value)
            else:
                if not isinstance(value, str):
                    raise InvalidField(name, "expected a string")
                kwargs[name] = value
        cert = cls(**kwargs)
        validate_certificate(cert)
        return cert

    def to_dict(self) -> dict[str, str]:
        """Normalized field mapping with dates rendered as ISO-8601 strings."""
        return {name: value for name, value in _normalized_items(self)}


def _parse_date(field: str, value: Any) -> date:
    if isinstance(value, date):
        return value
    if not isinstance(value, str):
        raise InvalidField(field, "expected an ISO-8601 date string")
    try:
        return date.fromisoformat(value.strip())
    except ValueError:
        raise InvalidField(field, f"malformed date {value!r}") from None


def _normalize_string(value: str) -> str:
    return unicodedata.normalize("NFC", value).strip()


def _normalized_items(cert: CertificateData) -> Iterator[tuple[str, str]]:
    for name in _STRING_FIELDS:
        yield name, _normalize_string(getattr(cert, name))
    for name in _DATE_FIELDS:
        yield name, getattr(cert, name).isoformat()


def validate_certificate(cert: CertificateData) -> None:
    """Raise InvalidField unless every field satisfies the certificate invariants."""
    for name in _STRING_FIELDS:
        value = getattr(cert, name)
        if not isinstance(value, str):
            raise InvalidField(name, "expected a string")
        if not _normalize_string(value):
            raise InvalidField(name, "must be non-empty")
    for name in _DATE_FIELDS:
        value = getattr(cert, name)
        if not isinstance(value, date):
            raise InvalidField(name, "expected a date")
    if cert.completion_date > cert.issue_date:
        raise InvalidField("completion_date", "must not be after issue_date")


def encode_fields(cert: CertificateData) -> bytes:
    """Length-prefixed field encoding without validation.

    The wire layer needs to carry malformed certificates (so downstream guards
    can reject them); use :func:`canonicalize` when validity is required.
    """
    out = bytearray()
    for _, value in _normalized_items(cert):
        raw = value.encode("utf-8")
        out += struct.pack(">I", len(raw))
        out += raw
    return bytes(out)


def canonicalize(cert: CertificateData) -> bytes:
    """Deterministic canonical byte encoding of a well-formed certificate."""
    validate_certificate(cert)
    return encode_fields(cert)


def cert_hash(cert: CertificateData) -> bytes:
    """32-byte SHA-256 digest of the canonical encoding; the certificate's identity."""
    return hashlib.sha256(canonicalize(cert)).digest()


def parse_canonical(data: bytes) -> CertificateData:
    """Recover the exact field tuple from a canonical encoding (round-trip inverse)."""
    values: list[str] = []
    offset = 0
    for name in FIELD_ORDER:
        if offset + 4 > len(data):
            raise InvalidField(name, "truncated encoding")
        (length,) = struct.unpack_from(">I", data, offset)
        offset += 4
        if offset + length > len(data):
            raise InvalidField(name, "truncated encoding")
        values.append(data[offset : offset + length].decode("utf-8"))
        offset += length
    if offset != len(data):
        raise InvalidField("encoding", f"{len(data) - offset} trailing bytes")
    cert = CertificateData(
        certificate_id=values[0],
        holder_name=values[1],
        course_title=values[2],
        institution_name=values[3],
        completion_date=_parse_date("completion_date", values[4]),
        issue_date=_parse_date("issue_date", values[5]),
    )
    validate_certificate(cert)
    return cert


def digest_hex(digest: bytes) -> str:
    return digest.hex()


def parse_digest_hex(text: str) -> bytes:
    """Parse a 64-hex-char digest rendering; raises ValueError on malformed input."""
    if len(text) != DIGEST_SIZE * 2:
        raise ValueError(f"digest must be {DIGEST_SIZE * 2} hex chars, got {len(text)}")
    try:
        return bytes.fromhex(text)
    except ValueError:
        raise ValueError("digest must be hexadecimal") from None


assert len(FIELD_ORDER) == len(dataclass_fields(CertificateData))
