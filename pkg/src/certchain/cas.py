"""Content-addressed metadata store: certificate documents live off-chain,
referenced on-chain by a content ID.

Content IDs use the CIDv1 raw-leaf SHA-256 layout (version byte 0x01, codec
0x55, hash-function 0x12, digest length 0x20, 32-byte digest) rendered as
lowercase unpadded base32 with a leading "b", so standard IPFS tooling
recomputes the same ID for the same raw bytes.

The store is a local directory with two-level fan-out by digest hex prefix
(``aa/bb/<hex>``). Writes go through write-then-rename so concurrent puts of
identical content converge; every read re-verifies the digest.
"""

from __future__ import annotations

import base64
import hashlib
import json
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Mapping

from .certificate import CertificateData, cert_hash

CID_PREFIX_BYTES = bytes([0x01, 0x55, 0x12, 0x20])
DEFAULT_MAX_OBJECT_BYTES = 1 << 20


class CasError(Exception):
    """Base class for store failures."""


class NotFound(CasError):
    pass


class CorruptObject(CasError):
    """On-disk bytes no longer hash to the content ID."""


class TooLarge(CasError):
    pass


class EmptyContent(CasError):
    pass


@dataclass(frozen=True)
class ContentId:
    digest: bytes

    def __post_init__(self):
        if len(self.digest) != 32:
            raise ValueError("content digest must be 32 bytes")

    @property
    def raw(self) -> bytes:
        """The 36 self-describing bytes (version, codec, hash id, length, digest)."""
        return CID_PREFIX_BYTES + self.digest

    def encode(self) -> str:
        b32 = base64.b32encode(self.raw).decode("ascii").rstrip("=").lower()
        return "b" + b32

    @classmethod
    def decode(cls, text: str) -> "ContentId":
        if not text.startswith("b"):
            raise ValueError("content id must start with multibase prefix 'b'")
        body = text[1:].upper()
        padding = "=" * ((8 - len(body) % 8) % 8)
        try:
            raw = base64.b32decode(body + padding)
        except Exception:
            raise ValueError("content id is not valid base32") from None
        if len(raw) != 36 or raw[:4] != CID_PREFIX_BYTES:
            raise ValueError("content id layout not recognized")
        return cls(digest=raw[4:])

    @classmethod
    def for_content(cls, content: bytes) -> "ContentId":
        return cls(digest=hashlib.sha256(content).digest())

    def __str__(self) -> str:
        return self.encode()


class ContentStore:
    """Single-node content-addressed object store on the local filesystem."""

    def __init__(self, root: Path | str, max_object_bytes: int = DEFAULT_MAX_OBJECT_BYTES):
        self.root = Path(root)
        self.max_object_bytes = max_object_bytes
        self.root.mkdir(parents=True, exist_ok=True)

    def _path_for(self, cid: ContentId) -> Path:
        digest_hex = cid.digest.hex()
        return self.root / digest_hex[:2] / digest_hex[2:4] / digest_hex

    def put(self, content: bytes) -> ContentId:
        """Persist content and return its ID; idempotent for identical bytes."""
        if not content:
            raise EmptyContent("refusing to store empty content")
        if len(content) > self.max_object_bytes:
            raise TooLarge(f"{len(content)} bytes exceeds limit {self.max_object_bytes}")
        cid = ContentId.for_content(content)
        path = self._path_for(cid)
        if path.exists():
            return cid
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp_name = tempfile.mkstemp(dir=path.parent, prefix=".tmp-")
        try:
            with os.fdopen(fd, "wb") as handle:
                handle.write(content)
            os.replace(tmp_name, path)
        except BaseException:
            try:
                os.unlink(tmp_name)
            except OSError:
                pass
            raise
        return cid

    def get(self, cid: ContentId) -> bytes:
        """Fetch content, re-verifying its digest before returning it."""
        path = self._path_for(cid)
        try:
            content = path.read_bytes()
        except FileNotFoundError:
            raise NotFound(cid.encode()) from None
        if hashlib.sha256(content).digest() != cid.digest:
            raise CorruptObject(cid.encode())
        return content

    def has(self, cid: ContentId) -> bool:
        return self._path_for(cid).exists()


def metadata_document(cert: CertificateData, extras: Mapping[str, Any] | None = None) -> bytes:
    """Canonical metadata document: the core certificate tuple plus free-form extras.

    Canonical form is compact JSON with sorted keys, UTF-8, no trailing newline;
    re-serializing the parsed document is byte-identical.
    """
    doc = {
        "certificate": cert.to_dict(),
        "extras": dict(extras or {}),
    }
    return json.dumps(doc, sort_keys=True, separators=(",", ":"), ensure_ascii=False).encode("utf-8")


def parse_metadata_document(content: bytes) -> tuple[CertificateData, dict[str, Any]]:
    """Inverse of :func:`metadata_document`; raises ValueError on unexpected shape."""
    doc = json.loads(content.decode("utf-8"))
    if not isinstance(doc, dict) or set(doc) != {"certificate", "extras"}:
        raise ValueError("metadata document must have exactly 'certificate' and 'extras'")
    cert = CertificateData.from_mapping(doc["certificate"])
    extras = doc["extras"]
    if not isinstance(extras, dict):
        raise ValueError("extras must be an object")
    return cert, extras


def metadata_matches_digest(content: bytes, digest: bytes) -> bool:
    """True iff the document's core tuple hashes to the given on-chain digest."""
    try:
        cert, _ = parse_metadata_document(content)
    except (ValueError, KeyError):
        return False
    return cert_hash(cert) == digest
