"""Ed25519 keypairs, 21-byte addresses, Base58Check rendering, and keystore files.

An address is the constant prefix byte 0x41 followed by the first 20 bytes of
SHA-256 over the raw 32-byte public key. Humans see the Base58Check rendering
(payload + first 4 bytes of double-SHA-256 checksum, base58-encoded).

Ed25519 signatures are deterministic, which keeps transaction ids reproducible
across runs for identical inputs.
"""

from __future__ import annotations

import hashlib
import json
import os
import secrets
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

from cryptography.exceptions import InvalidSignature
from cryptography.hazmat.primitives.asymmetric.ed25519 import (
    Ed25519PrivateKey,
    Ed25519PublicKey,
)

ADDRESS_PREFIX = 0x41
ADDRESS_SIZE = 21
PUBLIC_KEY_SIZE = 32
SEED_SIZE = 32
SIGNATURE_SIZE = 64

_BASE58_ALPHABET = "123456789ABCDEFGHJKLMNPQRSTUVWXYZabcdefghijkmnopqrstuvwxyz"


class AddressError(ValueError):
    """Malformed address bytes or Base58Check rendering."""


def address_from_public_key(public_key: bytes) -> bytes:
    if len(public_key) != PUBLIC_KEY_SIZE:
        raise AddressError(f"public key must be {PUBLIC_KEY_SIZE} bytes")
    return bytes([ADDRESS_PREFIX]) + hashlib.sha256(public_key).digest()[:20]


def _checksum(payload: bytes) -> bytes:
    return hashlib.sha256(hashlib.sha256(payload).digest()).digest()[:4]


def base58_encode(data: bytes) -> str:
    value = int.from_bytes(data, "big")
    encoded = ""
    while value:
        value, rem = divmod(value, 58)
        encoded = _BASE58_ALPHABET[rem] + encoded
    pad = 0
    for byte in data:
        if byte:
            break
        pad += 1
    return _BASE58_ALPHABET[0] * pad + encoded


def base58_decode(text: str) -> bytes:
    value = 0
    for char in text:
        index = _BASE58_ALPHABET.find(char)
        if index < 0:
            raise AddressError(f"invalid base58 character {char!r}")
        value = value * 58 + index
    raw = value.to_bytes((value.bit_length() + 7) // 8, "big")
    pad = 0
    for char in text:
        if char != _BASE58_ALPHABET[0]:
            break
        pad += 1
    return b"\x00" * pad + raw


def encode_address(address: bytes) -> str:
    """Base58Check rendering of a 21-byte address."""
    if len(address) != ADDRESS_SIZE or address[0] != ADDRESS_PREFIX:
        raise AddressError("address must be 21 bytes with prefix 0x41")
    return base58_encode(address + _checksum(address))


def decode_address(text: str) -> bytes:
    """Parse a Base58Check address rendering back to its 21 raw bytes."""
    raw = base58_decode(text)
    if len(raw) != ADDRESS_SIZE + 4:
        raise AddressError("wrong decoded length")
    payload, checksum = raw[:ADDRESS_SIZE], raw[ADDRESS_SIZE:]
    if _checksum(payload) != checksum:
        raise AddressError("checksum mismatch")
    if payload[0] != ADDRESS_PREFIX:
        raise AddressError("wrong address prefix")
    return payload


def is_valid_address(text: str) -> bool:
    try:
        decode_address(text)
        return True
    except AddressError:
        return False


@dataclass(frozen=True)
class KeyPair:
    """Ed25519 signing key plus derived public key and address."""

    seed: bytes
    public_key: bytes
    address: bytes

    @classmethod
    def from_seed(cls, seed: bytes) -> "KeyPair":
        if len(seed) != SEED_SIZE:
            raise ValueError(f"seed must be {SEED_SIZE} bytes")
        private = Ed25519PrivateKey.from_private_bytes(seed)
        public = private.public_key().public_bytes_raw()
        return cls(seed=seed, public_key=public, address=address_from_public_key(public))

    @classmethod
    def generate(cls) -> "KeyPair":
        return cls.from_seed(secrets.token_bytes(SEED_SIZE))

    def sign(self, message: bytes) -> bytes:
        private = Ed25519PrivateKey.from_private_bytes(self.seed)
        return private.sign(message)

    @property
    def address_b58(self) -> str:
        return encode_address(self.address)


def verify_signature(public_key: bytes, signature: bytes, message: bytes) -> bool:
    if len(public_key) != PUBLIC_KEY_SIZE or len(signature) != SIGNATURE_SIZE:
        return False
    try:
        Ed25519PublicKey.from_public_bytes(public_key).verify(signature, message)
        return True
    except InvalidSignature:
        return False


def save_keystore(keypair: KeyPair, path: Path | str) -> None:
    """Write a keystore JSON file with owner-only permissions."""
    path = Path(path)
    doc = {
        "address": keypair.address_b58,
        "public_key_hex": keypair.public_key.hex(),
        "secret_seed_hex": keypair.seed.hex(),
        "created_at": datetime.now(timezone.utc).isoformat(timespec="seconds"),
    }
    fd = os.open(path, os.O_WRONLY | os.O_CREAT | os.O_TRUNC, 0o600)
    with os.fdopen(fd, "w") as handle:
        json.dump(doc, handle, indent=2)
        handle.write("\n")


def load_keystore(path: Path | str) -> KeyPair:
    """Load a keystore file, checking that the stored address re-derives."""
    with open(path) as handle:
        doc = json.load(handle)
    keypair = KeyPair.from_seed(bytes.fromhex(doc["secret_seed_hex"]))
    if doc.get("address") != keypair.address_b58:
        raise AddressError(f"keystore address does not match its key: {path}")
    return keypair
