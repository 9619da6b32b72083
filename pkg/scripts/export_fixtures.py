#!/usr/bin/env python3
"""Export cross-implementation test vectors for the web client.

The web client re-implements the canonical certificate encoding, the content
id derivation, and transaction signing; these vectors pin the expected bytes.
"""

import argparse
import json
from datetime import date, timedelta
from pathlib import Path

from certchain.cas import ContentId, metadata_document
from certchain.certificate import CertificateData, canonicalize, cert_hash
from certchain.chain import canonical_transaction_bytes, sign_transaction
from certchain.contract import AuthorizeIssuer, RegisterCertificate
from certchain.keys import KeyPair


def _fixture_cert(i: int) -> tuple[dict, dict]:
    completion = date(2024, 6, 1) + timedelta(days=i * 11)
    fields = {
        "certificate_id": f"FIX-2024-{i:04d}",
        "holder_name": ["Alice Silva", "Bruno Costa", "Carla Mendes", "Diego Álvares"][i % 4],
        "course_title": ["Systems Analysis", "Data Engineering", "Computação"][i % 3],
        "institution_name": "Federal Institute",
        "completion_date": completion.isoformat(),
        "issue_date": (completion + timedelta(days=14)).isoformat(),
    }
    extras = {"grade": ["A", "B", "A-"][i % 3], "course_hours": str(40 + i)}
    return fields, extras


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument(
        "--out", type=Path, default=Path("frontend/tests/fixtures.json")
    )
    parser.add_argument("--count", type=int, default=10)
    args = parser.parse_args()

    key = KeyPair.from_seed(bytes(range(32)))

    certificates = []
    for i in range(args.count):
        fields, extras = _fixture_cert(i)
        cert = CertificateData.from_mapping(fields)
        doc = metadata_document(cert, extras)
        certificates.append(
            {
                "fields": fields,
                "extras": extras,
                "canonical_hex": canonicalize(cert).hex(),
                "digest_hex": cert_hash(cert).hex(),
                "metadata_document": doc.decode("utf-8"),
                "metadata_cid": ContentId.for_content(doc).encode(),
            }
        )

    reg_cert = CertificateData.from_mapping(certificates[0]["fields"])
    reg_payload = RegisterCertificate(
        cert=reg_cert,
        metadata_cid=ContentId.decode(certificates[0]["metadata_cid"]),
    )
    auth_payload = AuthorizeIssuer(issuer=key.address)
    signing = []
    for name, payload, nonce, ts in [
        ("authorize", auth_payload, 0, 1700000000000),
        ("register", reg_payload, 3, 1700000060000),
    ]:
        message = canonical_transaction_bytes(key.address, nonce, ts, key.public_key, payload)
        tx = sign_transaction(key, payload, nonce, ts)
        signing.append(
            {
                "name": name,
                "nonce": nonce,
                "timestamp_ms": ts,
                "canonical_hex": message.hex(),
                "signature_hex": tx.signature.hex(),
                "txid_hex": tx.txid.hex(),
            }
        )

    vectors = {
        "key": {
            "seed_hex": key.seed.hex(),
            "public_key_hex": key.public_key.hex(),
            "address_hex": key.address.hex(),
            "address_b58": key.address_b58,
        },
        "certificates": certificates,
        "signing": signing,
    }
    args.out.parent.mkdir(parents=True, exist_ok=True)
    args.out.write_text(json.dumps(vectors, indent=2, ensure_ascii=False) + "\n")
    print(f"wrote {args.out} ({args.count} certificates)")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
