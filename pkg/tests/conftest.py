import threading
import time
from datetime import date
from types import SimpleNamespace

import pytest
import uvicorn

from certchain.cas import ContentStore
from certchain.certificate import CertificateData
from certchain.chain import Node
from certchain.config import ChainConfig, GenesisConfig
from certchain.keys import KeyPair, save_keystore
from certchain.service import BlockProducer, create_app

# Digest of the canonical Alice fixture, computed once with a standalone
# SHA-256 utility over the documented byte layout and frozen here.
ALICE_DIGEST_HEX = "a786f7d3916a64eeb5317745a482f8e1da4d912f754953e08319353c79ce43c2"

ALICE_FIELDS = {
    "certificate_id": "IFSP-2025-0001",
    "holder_name": "Alice Silva",
    "course_title": "Systems Analysis",
    "institution_name": "IFSP",
    "completion_date": "2025-01-15",
    "issue_date": "2025-02-01",
}


def oracle_canonical(fields: dict[str, str]) -> bytes:
    """Independent re-derivation of the canonical encoding (no package code)."""
    import unicodedata

    order = (
        "certificate_id",
        "holder_name",
        "course_title",
        "institution_name",
        "completion_date",
        "issue_date",
    )
    buf = bytearray()
    for name in order:
        text = unicodedata.normalize("NFC", str(fields[name])).strip()
        raw = text.encode("utf-8")
        buf += len(raw).to_bytes(4, "big") + raw
    return bytes(buf)


def oracle_digest(fields: dict[str, str]) -> bytes:
    import hashlib

    return hashlib.sha256(oracle_canonical(fields)).digest()


@pytest.fixture
def alice_cert() -> CertificateData:
    return CertificateData(
        certificate_id="IFSP-2025-0001",
        holder_name="Alice Silva",
        course_title="Systems Analysis",
        institution_name="IFSP",
        completion_date=date(2025, 1, 15),
        issue_date=date(2025, 2, 1),
    )


@pytest.fixture
def admin_kp() -> KeyPair:
    return KeyPair.from_seed(b"\x01" * 32)


@pytest.fixture
def issuer_kp() -> KeyPair:
    return KeyPair.from_seed(b"\x02" * 32)


@pytest.fixture
def intruder_kp() -> KeyPair:
    return KeyPair.from_seed(b"\x03" * 32)


def make_cert(i: int, title: str = "Data Structures") -> CertificateData:
    return CertificateData(
        certificate_id=f"IFSP-2025-{i:04d}",
        holder_name=f"Student {i}",
        course_title=title,
        institution_name="IFSP",
        completion_date=date(2025, 1, 10),
        issue_date=date(2025, 1, 20),
    )


LIVE_INTERVAL_MS = 400


def launch_server(tmp_path, interval_ms: int = LIVE_INTERVAL_MS) -> SimpleNamespace:
    """Start a real HTTP node: uvicorn in a thread plus a wall-clock block
    producer. The returned handle has a .stop() for teardown."""
    admin = KeyPair.from_seed(b"\xee" * 32)
    issuer = KeyPair.from_seed(b"\xef" * 32)
    genesis = GenesisConfig(
        admin=admin.address,
        timestamp_ms=int(time.time() * 1000),
        initial_issuers=(issuer.address,),
    )
    node = Node(genesis=genesis, chain_config=ChainConfig(block_interval_ms=interval_ms))
    store = ContentStore(tmp_path / "objects")
    app = create_app(node, store)

    config = uvicorn.Config(app, host="127.0.0.1", port=0, log_level="error", access_log=False)
    server = uvicorn.Server(config)
    thread = threading.Thread(target=server.run, daemon=True)
    thread.start()
    deadline = time.time() + 10
    while not server.started:
        if time.time() > deadline:
            raise RuntimeError("test server failed to start")
        time.sleep(0.01)
    port = server.servers[0].sockets[0].getsockname()[1]

    producer = BlockProducer(node, interval_ms)
    producer.start()

    admin_keystore = tmp_path / "admin.json"
    issuer_keystore = tmp_path / "issuer.json"
    save_keystore(admin, admin_keystore)
    save_keystore(issuer, issuer_keystore)

    def stop():
        producer.stop()
        server.should_exit = True
        thread.join(timeout=5)

    return SimpleNamespace(
        url=f"http://127.0.0.1:{port}",
        node=node,
        store=store,
        admin=admin,
        issuer=issuer,
        admin_keystore=admin_keystore,
        issuer_keystore=issuer_keystore,
        interval_ms=interval_ms,
        stop=stop,
    )


@pytest.fixture
def live_server(tmp_path):
    handle = launch_server(tmp_path)
    yield handle
    handle.stop()
