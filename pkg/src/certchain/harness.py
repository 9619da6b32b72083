"""Scenario harness: replays the misuse scenarios and the latency/cost
measurements against an in-process node, emitting report tables.

Everything here is deterministic under a fixed seed and a logical clock: keys
are derived from the seed, block production is driven manually, and no network
or wall-clock sleeps are involved (the optional wall-clock bench mode excepted).
"""

from __future__ import annotations

import hashlib
import json
import math
import random
import threading
import time
from dataclasses import dataclass
from datetime import date, timedelta

from .cas import ContentId, metadata_document
from .certificate import CertificateData
from .chain import Node, ReceiptStatus, RejectReason, SubmitRejected, sign_transaction
from .config import ChainConfig, FeeConfig, GenesisConfig
from .contract import (
    U64_MAX,
    AuthorizeIssuer,
    RegisterCertificate,
    RevertReason,
    state_root,
)
from .keys import KeyPair


def derive_keypair(seed: int, label: str) -> KeyPair:
    """Deterministic keypair for harness runs: one seed, many labelled keys."""
    material = hashlib.sha256(f"certchain-harness:{seed}:{label}".encode()).digest()
    return KeyPair.from_seed(material)


def _cert(i: int, run_label: str = "bench") -> CertificateData:
    completion = date(2025, 1, 1) + timedelta(days=i % 300)
    return CertificateData(
        certificate_id=f"{run_label.upper()}-{i:06d}",
        holder_name=f"Holder {i}",
        course_title="Distributed Systems",
        institution_name="Federal Institute",
        completion_date=completion,
        issue_date=completion + timedelta(days=7),
    )


def _register_payload(cert: CertificateData) -> RegisterCertificate:
    cid = ContentId.for_content(metadata_document(cert))
    return RegisterCertificate(cert=cert, metadata_cid=cid)


# ---------------------------------------------------------------------------
# Security suite


@dataclass(frozen=True)
class ScenarioRow:
    name: str
    expected: str
    observed: str
    passed: bool


@dataclass(frozen=True)
class ScenarioReport:
    rows: tuple[ScenarioRow, ...]

    @property
    def all_passed(self) -> bool:
        return all(row.passed for row in self.rows)

    def to_json(self) -> dict:
        return {
            "scenarios": [row.__dict__ for row in self.rows],
            "passed": sum(r.passed for r in self.rows),
            "total": len(self.rows),
        }

    def render_text(self) -> str:
        headers = ("Scenario", "Expected", "Observed", "Result")
        table = [headers] + [
            (r.name, r.expected, r.observed, "pass" if r.passed else "FAIL") for r in self.rows
        ]
        widths = [max(len(row[i]) for row in table) for i in range(4)]
        lines = []
        for idx, row in enumerate(table):
            lines.append("  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)).rstrip())
            if idx == 0:
                lines.append("  ".join("-" * w for w in widths))
        return "\n".join(lines)


def _fresh_security_node(seed: int, counter_preset: int = 0):
    admin = derive_keypair(seed, "admin")
    issuer = derive_keypair(seed, "issuer")
    intruder = derive_keypair(seed, "intruder")
    node = Node(
        genesis=GenesisConfig(admin=admin.address, initial_total_certificates=counter_preset),
        chain_config=ChainConfig(),
    )
    node.submit(sign_transaction(admin, AuthorizeIssuer(issuer=issuer.address), 0, 0))
    node.produce_block(3000)
    return node, admin, issuer, intruder


def run_security_suite(seed: int = 0) -> ScenarioReport:
    """Run the five misuse scenarios in order; each row passes iff the observed
    rejection or revert matches the expected defense."""
    rows = [
        _scenario_replay(seed),
        _scenario_overflow(seed),
        _scenario_fraudulent_issuance(seed),
        _scenario_duplication(seed),
        _scenario_invalid_parameters(seed),
    ]
    return ScenarioReport(rows=tuple(rows))


def _scenario_replay(seed: int) -> ScenarioRow:
    node, _, issuer, _ = _fresh_security_node(seed)
    tx = sign_transaction(issuer, _register_payload(_cert(0, "replay")), 0, 1000)
    node.submit(tx)
    node.produce_block(6000)
    assert node.get_receipt(tx.txid).status is ReceiptStatus.SUCCESS
    root_before = state_root(node.state_snapshot())
    try:
        node.submit(tx)  # byte-identical reuse
        observed, ok = "replayed transaction accepted", False
    except SubmitRejected as err:
        unchanged = state_root(node.state_snapshot()) == root_before
        ok = err.reason is RejectReason.DUPLICATE_TRANSACTION and unchanged
        observed = "duplicate transaction rejected; state unchanged" if ok else str(err)
    return ScenarioRow("replay attack", "not susceptible", observed, ok)


def _scenario_overflow(seed: int) -> ScenarioRow:
    node, _, issuer, _ = _fresh_security_node(seed, counter_preset=U64_MAX)
    tx = sign_transaction(issuer, _register_payload(_cert(1, "overflow")), 0, 1000)
    node.submit(tx)
    node.produce_block(6000)
    receipt = node.get_receipt(tx.txid)
    ok = (
        receipt.status is ReceiptStatus.REVERTED
        and receipt.revert_reason is RevertReason.COUNTER_OVERFLOW
    )
    observed = "reverted at counter limit" if ok else f"receipt {receipt.status.value}"
    return ScenarioRow("counter overflow", "not susceptible", observed, ok)


def _scenario_fraudulent_issuance(seed: int) -> ScenarioRow:
    node, _, _, intruder = _fresh_security_node(seed)
    tx = sign_transaction(intruder, _register_payload(_cert(2, "fraud")), 0, 1000)
    node.submit(tx)
    node.produce_block(6000)
    receipt = node.get_receipt(tx.txid)
    ok = (
        receipt.status is ReceiptStatus.REVERTED
        and receipt.revert_reason is RevertReason.ISSUER_NOT_AUTHORIZED
        and node.state_snapshot().total_certificates == 0
    )
    observed = "transaction rejected (issuer not authorized)" if ok else f"receipt {receipt.status.value}"
    return ScenarioRow("fraudulent issuance", "transaction rejected", observed, ok)


def _scenario_duplication(seed: int) -> ScenarioRow:
    node, _, issuer, _ = _fresh_security_node(seed)
    payload = _register_payload(_cert(3, "dup"))
    node.submit(sign_transaction(issuer, payload, 0, 1000))
    node.produce_block(6000)
    tx = sign_transaction(issuer, payload, 1, 2000)
    node.submit(tx)
    node.produce_block(9000)
    receipt = node.get_receipt(tx.txid)
    ok = (
        receipt.status is ReceiptStatus.REVERTED
        and receipt.revert_reason is RevertReason.DUPLICATE_CERTIFICATE
        and node.state_snapshot().total_certificates == 1
    )
    observed = "transaction rejected (duplicate certificate)" if ok else f"receipt {receipt.status.value}"
    return ScenarioRow("certificate duplication", "transaction rejected", observed, ok)


def _scenario_invalid_parameters(seed: int) -> ScenarioRow:
    node, _, issuer, _ = _fresh_security_node(seed)
    malformed = CertificateData(
        certificate_id="",
        holder_name="Nobody",
        course_title="Course",
        institution_name="Institute",
        completion_date=date(2025, 1, 1),
        issue_date=date(2025, 1, 2),
    )
    tx = sign_transaction(issuer, _register_payload(malformed), 0, 1000)
    root_before = state_root(node.state_snapshot())
    try:
        node.submit(tx)
        observed, ok = "malformed transaction accepted", False
    except SubmitRejected as err:
        ok = (
            err.reason is RejectReason.INVALID_PARAMETERS
            and state_root(node.state_snapshot()) == root_before
        )
        observed = "not processed (invalid parameters)" if ok else str(err)
    return ScenarioRow("invalid parameters", "transaction rejected", observed, ok)


# ---------------------------------------------------------------------------
# Latency / cost bench


@dataclass(frozen=True)
class LatencyReport:
    n_txs: int
    block_interval_ms: int
    clock_mode: str
    mean_inclusion_ms: float
    p50_inclusion_ms: float
    p95_inclusion_ms: float
    max_inclusion_ms: float
    mean_confirmation_ms: float
    max_confirmation_ms: float
    total_fees_sun: int

    def to_json(self) -> dict:
        return dict(self.__dict__)

    def render_text(self) -> str:
        rows = [
            ("transactions", str(self.n_txs)),
            ("block interval (ms)", str(self.block_interval_ms)),
            ("clock mode", self.clock_mode),
            ("inclusion mean (ms)", f"{self.mean_inclusion_ms:.1f}"),
            ("inclusion p50 (ms)", f"{self.p50_inclusion_ms:.1f}"),
            ("inclusion p95 (ms)", f"{self.p95_inclusion_ms:.1f}"),
            ("inclusion max (ms)", f"{self.max_inclusion_ms:.1f}"),
            ("confirmation mean (ms)", f"{self.mean_confirmation_ms:.1f}"),
            ("confirmation max (ms)", f"{self.max_confirmation_ms:.1f}"),
            ("total fees (sun)", str(self.total_fees_sun)),
        ]
        width = max(len(k) for k, _ in rows)
        return "\n".join(f"{k.ljust(width)}  {v}" for k, v in rows)


def build_bench_node(
    seed: int, n_issuers: int, block_interval_ms: int = 3000
) -> tuple[Node, list[KeyPair]]:
    """Node with the issuer pool pre-authorized at genesis so the measured
    workload is pure registrations."""
    admin = derive_keypair(seed, "admin")
    issuers = [derive_keypair(seed, f"issuer-{i}") for i in range(n_issuers)]
    genesis = GenesisConfig(
        admin=admin.address, initial_issuers=tuple(kp.address for kp in issuers)
    )
    node = Node(genesis=genesis, chain_config=ChainConfig(block_interval_ms=block_interval_ms))
    return node, issuers


def run_schedule(
    node: Node,
    issuers: list[KeyPair],
    arrivals_ms: list[int],
    block_interval_ms: int,
    run_label: str = "bench",
) -> LatencyReport:
    """Submit registrations at the given arrival times under a logical clock.

    A transaction arriving in ``[t - interval, t)`` is admitted before the block
    produced at boundary ``t``; one arriving exactly on a boundary waits a full
    interval. One extra block past the last inclusion provides the confirmation
    depth.
    """
    depth = node.config.confirmation_depth
    arrivals = sorted(arrivals_ms)
    n = len(arrivals)
    nonces = {kp.address: 0 for kp in issuers}
    txs = []
    for i, arrival in enumerate(arrivals):
        issuer = issuers[i % len(issuers)]
        payload = _register_payload(_cert(i, run_label))
        tx = sign_transaction(issuer, payload, nonces[issuer.address], arrival)
        nonces[issuer.address] += 1
        txs.append((arrival, tx))

    n_blocks = math.ceil((arrivals[-1] + 1) / block_interval_ms) if n else 1
    cursor = 0
    inclusion: dict[bytes, int] = {}
    for k in range(1, n_blocks + 1 + depth):
        boundary = k * block_interval_ms
        while cursor < n and txs[cursor][0] < boundary:
            node.submit(txs[cursor][1])
            cursor += 1
        node.produce_block(boundary)

    inclusion_lat: list[int] = []
    confirmation_lat: list[int] = []
    for arrival, tx in txs:
        receipt = node.get_receipt(tx.txid)
        assert receipt.status is ReceiptStatus.SUCCESS, receipt
        included_at = node.get_block(receipt.block_height).timestamp_ms
        confirmed_at = node.get_block(receipt.block_height + depth).timestamp_ms
        inclusion_lat.append(included_at - arrival)
        confirmation_lat.append(confirmed_at - arrival)

    return LatencyReport(
        n_txs=n,
        block_interval_ms=block_interval_ms,
        clock_mode="logical",
        mean_inclusion_ms=_mean(inclusion_lat),
        p50_inclusion_ms=_percentile(inclusion_lat, 50),
        p95_inclusion_ms=_percentile(inclusion_lat, 95),
        max_inclusion_ms=max(inclusion_lat),
        mean_confirmation_ms=_mean(confirmation_lat),
        max_confirmation_ms=max(confirmation_lat),
        total_fees_sun=node.stats()["total_fees_sun"],
    )


def run_latency_bench(
    n_txs: int = 1000,
    block_interval_ms: int = 3000,
    seed: int = 0,
    clock_mode: str = "logical",
) -> LatencyReport:
    """Registrations with arrival times uniform over the run.

    The issuer pool is sized so each account stays inside its free daily
    bandwidth quota, keeping the whole workload fee-free.
    """
    if n_txs < 1:
        raise ValueError("n_txs must be positive")
    if clock_mode not in ("logical", "wall"):
        raise ValueError(f"unknown clock mode {clock_mode!r}")
    n_issuers = max(1, math.ceil(n_txs / 10))
    node, issuers = build_bench_node(seed, n_issuers, block_interval_ms)
    rng = random.Random(seed)
    n_blocks = max(10, math.ceil(n_txs / 100))
    horizon = n_blocks * block_interval_ms
    arrivals = [int(rng.uniform(0, horizon)) for _ in range(n_txs)]
    if clock_mode == "wall":
        return _run_wall_clock(node, issuers, sorted(arrivals), block_interval_ms)
    return run_schedule(node, issuers, arrivals, block_interval_ms)


def _run_wall_clock(
    node: Node, issuers: list[KeyPair], arrivals: list[int], block_interval_ms: int
) -> LatencyReport:
    depth = node.config.confirmation_depth
    stop = threading.Event()
    t0 = time.monotonic()

    def now_ms() -> int:
        return int((time.monotonic() - t0) * 1000)

    def producer():
        boundary = block_interval_ms
        while not stop.is_set():
            delay = (boundary - now_ms()) / 1000
            if delay > 0:
                stop.wait(delay)
                if stop.is_set():
                    return
            node.produce_block(boundary)
            boundary += block_interval_ms

    thread = threading.Thread(target=producer, daemon=True)
    thread.start()
    nonces = {kp.address: 0 for kp in issuers}
    txs = []
    try:
        for i, arrival in enumerate(arrivals):
            delay = (arrival - now_ms()) / 1000
            if delay > 0:
                time.sleep(delay)
            issuer = issuers[i % len(issuers)]
            submit_at = now_ms()
            tx = sign_transaction(
                issuer, _register_payload(_cert(i, "wall")), nonces[issuer.address], submit_at
            )
            nonces[issuer.address] += 1
            node.submit(tx)
            txs.append((submit_at, tx))
        deadline = t0 + arrivals[-1] / 1000 + (depth + 3) * block_interval_ms / 1000
        while time.monotonic() < deadline:
            head = node.chain_head()[0]
            done = all(
                _included_and_confirmed(node, tx, depth, head) for _, tx in txs
            )
            if done:
                break
            time.sleep(block_interval_ms / 4000)
    finally:
        stop.set()
        thread.join(timeout=5)

    inclusion_lat, confirmation_lat = [], []
    for submit_at, tx in txs:
        receipt = node.get_receipt(tx.txid)
        included_at = node.get_block(receipt.block_height).timestamp_ms
        confirmed_at = node.get_block(receipt.block_height + depth).timestamp_ms
        inclusion_lat.append(included_at - submit_at)
        confirmation_lat.append(confirmed_at - submit_at)
    return LatencyReport(
        n_txs=len(txs),
        block_interval_ms=block_interval_ms,
        clock_mode="wall",
        mean_inclusion_ms=_mean(inclusion_lat),
        p50_inclusion_ms=_percentile(inclusion_lat, 50),
        p95_inclusion_ms=_percentile(inclusion_lat, 95),
        max_inclusion_ms=max(inclusion_lat),
        mean_confirmation_ms=_mean(confirmation_lat),
        max_confirmation_ms=max(confirmation_lat),
        total_fees_sun=node.stats()["total_fees_sun"],
    )


def _included_and_confirmed(node: Node, tx, depth: int, head: int) -> bool:
    try:
        receipt = node.get_receipt(tx.txid)
    except KeyError:
        return False
    return receipt.block_height is not None and head >= receipt.block_height + depth


def _mean(values: list[int]) -> float:
    return sum(values) / len(values)


def _percentile(values: list[int], pct: int) -> float:
    ordered = sorted(values)
    index = (pct / 100) * (len(ordered) - 1)
    low = math.floor(index)
    high = math.ceil(index)
    if low == high:
        return float(ordered[low])
    frac = index - low
    return ordered[low] * (1 - frac) + ordered[high] * frac


def report_to_json_text(report) -> str:
    return json.dumps(report.to_json(), indent=2, sort_keys=True)
