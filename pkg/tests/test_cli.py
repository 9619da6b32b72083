import json
import subprocess
import sys

import pytest
from click.testing import CliRunner

from certchain.cli import main
from certchain.keys import load_keystore

from conftest import ALICE_DIGEST_HEX, ALICE_FIELDS


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def cert_file(tmp_path):
    path = tmp_path / "alice.json"
    path.write_text(json.dumps(dict(ALICE_FIELDS, extras={"grade": "A"})))
    return path


def test_keygen_writes_consistent_keystore(runner, tmp_path):
    out = tmp_path / "key.json"
    result = runner.invoke(main, ["keygen", "--out", str(out), "--json"])
    assert result.exit_code == 0, result.output
    keypair = load_keystore(out)  # raises if the address does not re-derive
    assert json.loads(result.output)["address"] == keypair.address_b58


def test_hash_matches_pinned_digest(runner, cert_file):
    result = runner.invoke(main, ["hash", "--cert-json", str(cert_file)])
    assert result.exit_code == 0
    assert result.output.strip() == ALICE_DIGEST_HEX

    result = runner.invoke(main, ["hash", "--cert-json", str(cert_file), "--json"])
    assert json.loads(result.output) == {"digest": ALICE_DIGEST_HEX}


def test_hash_rejects_invalid_certificate(runner, tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(dict(ALICE_FIELDS, holder_name="  ")))
    result = runner.invoke(main, ["hash", "--cert-json", str(path)])
    assert result.exit_code == 1


def test_usage_error_exit_code(runner):
    result = runner.invoke(main, ["hash"])  # missing required option
    assert result.exit_code == 2


def test_connection_failure_distinct_exit_code(runner):
    result = runner.invoke(
        main,
        ["verify", "--digest", ALICE_DIGEST_HEX, "--issuer", "TDoesNotMatter", "--node", "http://127.0.0.1:1"],
    )
    assert result.exit_code == 3


def test_end_to_end_issue_and_verify(runner, cert_file, live_server):
    env = {"NODE_URL": live_server.url}

    result = runner.invoke(
        main,
        ["issue", "--key", str(live_server.issuer_keystore), "--cert-json", str(cert_file), "--json"],
        env=env,
    )
    assert result.exit_code == 0, result.output
    issued = json.loads(result.output)
    assert issued["digest"] == ALICE_DIGEST_HEX
    assert issued["receipt"]["status"] == "success"

    result = runner.invoke(
        main,
        ["verify", "--digest", issued["digest"], "--issuer", live_server.issuer.address_b58, "--json"],
        env=env,
    )
    assert result.exit_code == 0, result.output
    assert json.loads(result.output)["status"] == "valid"

    result = runner.invoke(main, ["receipt", "--txid", issued["txid"], "--json"], env=env)
    assert result.exit_code == 0
    assert json.loads(result.output)["status"] == "success"


def test_cli_hash_agrees_with_node_digest(runner, cert_file, live_server):
    offline = runner.invoke(main, ["hash", "--cert-json", str(cert_file)]).output.strip()
    result = runner.invoke(
        main,
        ["issue", "--key", str(live_server.issuer_keystore), "--cert-json", str(cert_file), "--json"],
        env={"NODE_URL": live_server.url},
    )
    assert json.loads(result.output)["digest"] == offline


def test_authorize_flow(runner, tmp_path, live_server):
    env = {"NODE_URL": live_server.url}
    new_key = tmp_path / "newissuer.json"
    runner.invoke(main, ["keygen", "--out", str(new_key), "--json"])
    new_address = load_keystore(new_key).address_b58

    result = runner.invoke(
        main,
        ["authorize", "--issuer", new_address, "--admin-key", str(live_server.admin_keystore), "--json"],
        env=env,
    )
    assert result.exit_code == 0, result.output
    assert json.loads(result.output)["receipt"]["status"] == "success"


def test_authorize_requires_admin_key(runner, live_server):
    result = runner.invoke(
        main,
        [
            "authorize",
            "--issuer",
            live_server.issuer.address_b58,
            "--admin-key",
            str(live_server.issuer_keystore),  # not the admin
            "--json",
        ],
        env={"NODE_URL": live_server.url},
    )
    assert result.exit_code == 1
    assert json.loads(result.output)["error"]["machine_code"] == "not_admin"


def test_verify_unknown_digest_exits_nonzero(runner, live_server):
    result = runner.invoke(
        main,
        ["verify", "--digest", "00" * 32, "--issuer", live_server.issuer.address_b58, "--json"],
        env={"NODE_URL": live_server.url},
    )
    assert result.exit_code == 1
    assert json.loads(result.output)["error"]["machine_code"] == "not_found"


def test_duplicate_issue_exits_nonzero(runner, cert_file, live_server):
    env = {"NODE_URL": live_server.url}
    args = ["issue", "--key", str(live_server.issuer_keystore), "--cert-json", str(cert_file), "--json"]
    assert runner.invoke(main, args, env=env).exit_code == 0
    result = runner.invoke(main, args, env=env)
    assert result.exit_code == 1
    assert json.loads(result.output)["error"]["machine_code"] == "duplicate_certificate"


def test_security_suite_command(runner):
    result = runner.invoke(main, ["security-suite", "--json"])
    assert result.exit_code == 0
    doc = json.loads(result.output)
    assert doc["passed"] == 5 and doc["total"] == 5

    result = runner.invoke(main, ["security-suite"])
    assert result.exit_code == 0
    assert result.output.count("pass") == 5


def test_bench_command(runner):
    result = runner.invoke(main, ["bench", "--n", "50", "--interval-ms", "3000", "--json"])
    assert result.exit_code == 0
    doc = json.loads(result.output)
    assert doc["n_txs"] == 50
    assert doc["max_inclusion_ms"] <= 3000
    assert doc["total_fees_sun"] == 0


def test_module_entrypoint_subprocess(cert_file):
    proc = subprocess.run(
        [sys.executable, "-m", "certchain.cli", "hash", "--cert-json", str(cert_file)],
        capture_output=True,
        text=True,
        timeout=60,
    )
    assert proc.returncode == 0
    assert proc.stdout.strip() == ALICE_DIGEST_HEX
