"""Command-line client and node runner.

Exit codes: 0 success, 1 domain failure (invalid input, not found, reverted,
rejected), 2 usage error, 3 node unreachable.
"""

from __future__ import annotations

import dataclasses
import json
import sys
import tempfile
from pathlib import Path

import click

from .cas import ContentStore
from .certificate import InvalidField
from .chain import Node
from .client import NodeClient, NodeError, NodeUnreachable, offline_digest
from .config import GenesisConfig, load_service_config
from .harness import run_latency_bench, run_security_suite
from .keys import KeyPair, is_valid_address, load_keystore, save_keystore

EXIT_DOMAIN_FAILURE = 1
EXIT_CONNECTION_FAILURE = 3


@click.group()
def main():
    """Certificate registry node, client, and measurement harness."""


def _node_option(func):
    return click.option(
        "--node",
        "node_url",
        envvar="NODE_URL",
        default="http://127.0.0.1:8545",
        show_default=True,
        help="Base URL of the node (env: NODE_URL).",
    )(func)


def _json_option(func):
    return click.option("--json", "as_json", is_flag=True, help="Machine-readable output.")(func)


def _emit(as_json: bool, data: dict, human: str) -> None:
    if as_json:
        click.echo(json.dumps(data, sort_keys=True))
    else:
        click.echo(human)


def _fail(as_json: bool, code: str, message: str, exit_code: int = EXIT_DOMAIN_FAILURE):
    if as_json:
        click.echo(json.dumps({"error": {"machine_code": code, "message": message}}, sort_keys=True))
    else:
        click.echo(f"error ({code}): {message}", err=True)
    sys.exit(exit_code)


def _load_cert_file(path: str) -> tuple[dict, dict]:
    with open(path) as handle:
        doc = json.load(handle)
    extras = doc.pop("extras", {})
    return doc, extras


@main.command()
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
@_json_option
def keygen(out_path: str, as_json: bool):
    """Generate a keypair and write it as a keystore file."""
    keypair = KeyPair.generate()
    save_keystore(keypair, out_path)
    _emit(
        as_json,
        {"address": keypair.address_b58, "keystore": out_path},
        f"address: {keypair.address_b58}\nkeystore: {out_path}",
    )


@main.command(name="hash")
@click.option("--cert-json", "cert_path", required=True, type=click.Path(exists=True, dir_okay=False))
@_json_option
def hash_cmd(cert_path: str, as_json: bool):
    """Compute a certificate digest offline from its JSON file."""
    fields, _ = _load_cert_file(cert_path)
    try:
        digest = offline_digest(fields)
    except InvalidField as err:
        _fail(as_json, "invalid_parameters", str(err))
    _emit(as_json, {"digest": digest}, digest)


@main.command()
@click.option("--issuer", "issuer_address", required=True)
@click.option("--admin-key", "admin_key_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--wait/--no-wait", default=True, show_default=True)
@_node_option
@_json_option
def authorize(issuer_address: str, admin_key_path: str, wait: bool, node_url: str, as_json: bool):
    """Authorize an issuer address (admin only)."""
    if not is_valid_address(issuer_address):
        _fail(as_json, "invalid_parameters", f"malformed address: {issuer_address}")
    admin = load_keystore(admin_key_path)
    with NodeClient(node_url) as client:
        try:
            result = client.authorize_issuer(admin, issuer_address)
            if wait:
                result = {**result, "receipt": client.wait_for_receipt(result["txid"])}
        except NodeUnreachable as err:
            _fail(as_json, "node_unreachable", str(err), EXIT_CONNECTION_FAILURE)
        except NodeError as err:
            _fail(as_json, err.machine_code, err.message)
    receipt = result.get("receipt")
    if receipt is not None and receipt["status"] != "success":
        _fail(as_json, receipt.get("revert_reason") or "rejected", f"authorization failed: {receipt}")
    _emit(as_json, result, f"txid: {result['txid']}\nauthorized: {issuer_address}")


@main.command()
@click.option("--key", "key_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--cert-json", "cert_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--wait/--no-wait", default=True, show_default=True)
@_node_option
@_json_option
def issue(key_path: str, cert_path: str, wait: bool, node_url: str, as_json: bool):
    """Issue a certificate: store metadata, submit the registration, await the receipt."""
    issuer = load_keystore(key_path)
    fields, extras = _load_cert_file(cert_path)
    with NodeClient(node_url) as client:
        try:
            result = client.issue_certificate(issuer, fields, extras)
            if wait:
                result = {**result, "receipt": client.wait_for_receipt(result["txid"])}
        except InvalidField as err:
            _fail(as_json, "invalid_parameters", str(err))
        except NodeUnreachable as err:
            _fail(as_json, "node_unreachable", str(err), EXIT_CONNECTION_FAILURE)
        except NodeError as err:
            _fail(as_json, err.machine_code, err.message)
    receipt = result.get("receipt")
    if receipt is not None and receipt["status"] != "success":
        code = receipt.get("revert_reason") or receipt.get("reject_reason") or "rejected"
        _fail(as_json, code, f"issuance failed: {code}")
    _emit(
        as_json,
        result,
        "\n".join(
            [
                f"txid: {result['txid']}",
                f"digest: {result['digest']}",
                f"metadata_cid: {result['metadata_cid']}",
            ]
            + ([f"status: {receipt['status']} (block {receipt['block_height']})"] if receipt else [])
        ),
    )


@main.command()
@click.option("--digest", "digest_hex", required=True)
@click.option("--issuer", "issuer_address", required=True)
@_node_option
@_json_option
def verify(digest_hex: str, issuer_address: str, node_url: str, as_json: bool):
    """Validate a certificate by digest and issuer address."""
    with NodeClient(node_url) as client:
        try:
            result = client.validate(digest_hex, issuer_address)
        except NodeUnreachable as err:
            _fail(as_json, "node_unreachable", str(err), EXIT_CONNECTION_FAILURE)
        except NodeError as err:
            _fail(as_json, err.machine_code, err.message)
    status = result["status"]
    if status != "valid":
        _fail(as_json, status, f"certificate is not valid for this issuer: {status}")
    record = result["record"]
    _emit(
        as_json,
        result,
        "\n".join(
            [
                "status: valid",
                f"certificate_id: {record['certificate_id']}",
                f"issuer: {record['issuer']}",
                f"issued: {record['issue_date']} (completed {record['completion_date']})",
                f"registered_at_block: {record['registered_at']}",
                f"metadata_cid: {record['metadata_cid']}",
            ]
        ),
    )


@main.command()
@click.option("--txid", "txid_hex", required=True)
@_node_option
@_json_option
def receipt(txid_hex: str, node_url: str, as_json: bool):
    """Fetch the execution receipt for a transaction."""
    with NodeClient(node_url) as client:
        try:
            result = client.receipt(txid_hex)
        except NodeUnreachable as err:
            _fail(as_json, "node_unreachable", str(err), EXIT_CONNECTION_FAILURE)
        except NodeError as err:
            _fail(as_json, err.machine_code, err.message)
    human = "\n".join(f"{key}: {value}" for key, value in sorted(result.items()))
    _emit(as_json, result, human)


@main.command(name="security-suite")
@click.option("--seed", default=0, show_default=True)
@_json_option
def security_suite(seed: int, as_json: bool):
    """Run the misuse scenarios against a fresh in-process node."""
    report = run_security_suite(seed=seed)
    if as_json:
        click.echo(json.dumps(report.to_json(), sort_keys=True))
    else:
        click.echo(report.render_text())
    if not report.all_passed:
        sys.exit(EXIT_DOMAIN_FAILURE)


@main.command()
@click.option("--n", "n_txs", default=1000, show_default=True)
@click.option("--interval-ms", default=3000, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option(
    "--clock",
    "clock_mode",
    type=click.Choice(["logical", "wall"]),
    default="logical",
    show_default=True,
)
@_json_option
def bench(n_txs: int, interval_ms: int, seed: int, clock_mode: str, as_json: bool):
    """Measure inclusion/confirmation latency and fees for a registration workload."""
    report = run_latency_bench(
        n_txs=n_txs, block_interval_ms=interval_ms, seed=seed, clock_mode=clock_mode
    )
    if as_json:
        click.echo(json.dumps(report.to_json(), sort_keys=True))
    else:
        click.echo(report.render_text())


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--host", default=None)
@click.option("--port", type=int, default=None)
def serve(config_path: str | None, host: str | None, port: int | None):
    """Run the HTTP node with a wall-clock block producer."""
    import uvicorn

    from .service import BlockProducer, create_app

    config = load_service_config(config_path)
    if host is not None:
        config = dataclasses.replace(config, host=host)
    if port is not None:
        config = dataclasses.replace(config, port=port)

    if config.data_dir is not None and (Path(config.data_dir) / "blocks.log").exists():
        node = Node(chain_config=config.chain_config(), data_dir=config.data_dir)
    else:
        if config.admin_keystore is None:
            raise click.UsageError("a fresh chain needs admin_keystore in the config")
        admin = load_keystore(config.admin_keystore)
        genesis = GenesisConfig(admin=admin.address, timestamp_ms=0)
        node = Node(genesis=genesis, chain_config=config.chain_config(), data_dir=config.data_dir)

    if config.data_dir is not None:
        store = ContentStore(Path(config.data_dir) / "objects")
    else:
        store = ContentStore(Path(tempfile.mkdtemp(prefix="certchain-objects-")))

    app = create_app(node, store, cors_origin=config.cors_origin)
    producer = BlockProducer(node, config.block_interval_ms)
    producer.start()
    click.echo(f"admin: {node.genesis_config.admin.hex()}")
    click.echo(f"listening on http://{config.host}:{config.port}")
    try:
        uvicorn.run(app, host=config.host, port=config.port, log_level="warning")
    finally:
        producer.stop()
        node.close()


if __name__ == "__main__":
    main()
