"""Configuration for the chain simulator and the HTTP node.

The service reads a JSON config file; any field can be overridden through
``CERTCHAIN_*`` environment variables (see ``load_service_config``).
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

MS_PER_DAY = 86_400_000


@dataclass(frozen=True)
class FeeConfig:
    """TRON-style bandwidth pricing: a free daily byte quota per account,
    overflow bytes charged at a fixed price in sun."""

    free_bandwidth_per_day: int = 5000
    sun_per_byte: int = 1000
    initial_balance_sun: int = 0


@dataclass(frozen=True)
class ChainConfig:
    block_interval_ms: int = 3000
    max_block_txs: int = 1000
    confirmation_depth: int = 1
    fees: FeeConfig = field(default_factory=FeeConfig)


@dataclass(frozen=True)
class GenesisConfig:
    """Block-zero parameters: the admin address plus initial configuration.

    ``initial_issuers`` seeds the authorized set without admin transactions;
    ``initial_total_certificates`` is a test hook for the counter-limit guard.
    """

    admin: bytes
    timestamp_ms: int = 0
    initial_issuers: tuple[bytes, ...] = ()
    initial_total_certificates: int = 0


@dataclass(frozen=True)
class ServiceConfig:
    host: str = "127.0.0.1"
    port: int = 8545
    block_interval_ms: int = 3000
    data_dir: Path | None = None
    admin_keystore: Path | None = None
    cors_origin: str = "*"
    free_bandwidth_per_day: int = 5000
    sun_per_byte: int = 1000
    initial_balance_sun: int = 0

    def chain_config(self) -> ChainConfig:
        return ChainConfig(
            block_interval_ms=self.block_interval_ms,
            fees=FeeConfig(
                free_bandwidth_per_day=self.free_bandwidth_per_day,
                sun_per_byte=self.sun_per_byte,
                initial_balance_sun=self.initial_balance_sun,
            ),
        )


_ENV_PREFIX = "CERTCHAIN_"
_INT_FIELDS = {
    "port",
    "block_interval_ms",
    "free_bandwidth_per_day",
    "sun_per_byte",
    "initial_balance_sun",
}
_PATH_FIELDS = {"data_dir", "admin_keystore"}


def load_service_config(
    path: Path | str | None = None, env: Mapping[str, str] | None = None
) -> ServiceConfig:
    """Merge defaults <- config file <- CERTCHAIN_* environment overrides."""
    env = os.environ if env is None else env
    values: dict[str, Any] = {}
    if path is not None:
        with open(path) as handle:
            values.update(json.load(handle))
    for name in ServiceConfig.__dataclass_fields__:
        override = env.get(_ENV_PREFIX + name.upper())
        if override is not None:
            values[name] = override
    kwargs: dict[str, Any] = {}
    for name, value in values.items():
        if name not in ServiceConfig.__dataclass_fields__:
            raise ValueError(f"unknown config key {name!r}")
        if name in _INT_FIELDS:
            kwargs[name] = int(value)
        elif name in _PATH_FIELDS:
            kwargs[name] = Path(value) if value else None
        else:
            kwargs[name] = value
    return ServiceConfig(**kwargs)
