#!/usr/bin/env python3
"""Run the misuse-scenario suite and write text + JSON reports."""

import argparse
import json
from pathlib import Path

from certchain.harness import run_security_suite


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out-dir", type=Path, default=Path("out"))
    args = parser.parse_args()

    report = run_security_suite(seed=args.seed)
    args.out_dir.mkdir(parents=True, exist_ok=True)
    (args.out_dir / "security_suite.txt").write_text(report.render_text() + "\n")
    (args.out_dir / "security_suite.json").write_text(
        json.dumps(report.to_json(), indent=2, sort_keys=True) + "\n"
    )
    print(report.render_text())
    return 0 if report.all_passed else 1


if __name__ == "__main__":
    raise SystemExit(main())
