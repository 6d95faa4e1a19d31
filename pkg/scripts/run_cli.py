#!/usr/bin/env python3
"""Run the toolkit command line from a source checkout.

Example::

    python scripts/run_cli.py generate --p 3 --seed 7 --out prob.txt
    python scripts/run_cli.py solve --problem prob.txt --solver baseline
"""

from __future__ import annotations

import sys
from pathlib import Path

ROOT_DIR = Path(__file__).resolve().parents[1]
if str(ROOT_DIR) not in sys.path:
    sys.path.insert(0, str(ROOT_DIR))

from src.hlsp_dual.cli import cli_main  # noqa: E402

if __name__ == "__main__":
    raise SystemExit(cli_main(sys.argv[1:]))
