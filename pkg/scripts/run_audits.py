#!/usr/bin/env python3
"""Run the audit bundle (concavity, deviation tail, envelope scaling) for a config."""

import os
import sys
from pathlib import Path

from tradeoff_lab.cli import main

ROOT = Path(__file__).resolve().parent.parent

if __name__ == "__main__":
    cfg = sys.argv[1] if len(sys.argv) > 1 else str(ROOT / "configs" / "spline_m2.cfg")
    threads = str(min(4, os.cpu_count() or 1))
    sys.exit(main(["audit", "--config", cfg, "--threads", threads]))
