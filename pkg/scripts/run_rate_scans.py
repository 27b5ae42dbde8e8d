#!/usr/bin/env python3
"""Run both preset rate scans and print the fitted slopes.

Equivalent to:
    tradeoff-lab rate-scan --config configs/spline_m2.cfg --threads 2
    tradeoff-lab rate-scan --config configs/tv.cfg --threads 2
"""

import os
import sys
import time
from pathlib import Path

from tradeoff_lab.cli import main

ROOT = Path(__file__).resolve().parent.parent


def run():
    threads = str(min(4, os.cpu_count() or 1))
    for name in ("spline_m2", "tv"):
        cfg = ROOT / "configs" / f"{name}.cfg"
        t0 = time.time()
        code = main(["rate-scan", "--config", str(cfg), "--threads", threads])
        print(f"{name}: exit {code} in {time.time() - t0:.0f}s "
              f"(see {ROOT / 'out' / name / 'rate_scan_summary.json'})")
        if code != 0:
            return code
    return 0


if __name__ == "__main__":
    sys.exit(run())
