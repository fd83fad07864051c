"""Naive estimate rho_x against the PGM Bayes estimate for Ginibre ensembles, d = 2 and 4.

    python3 scripts/run_fig_pgm.py

Each dimension gets a scatter CSV, summary JSON and SVG; the identity
check over 100 random ensembles runs first and aborts on failure.
"""
import sys
from pathlib import Path

from qbme.cli import main

PRESETS = Path(__file__).resolve().parent / "presets"

if __name__ == "__main__":
    out = Path(sys.argv[1] if len(sys.argv) > 1 else "qbme-out/pgm")
    code = main(["pgm", "--verify", "--corpus", "100", "--out", str(out / "verify")])
    for d in (2, 4):
        if code:
            break
        code = main(["pgm", "--config", str(PRESETS / f"pgm_d{d}.json"),
                     "--out", str(out / f"d{d}"), "--svg"])
    sys.exit(code)
