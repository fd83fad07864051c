"""Pauli group, 12-element 2-design, Clifford group and Haar bases at d=2 against N.

    python3 scripts/run_fig_designs.py                 # L=1e4, I=100, about 2 min per core
    python3 scripts/run_fig_designs.py --scale paper   # I=1000 on a finer N grid
"""
import argparse
import sys
from pathlib import Path

from qbme.cli import main

PRESETS = Path(__file__).resolve().parent / "presets"

if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--scale", choices=["desk", "paper"], default="desk")
    ap.add_argument("--workers", type=int, default=None)
    ap.add_argument("--out")
    a = ap.parse_args()
    argv = ["compare-designs", "--config", str(PRESETS / f"designs_{a.scale}.json"),
            "--out", a.out or f"qbme-out/designs-{a.scale}", "--svg"]
    if a.workers:
        argv += ["--workers", str(a.workers)]
    sys.exit(main(argv))
