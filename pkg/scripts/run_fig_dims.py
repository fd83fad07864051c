"""Average fidelity against dimension for N = 1, 10, 100 under Haar-random bases.

    python3 scripts/run_fig_dims.py --ensemble pure-haar            # desk scale, minutes
    python3 scripts/run_fig_dims.py --ensemble ginibre --scale paper  # L=1e5, I=1000: hours

Writes per-cell batch CSVs, figure_data.csv and figure.svg under qbme-out/dims-<ensemble>-<scale>.
The N=100 batch CSVs feed ``qbme histogram`` for the risk-distribution plots.
"""
import argparse
import sys
from pathlib import Path

from qbme.cli import main

PRESETS = Path(__file__).resolve().parent / "presets"

if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--ensemble", choices=["pure-haar", "ginibre", "mixed-rank"], default="pure-haar")
    ap.add_argument("--scale", choices=["desk", "paper"], default="desk")
    ap.add_argument("--workers", type=int, default=None)
    ap.add_argument("--out")
    a = ap.parse_args()
    out = a.out or f"qbme-out/dims-{a.ensemble}-{a.scale}"
    argv = ["run-haar", "--config", str(PRESETS / f"dims_{a.ensemble}_{a.scale}.json"),
            "--out", out, "--svg"]
    if a.workers:
        argv += ["--workers", str(a.workers)]
    code = main(argv)
    if code == 0:
        for n100 in sorted(Path(out).glob("cell_d*_N100.csv")):
            main(["histogram", str(n100), "--out", str(Path(out) / f"hist_{n100.stem}")])
    sys.exit(code)
