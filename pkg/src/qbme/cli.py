"""Batch command line: ``qbme {run-haar,compare-designs,pgm,bounds,histogram,gen-ensemble}``.

Configuration precedence is command-line flag, then config file, then the
built-in default. A config file may also be a ``manifest.json`` written by an
earlier run, which replays that run's resolved configuration.

Exit codes: 0 success, 2 usage or configuration error, 3 runtime failure,
4 identity verification failure.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from . import experiments as ex
from . import pgm as pgm_mod
from . import svg
from .core import validate_density
from .output import Manifest, write_csv, write_json
from .sampling import RngStream, build_ensemble, ensemble_to_json, load_ensemble

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME, EXIT_VERIFY = 0, 2, 3, 4

DEFAULTS = {
    "run-haar": {"d": [2], "N": [1], "L": 10_000, "I": 100, "ensemble": "pure-haar",
                 "source": "haar", "master_seed": 0, "weighting": "posterior", "bins": 40,
                 "timing": False},
    "compare-designs": {"d": 2, "N": [1, 10, 50, 100], "L": 10_000, "I": 100,
                        "ensemble": "ginibre", "sources": ["pauli", "2design", "clifford", "haar"],
                        "master_seed": 0, "weighting": "posterior"},
    "pgm": {"mode": "scatter", "corpus": 100, "ensemble_file": None, "ensemble": "ginibre",
            "d": 2, "L": 1000, "trials": 1000, "rho0": None, "master_seed": 0},
    "bounds": {"d": [2, 3, 4], "N": [1, 2, 5, 10]},
    "histogram": {"input": None, "bins": 40},
    "gen-ensemble": {"ensemble": "pure-haar", "d": 2, "L": 100, "master_seed": 0},
}


class UsageError(Exception):
    pass


def parse_grid(text) -> list[int]:
    """'2,4,8' or '2-5' or an int/list from JSON -> list of ints."""
    if isinstance(text, int):
        return [text]
    if isinstance(text, list):
        return [int(v) for v in text]
    out = []
    for part in str(text).split(","):
        part = part.strip()
        if "-" in part[1:]:
            lo, hi = part.split("-", 1)
            out.extend(range(int(lo), int(hi) + 1))
        elif part:
            out.append(int(part))
    if not out:
        raise UsageError(f"empty grid {text!r}")
    return out


def _read_config_file(path, command: str) -> dict:
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"config file not found: {path}")
    try:
        data = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise UsageError(f"config file is not valid JSON: {exc}") from exc
    if "resolved_config" in data:
        if data.get("command") != command:
            raise UsageError(f"manifest is for {data.get('command')!r}, not {command!r}")
        data = data["resolved_config"]
    unknown = set(data) - set(DEFAULTS[command])
    if unknown:
        raise UsageError(f"unknown config keys for {command}: {sorted(unknown)}")
    return data


def resolve_config(command: str, args: argparse.Namespace, flag_map: dict) -> dict:
    cfg = dict(DEFAULTS[command])
    if getattr(args, "config", None):
        cfg.update(_read_config_file(args.config, command))
    for flag, key in flag_map.items():
        value = getattr(args, flag, None)
        if value is not None and value is not False:
            cfg[key] = value
    return cfg


def _prepare_out(args, command: str) -> Path:
    out = Path(args.out) if args.out else Path("qbme-out") / command
    out.mkdir(parents=True, exist_ok=True)
    return out


def _experiment_config(cfg: dict, d: int, n: int, source: str | None = None) -> ex.ExperimentConfig:
    return ex.ExperimentConfig(d=d, N=n, L=int(cfg["L"]), I=int(cfg["I"]),
                               ensemble=cfg["ensemble"], source=source or cfg.get("source", "haar"),
                               master_seed=int(cfg["master_seed"]), weighting=cfg["weighting"],
                               bins=int(cfg.get("bins", 40)))


def _summary_json(summary: ex.BatchSummary) -> dict:
    return {
        "mean": summary.mean,
        "std": summary.std,
        "stderr": summary.stderr,
        "I": len(summary.fidelities),
        "histogram": {"bin_edges": summary.bin_edges.tolist(), "counts": summary.counts.tolist()},
        "config": summary.config.to_dict(),
        "code_version": __version__,
    }


def write_batch(summary: ex.BatchSummary, path: Path, timing: bool) -> Path:
    rows = [(r.stream_index, r.average_fidelity, len(r.outcomes),
             round(r.wall_time * 1000.0, 3) if timing else "") for r in summary.records]
    return write_csv(path, ["stream_index", "avg_fidelity", "n_outcomes", "wall_ms"], rows)


def cmd_run_haar(args) -> int:
    cfg = resolve_config("run-haar", args, {
        "d": "d", "n_shots": "N", "L": "L", "I": "I", "ensemble": "ensemble",
        "seed": "master_seed", "weighting": "weighting", "bins": "bins", "timing": "timing"})
    cfg["d"], cfg["N"] = parse_grid(cfg["d"]), parse_grid(cfg["N"])
    cells = [_experiment_config(cfg, d, n) for d in cfg["d"] for n in cfg["N"]]
    out = _prepare_out(args, "run-haar")
    man = Manifest(out, "run-haar", cfg, cfg["master_seed"])
    man.write()
    figure_rows = []
    for cell in cells:
        s = _guard(lambda: ex.run_batch(cell, workers=args.workers))
        stem = f"cell_d{cell.d}_N{cell.N}"
        man.add(write_batch(s, out / f"{stem}.csv", cfg["timing"]))
        man.add(write_json(out / f"{stem}_summary.json", _summary_json(s)))
        figure_rows.append((cell.d, cell.N, s.mean, s.std))
        print(f"d={cell.d} N={cell.N} mean_fidelity={s.mean:.6f} std={s.std:.6f}")
    man.add(write_csv(out / "figure_data.csv", ["d", "N", "mean_fidelity", "std"], figure_rows))
    if args.svg:
        series = {}
        for n in cfg["N"]:
            pts = [r for r in figure_rows if r[1] == n]
            series[f"N={n}"] = ([r[0] for r in pts], [r[2] for r in pts], [r[3] for r in pts])
        man.add(svg.line_plot(series, out / "figure.svg", "d", "average fidelity",
                              f"{cfg['ensemble']} ensemble, Haar-random bases"))
    man.finish()
    return EXIT_OK


def cmd_compare_designs(args) -> int:
    cfg = resolve_config("compare-designs", args, {
        "d": "d", "n_shots": "N", "L": "L", "I": "I", "ensemble": "ensemble",
        "seed": "master_seed", "weighting": "weighting", "sources": "sources"})
    cfg["N"] = parse_grid(cfg["N"])
    cfg["d"] = parse_grid(cfg["d"])[0]
    if isinstance(cfg["sources"], str):
        cfg["sources"] = [s.strip() for s in cfg["sources"].split(",") if s.strip()]
    for source in cfg["sources"]:
        if source not in ex.SOURCES:
            raise UsageError(f"unknown source {source!r}; choose from {ex.SOURCES}")
    base = _experiment_config(cfg, cfg["d"], cfg["N"][0], source="haar")
    # fail during configuration if a design does not exist at this d
    _ = [base.replace(source=s, N=n) for s in cfg["sources"] for n in cfg["N"]]
    out = _prepare_out(args, "compare-designs")
    man = Manifest(out, "compare-designs", cfg, cfg["master_seed"])
    man.write()
    rows = _guard(lambda: ex.compare_sources(base, cfg["N"], cfg["sources"], workers=args.workers))
    man.add(write_csv(out / "compare_designs.csv", ["source", "N", "mean", "std"],
                      [(r["source"], r["N"], r["mean"], r["std"]) for r in rows]))
    for r in rows:
        print(f"{r['source']:>9} N={r['N']:<4d} mean={r['mean']:.6f} std={r['std']:.6f}")
    if args.svg:
        series = {s: ([r["N"] for r in rows if r["source"] == s],
                      [r["mean"] for r in rows if r["source"] == s],
                      [r["std"] for r in rows if r["source"] == s]) for s in cfg["sources"]}
        man.add(svg.line_plot(series, out / "compare_designs.svg", "N", "average fidelity",
                              f"d={cfg['d']} {cfg['ensemble']} ensemble"))
    man.finish()
    return EXIT_OK


def _load_rho0(path, d: int) -> np.ndarray:
    try:
        data = json.loads(Path(path).read_text())
        arr = np.asarray(data["matrix"] if isinstance(data, dict) else data, dtype=float)
        m = arr[..., 0] + 1j * arr[..., 1]
        return validate_density(m).matrix
    except (OSError, ValueError, KeyError, IndexError, TypeError) as exc:
        raise UsageError(f"cannot read input state {path}: {exc}") from exc


def cmd_pgm(args) -> int:
    cfg = resolve_config("pgm", args, {
        "corpus": "corpus", "ensemble_file": "ensemble_file", "ensemble": "ensemble",
        "d": "d", "L": "L", "trials": "trials", "rho0": "rho0", "seed": "master_seed"})
    if args.verify:
        cfg["mode"] = "verify"
    if cfg["mode"] not in ("scatter", "verify"):
        raise UsageError(f"unknown pgm mode {cfg['mode']!r}")
    cfg["d"] = parse_grid(cfg["d"])[0]
    ensemble = None
    if cfg["mode"] == "scatter":
        if cfg["ensemble_file"]:
            try:
                ensemble = load_ensemble(cfg["ensemble_file"])
            except (OSError, ValueError, KeyError, TypeError) as exc:
                raise UsageError(f"cannot load ensemble {cfg['ensemble_file']}: {exc}") from exc
        elif cfg["ensemble"] not in ex.ENSEMBLES:
            raise UsageError(f"unknown ensemble kind {cfg['ensemble']!r}")
        if int(cfg["trials"]) < 1:
            raise UsageError("trials must be >= 1")
    d = ensemble.d if ensemble is not None else int(cfg["d"])
    rho0 = _load_rho0(cfg["rho0"], d) if cfg["rho0"] and cfg["mode"] == "scatter" else None
    out = _prepare_out(args, "pgm")
    man = Manifest(out, "pgm", cfg, cfg["master_seed"])
    man.write()
    if cfg["mode"] == "verify":
        worst = _guard(lambda: pgm_mod.verify_identities(int(cfg["corpus"]), int(cfg["master_seed"])))
        man.add(write_json(out / "pgm_verify.json", worst))
        for k, v in worst.items():
            print(f"max {k} deviation: {v:.3e}")
        status = "ok" if max(worst.values()) <= pgm_mod.IDENTITY_TOL else "verification-failed"
        man.finish(status)
        if status != "ok":
            print("identity deviation exceeds 1e-8", file=sys.stderr)
            return EXIT_VERIFY
        return EXIT_OK

    def scatter():
        ens = ensemble or build_ensemble(cfg["ensemble"], d, int(cfg["L"]),
                                         RngStream(int(cfg["master_seed"]), 0))
        return pgm_mod.naive_vs_bayes(ens, rho0, RngStream(int(cfg["master_seed"]), 1),
                                      int(cfg["trials"]))

    trials = _guard(scatter)
    man.add(write_csv(out / "pgm_scatter.csv", ["trial", "outcome", "f_naive", "f_bayes"], trials))
    f_naive = float(np.mean([t.f_naive for t in trials]))
    f_bayes = float(np.mean([t.f_bayes for t in trials]))
    man.add(write_json(out / "pgm_summary.json", {"mean_f_naive": f_naive, "mean_f_bayes": f_bayes,
                                                  "trials": len(trials)}))
    print(f"mean F naive={f_naive:.6f} bayes={f_bayes:.6f}")
    if args.svg:
        man.add(svg.scatter_plot([t.f_naive for t in trials], [t.f_bayes for t in trials],
                                 out / "pgm_scatter.svg", "F(rho0, rho_x)", "F(rho0, Bayes estimate)"))
    man.finish()
    return EXIT_OK


def cmd_bounds(args) -> int:
    cfg = resolve_config("bounds", args, {"d": "d", "n_shots": "N"})
    ds, ns = parse_grid(cfg["d"]), parse_grid(cfg["N"])
    if min(ds) < 2 or min(ns) < 1:
        raise UsageError("bounds need d >= 2 and N >= 1")
    out = _prepare_out(args, "bounds")
    man = Manifest(out, "bounds", cfg, None)
    man.write()
    rows = [(d, n, ex.lemma1_bound(d, n), ex.lemma2_value(d), ex.sym_subspace_dim(d, n))
            for d in ds for n in ns]
    print(f"{'d':>3} {'N':>5} {'lemma1_bound':>14} {'lemma2_infid':>14} {'sym_dim':>10}")
    for d, n, b, l2, dim in rows:
        print(f"{d:>3} {n:>5} {b:>14.4f} {l2:>14.4f} {dim:>10}")
    man.add(write_csv(out / "bounds.csv", ["d", "N", "lemma1_bound", "lemma2_infidelity", "sym_dim"], rows))
    man.finish()
    return EXIT_OK


def cmd_histogram(args) -> int:
    cfg = resolve_config("histogram", args, {"input": "input", "bins": "bins"})
    path = Path(cfg["input"] or "")
    if not path.is_file():
        raise UsageError(f"batch file not found: {cfg['input']}")
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or "avg_fidelity" not in reader.fieldnames:
            raise UsageError(f"{path} has no avg_fidelity column")
        try:
            values = [float(row["avg_fidelity"]) for row in reader]
        except (TypeError, ValueError) as exc:
            raise UsageError(f"bad avg_fidelity value: {exc}") from exc
    if not values:
        raise UsageError(f"{path} has no data rows")
    if int(cfg["bins"]) < 1:
        raise UsageError("bins must be >= 1")
    out = _prepare_out(args, "histogram")
    man = Manifest(out, "histogram", cfg, None)
    man.write()
    edges, counts = ex.histogram(values, int(cfg["bins"]))
    man.add(write_csv(out / "histogram.csv", ["bin_lo", "bin_hi", "count"],
                      [(float(edges[i]), float(edges[i + 1]), int(c)) for i, c in enumerate(counts)]))
    man.finish()
    print(f"{len(values)} values in {len(counts)} bins")
    return EXIT_OK


def cmd_gen_ensemble(args) -> int:
    cfg = resolve_config("gen-ensemble", args, {"ensemble": "ensemble", "d": "d", "L": "L",
                                                "seed": "master_seed"})
    cfg["d"] = parse_grid(cfg["d"])[0]
    if cfg["ensemble"] not in ex.ENSEMBLES or int(cfg["L"]) < 1 or cfg["d"] < 1:
        raise UsageError(f"invalid ensemble request {cfg}")
    out = _prepare_out(args, "gen-ensemble")
    man = Manifest(out, "gen-ensemble", cfg, cfg["master_seed"])
    man.write()
    ens = _guard(lambda: build_ensemble(cfg["ensemble"], cfg["d"], int(cfg["L"]),
                                        RngStream(int(cfg["master_seed"]), 0)))
    path = out / "ensemble.json"
    path.write_text(json.dumps(ensemble_to_json(ens)))
    man.add(path)
    man.finish()
    print(f"wrote {path}")
    return EXIT_OK


class RuntimeFailure(Exception):
    pass


def _guard(fn):
    try:
        return fn()
    except Exception as exc:  # reported with the originating module
        raise RuntimeFailure(f"{type(exc).__module__}.{type(exc).__name__}: {exc}") from exc


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qbme", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, workers=False):
        p.add_argument("--config", help="JSON config file or a previous manifest.json")
        p.add_argument("--seed", type=int, help="master seed (unsigned 64-bit)")
        p.add_argument("--out", help="output directory (default qbme-out/<command>)")
        p.add_argument("--svg", action="store_true", help="also write a minimal SVG plot")
        if workers:
            p.add_argument("--workers", type=int, default=None,
                           help="parallel worker processes (default: available cores)")

    p = sub.add_parser("run-haar", help="Haar-random basis batches over a (d, N) grid")
    common(p, workers=True)
    p.add_argument("--d", help="dimensions, e.g. 2,4,8 or 2-8")
    p.add_argument("--n-shots", help="numbers of measurements N, e.g. 1,10,100")
    p.add_argument("--ensemble", choices=ex.ENSEMBLES)
    p.add_argument("--L", type=int)
    p.add_argument("--I", type=int)
    p.add_argument("--weighting", choices=ex.WEIGHTINGS)
    p.add_argument("--bins", type=int)
    p.add_argument("--timing", action="store_true", help="fill the wall_ms column")
    p.set_defaults(func=cmd_run_haar)

    p = sub.add_parser("compare-designs", help="Pauli, 2-design, Clifford and Haar bases at d=2")
    common(p, workers=True)
    p.add_argument("--d")
    p.add_argument("--n-shots")
    p.add_argument("--ensemble", choices=ex.ENSEMBLES)
    p.add_argument("--L", type=int)
    p.add_argument("--I", type=int)
    p.add_argument("--weighting", choices=ex.WEIGHTINGS)
    p.add_argument("--sources", help="comma-separated subset of pauli,2design,clifford,haar")
    p.set_defaults(func=cmd_compare_designs)

    p = sub.add_parser("pgm", help="naive vs Bayes fidelities under the PGM, or identity checks")
    common(p)
    p.add_argument("--verify", action="store_true", help="check the PGM identities on a random corpus")
    p.add_argument("--corpus", type=int, help="number of random ensembles for --verify")
    p.add_argument("--ensemble-file", help="ensemble JSON written by gen-ensemble")
    p.add_argument("--ensemble", choices=ex.ENSEMBLES)
    p.add_argument("--d")
    p.add_argument("--L", type=int)
    p.add_argument("--trials", type=int)
    p.add_argument("--rho0", help="fixed input state JSON; default redraws it from the ensemble")
    p.set_defaults(func=cmd_pgm)

    p = sub.add_parser("bounds", help="closed-form infidelity bound and single-shot value")
    common(p)
    p.add_argument("--d")
    p.add_argument("--n-shots")
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("histogram", help="re-bin a batch CSV's avg_fidelity column")
    common(p)
    p.add_argument("input", nargs="?", help="batch CSV from run-haar")
    p.add_argument("--bins", type=int)
    p.set_defaults(func=cmd_histogram)

    p = sub.add_parser("gen-ensemble", help="sample an ensemble and save it as JSON")
    common(p)
    p.add_argument("--ensemble", choices=ex.ENSEMBLES)
    p.add_argument("--d")
    p.add_argument("--L", type=int)
    p.set_defaults(func=cmd_gen_ensemble)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, ex.ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except RuntimeFailure as exc:
        print(f"runtime failure: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
