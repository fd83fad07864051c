"""Sequential Bayesian mean estimation under random bases, batched over seeded streams."""
from __future__ import annotations

import dataclasses
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from .bayes import Posterior, basis_likelihoods
from .core import Ensemble, fidelity_from_factors, override_tolerances
from .designs import NAMED_SETS, load_unitary_set, named_set
from .sampling import RngStream, build_ensemble, haar_unitaries, inverse_transform_sample

ENSEMBLES = ("pure-haar", "ginibre", "mixed-rank")
SOURCES = ("haar",) + tuple(NAMED_SETS)
WEIGHTINGS = ("posterior", "prior")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    """One batch of sequential-estimation runs.

    ``weighting`` selects the ensemble weights used when averaging the final
    fidelity: "posterior" uses the posterior held before the last basis (the
    prior when N=1), "prior" uses the original prior. ``source`` is "haar", a
    named qubit design, or a path to a unitary-set JSON file.
    """

    d: int = 2
    L: int = 10_000
    N: int = 1
    I: int = 100
    ensemble: str = "pure-haar"
    source: str = "haar"
    master_seed: int = 0
    weighting: str = "posterior"
    bins: int = 40
    tolerances: dict = field(default_factory=dict)

    def __post_init__(self):
        for name in ("d", "L", "I", "bins"):
            if int(getattr(self, name)) < 1:
                raise ConfigError(f"{name} must be a positive integer, got {getattr(self, name)}")
        if int(self.N) < 0:
            raise ConfigError(f"N must be non-negative, got {self.N}")
        if self.ensemble not in ENSEMBLES:
            raise ConfigError(f"ensemble must be one of {ENSEMBLES}, got {self.ensemble!r}")
        if self.weighting not in WEIGHTINGS:
            raise ConfigError(f"weighting must be one of {WEIGHTINGS}, got {self.weighting!r}")
        if not 0 <= int(self.master_seed) < 2 ** 64:
            raise ConfigError("master_seed must fit in 64 unsigned bits")
        if self.source in NAMED_SETS:
            if self.d != 2:
                raise ConfigError(f"design {self.source!r} is only defined for d=2")
        elif self.source != "haar" and not Path(self.source).is_file():
            raise ConfigError(f"unknown measurement source {self.source!r}")

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        return cls(**data)


@dataclass(frozen=True, eq=False)
class ExperimentRecord:
    stream_index: int
    outcomes: tuple
    final_weights: np.ndarray
    average_fidelity: float
    wall_time: float


@dataclass(frozen=True, eq=False)
class BatchSummary:
    config: ExperimentConfig
    records: list
    fidelities: np.ndarray
    mean: float
    std: float
    bin_edges: np.ndarray
    counts: np.ndarray

    @property
    def stderr(self) -> float:
        return self.std / math.sqrt(len(self.fidelities))


def _unitary_source(cfg: ExperimentConfig) -> Callable[[np.random.Generator], np.ndarray]:
    if cfg.source == "haar":
        return lambda gen: haar_unitaries(1, cfg.d, gen)[0]
    us = named_set(cfg.source) if cfg.source in NAMED_SETS else load_unitary_set(cfg.source)
    if us.d != cfg.d:
        raise ConfigError(f"unitary set has d={us.d}, config has d={cfg.d}")
    return lambda gen: us.elements[gen.integers(len(us))]


def last_basis_fidelity(ens: Ensemble, current: np.ndarray, lik: np.ndarray,
                        average_weights: np.ndarray) -> float:
    """Average fidelity of the Bayes estimator for the final basis.

    For each outcome x of the final basis the estimator is the mean of
    ``current * lik[:, x]`` (renormalized); the fidelity with each member a is
    weighted by ``average_weights[a] * lik[a, x]``.
    """
    total = 0.0
    for x in range(lik.shape[1]):
        joint = current * lik[:, x]
        p_x = joint.sum()
        if p_x <= 0:
            continue
        estimate = ens.mean_state(joint / p_x)
        f = fidelity_from_factors(ens.factors, estimate)
        total += float(np.dot(average_weights * lik[:, x], f))
    return total


def prior_mean_fidelity(ens: Ensemble, weights: np.ndarray) -> float:
    return float(np.dot(weights, fidelity_from_factors(ens.factors, ens.mean_state(weights))))


def run_experiment(cfg: ExperimentConfig, stream_index: int) -> ExperimentRecord:
    """One sequential-estimation run on its own random stream.

    The ensemble is drawn first, then for each of the N shots a basis is drawn
    and an outcome is sampled from the total distribution under the current
    posterior. The reported fidelity is evaluated on the last basis against the
    posterior from the first N-1 outcomes; with N=0 it is the fidelity of the
    prior mean.
    """
    start = time.perf_counter()
    with override_tolerances(**cfg.tolerances):
        rng = RngStream(cfg.master_seed, stream_index)
        gen = rng.generator
        ens = build_ensemble(cfg.ensemble, cfg.d, cfg.L, rng)
        draw = _unitary_source(cfg)
        post = Posterior.from_prior(ens)
        fid = prior_mean_fidelity(ens, ens.prior) if cfg.N == 0 else None
        for n in range(cfg.N):
            lik = basis_likelihoods(draw(gen), ens)
            w = post.weights
            p_x = w @ lik
            if n == cfg.N - 1:
                avg_w = w if cfg.weighting == "posterior" else ens.prior
                fid = last_basis_fidelity(ens, w, lik, avg_w)
            x = inverse_transform_sample(p_x / p_x.sum(), gen)
            post = post.updated(lik[:, x], outcome=x)
    return ExperimentRecord(
        stream_index=stream_index,
        outcomes=post.outcomes,
        final_weights=post.weights,
        average_fidelity=min(max(fid, 0.0), 1.0),
        wall_time=time.perf_counter() - start,
    )


def histogram(values, bins: int = 40) -> tuple[np.ndarray, np.ndarray]:
    """Uniform bins over the observed range of ``values``."""
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise ValueError("cannot histogram an empty sample")
    counts, edges = np.histogram(values, bins=bins, range=(values.min(), values.max()))
    return edges, counts


def summarize(cfg: ExperimentConfig, records: Sequence[ExperimentRecord]) -> BatchSummary:
    records = sorted(records, key=lambda r: r.stream_index)
    fids = np.array([r.average_fidelity for r in records])
    n = len(fids)
    mean = math.fsum(fids) / n
    std = math.sqrt(math.fsum((fids - mean) ** 2) / (n - 1)) if n > 1 else 0.0
    edges, counts = histogram(fids, cfg.bins)
    return BatchSummary(cfg, records, fids, mean, std, edges, counts)


def _run_one(args):
    cfg, stream = args
    return run_experiment(cfg, stream)


def default_workers() -> int:
    return os.cpu_count() or 1


def run_batch(cfg: ExperimentConfig, workers: int | None = 1,
              streams: Iterable[int] | None = None) -> BatchSummary:
    """Run I independent experiments on streams 0..I-1 (or the given streams).

    The reduction is ordered by stream index, so results do not depend on the
    number of workers or on completion order.
    """
    streams = list(range(cfg.I)) if streams is None else list(streams)
    workers = default_workers() if workers is None else max(1, int(workers))
    if workers == 1 or len(streams) == 1:
        records = [run_experiment(cfg, s) for s in streams]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(_run_one, [(cfg, s) for s in streams]))
    return summarize(cfg, records)


def lemma1_bound(d: int, N: int) -> float:
    """Infidelity ceiling 1 - (d+3)(N+d-1)! / (d^N (d+1)^2 N! (d-1)!), in exact arithmetic."""
    if d < 2 or N < 1:
        raise ValueError(f"need d >= 2 and N >= 1, got d={d}, N={N}")
    f = Fraction((d + 3) * math.factorial(N + d - 1),
                 d ** N * (d + 1) ** 2 * math.factorial(N) * math.factorial(d - 1))
    return float(1 - f)


def lemma2_fidelity(d: int) -> float:
    """Average fidelity after one basis measurement on Haar-random pure states."""
    if d < 1:
        raise ValueError("d must be >= 1")
    return float(Fraction(d + 3, (d + 1) ** 2))


def lemma2_value(d: int) -> float:
    """The matching average infidelity 1 - (d+3)/(d+1)^2."""
    return float(1 - Fraction(d + 3, (d + 1) ** 2))


def sym_subspace_dim(d: int, N: int) -> int:
    return math.comb(N + d - 1, N)


def compare_sources(cfg: ExperimentConfig, n_grid: Sequence[int],
                    sources: Sequence[str] = ("pauli", "2design", "clifford", "haar"),
                    workers: int | None = 1) -> list[dict]:
    """Batch mean fidelity per (source, N).

    Every source reuses the same master seed, so stream k sees the same
    ensemble under each source and only the measurement draws differ.
    """
    rows = []
    for source in sources:
        for n in n_grid:
            s = run_batch(cfg.replace(source=source, N=int(n)), workers=workers)
            rows.append({"source": source, "N": int(n), "mean": s.mean, "std": s.std,
                         "stderr": s.stderr, "I": len(s.fidelities)})
    return rows


def compare_table(rows: list[dict]) -> dict[tuple[str, int], dict]:
    return {(r["source"], r["N"]): r for r in rows}
