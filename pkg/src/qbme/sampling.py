"""Seeded random states, unitaries, ensembles and outcome sampling."""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Union

import numpy as np

from .core import (DensityMatrix, Ensemble, PureState, check_probabilities,
                   dagger, tolerances, validate_density)
from .errors import (DegenerateQR, DimensionMismatch, NotNormalized, NotUnitary,
                     RankOutOfRange)

_QR_PIVOT_FLOOR = 1e-14
_QR_RETRIES = 3


class RngStream:
    """Independent random stream identified by ``(master_seed, stream_index)``.

    Backed by a Philox counter-based generator keyed through a SeedSequence
    spawn key, so each experiment index owns a reproducible stream that does
    not depend on how many other streams exist or in which order they run.
    """

    def __init__(self, master_seed: int, stream_index: int = 0):
        if master_seed < 0 or stream_index < 0:
            raise ValueError("seed and stream index must be non-negative")
        self.master_seed = int(master_seed)
        self.stream_index = int(stream_index)
        seq = np.random.SeedSequence(self.master_seed, spawn_key=(self.stream_index,))
        self.generator = np.random.Generator(np.random.Philox(seq))

    def __repr__(self):
        return f"RngStream(master_seed={self.master_seed}, stream_index={self.stream_index})"


RngLike = Union[RngStream, np.random.Generator, int]


def as_generator(rng: RngLike) -> np.random.Generator:
    if isinstance(rng, RngStream):
        return rng.generator
    if isinstance(rng, np.random.Generator):
        return rng
    return RngStream(int(rng)).generator


@dataclass(frozen=True, eq=False)
class Unitary:
    matrix: np.ndarray

    def __post_init__(self):
        u = np.asarray(self.matrix, dtype=complex)
        if u.ndim != 2 or u.shape[0] != u.shape[1]:
            raise DimensionMismatch(f"unitary must be square, got shape {u.shape}")
        dev = float(np.max(np.abs(dagger(u) @ u - np.eye(u.shape[0]))))
        if dev > tolerances().unitary:
            raise NotUnitary(f"max |U^dagger U - I| = {dev:.3e}")
        object.__setattr__(self, "matrix", u)

    def __array__(self, dtype=None, copy=None):
        return self.matrix if dtype is None else self.matrix.astype(dtype)

    @property
    def d(self) -> int:
        return self.matrix.shape[0]


def _check_dim(d: int) -> None:
    if int(d) < 1:
        raise ValueError(f"dimension must be >= 1, got {d}")
    if int(d) > tolerances().max_dim:
        raise ValueError(f"dimension {d} exceeds configured cap {tolerances().max_dim}")


def _complex_normal(gen: np.random.Generator, shape) -> np.ndarray:
    # unit variance per real component
    z = gen.standard_normal((2, *shape))
    return z[0] + 1j * z[1]


def ginibre_matrix(d: int, rng: RngLike) -> np.ndarray:
    _check_dim(d)
    return _complex_normal(as_generator(rng), (d, d))


def _phase_fixed_qr(g: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Reduced QR with Q's columns rotated by the phases of diag(R)."""
    q, r = np.linalg.qr(g)
    diag = np.diagonal(r, axis1=-2, axis2=-1)
    bad = np.min(np.abs(diag), axis=-1) < _QR_PIVOT_FLOOR
    safe = np.where(np.abs(diag) > 0, diag, 1.0)
    return q * (safe / np.abs(safe))[..., None, :], bad


def _isometries(n: int, d: int, r: int, gen: np.random.Generator) -> np.ndarray:
    """n random d x r isometries via phase-fixed QR of Ginibre blocks."""
    g = _complex_normal(gen, (n, d, r))
    q, bad = _phase_fixed_qr(g)
    for idx in np.flatnonzero(bad):
        for _ in range(_QR_RETRIES):
            qi, bi = _phase_fixed_qr(_complex_normal(gen, (d, r)))
            if not bi:
                q[idx] = qi
                break
        else:
            raise DegenerateQR(f"QR pivot below {_QR_PIVOT_FLOOR} after {_QR_RETRIES} resamples")
    return q


def haar_unitaries(n: int, d: int, rng: RngLike) -> np.ndarray:
    """Stack of n Haar-distributed d x d unitaries, shape (n, d, d)."""
    _check_dim(d)
    return _isometries(n, d, d, as_generator(rng))


def haar_unitary(d: int, rng: RngLike) -> Unitary:
    return Unitary(haar_unitaries(1, d, rng)[0])


def haar_pure_state(d: int, rng: RngLike) -> PureState:
    return PureState(haar_unitary(d, rng).matrix[:, 0])


def _ginibre_states(n: int, d: int, gen: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    g = _complex_normal(gen, (n, d, d))
    factors = dagger(g) / np.sqrt(np.sum(np.abs(g) ** 2, axis=(1, 2)))[:, None, None]
    return factors @ dagger(factors), factors


def ginibre_state(d: int, rng: RngLike) -> DensityMatrix:
    """rho = G^dagger G / Tr(G^dagger G), Hilbert-Schmidt distributed."""
    _check_dim(d)
    states, _ = _ginibre_states(1, d, as_generator(rng))
    return validate_density(states[0])


def _positive_uniforms(gen: np.random.Generator, shape) -> np.ndarray:
    u = gen.random(shape)
    while np.any(u == 0.0):
        u = np.where(u == 0.0, gen.random(shape), u)
    return u


def _fixed_rank_states(n: int, d: int, r: int, gen: np.random.Generator):
    lam = _positive_uniforms(gen, (n, r))
    lam /= lam.sum(axis=1, keepdims=True)
    v = _isometries(n, d, r, gen)
    factors = np.zeros((n, d, d), dtype=complex)
    factors[:, :, :r] = v * np.sqrt(lam)[:, None, :]
    return factors @ dagger(factors), factors


def fixed_rank_state(d: int, r: int, rng: RngLike) -> DensityMatrix:
    """Rank-r state V diag(lambda) V^dagger with lambda from normalized uniforms."""
    _check_dim(d)
    if not 1 <= r <= d:
        raise RankOutOfRange(f"rank {r} outside 1..{d}")
    states, _ = _fixed_rank_states(1, d, r, as_generator(rng))
    return validate_density(states[0])


def inverse_transform_sample(p, rng: RngLike) -> int:
    """Smallest index whose cumulative probability exceeds a uniform draw."""
    p = np.asarray(p, dtype=float)
    try:
        check_probabilities(p)
    except NotNormalized:
        # tolerate accumulated rounding at the level of the likelihood clamp
        if p.ndim != 1 or np.any(p < 0) or abs(p.sum() - 1.0) > 1e-9:
            raise
    u = as_generator(rng).random()
    cdf = np.cumsum(p)
    x = int(np.searchsorted(cdf, u, side="right"))
    if x >= p.size:
        # u beyond a cdf total slightly below 1: last outcome with mass
        x = int(np.flatnonzero(p > 0)[-1])
    return x


def mixed_rank_assignment(d: int, L: int) -> np.ndarray:
    """Rank of each member: round-robin 1, 2, ..., d, 1, 2, ..."""
    return np.arange(L) % d + 1


def build_ensemble(kind: str, d: int, L: int, rng: RngLike) -> Ensemble:
    """Uniform-prior ensemble of L random states of the requested kind."""
    _check_dim(d)
    if int(L) < 1:
        raise ValueError(f"ensemble size must be >= 1, got {L}")
    gen = as_generator(rng)
    seed = rng.master_seed if isinstance(rng, RngStream) else None
    if kind == "pure-haar":
        vecs = haar_unitaries(L, d, gen)[:, :, 0]
        states = np.einsum("ai,aj->aij", vecs, np.conj(vecs))
        factors = vecs[:, :, None]
    elif kind == "ginibre":
        states, factors = _ginibre_states(L, d, gen)
    elif kind == "mixed-rank":
        ranks = mixed_rank_assignment(d, L)
        states = np.empty((L, d, d), dtype=complex)
        factors = np.empty((L, d, d), dtype=complex)
        for r in range(1, d + 1):
            idx = np.flatnonzero(ranks == r)
            if idx.size:
                states[idx], factors[idx] = _fixed_rank_states(idx.size, d, r, gen)
    else:
        raise ValueError(f"unknown ensemble kind {kind!r}; expected pure-haar, ginibre or mixed-rank")
    return Ensemble(states, np.full(L, 1.0 / L), kind=kind, seed=seed, factors=factors)


def ensemble_to_json(ens: Ensemble) -> dict:
    return {
        "kind": ens.kind,
        "d": ens.d,
        "L": ens.L,
        "seed": ens.seed,
        "states": np.stack([ens.states.real, ens.states.imag], axis=-1).tolist(),
        "prior": ens.prior.tolist(),
    }


def ensemble_from_json(data: dict) -> Ensemble:
    try:
        arr = np.asarray(data["states"], dtype=float)
        prior = np.asarray(data["prior"], dtype=float)
        kind = data.get("kind", "custom")
        d, L = int(data["d"]), int(data["L"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"malformed ensemble JSON: {exc}") from exc
    if arr.shape != (L, d, d, 2):
        raise DimensionMismatch(f"states array has shape {arr.shape}, expected {(L, d, d, 2)}")
    states = arr[..., 0] + 1j * arr[..., 1]
    return Ensemble(states, prior, kind=kind, seed=data.get("seed"))


def save_ensemble(ens: Ensemble, path) -> None:
    Path(path).write_text(json.dumps(ensemble_to_json(ens)))


def load_ensemble(path) -> Ensemble:
    return ensemble_from_json(json.loads(Path(path).read_text()))
