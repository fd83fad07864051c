"""Dense complex linear algebra for quantum states, POVMs and fidelity."""
from __future__ import annotations

import contextlib
import dataclasses
from dataclasses import dataclass
from typing import Iterator, Union

import numpy as np

from .errors import (DimensionMismatch, NotHermitian, NotNormalized, NotPSD,
                     TraceNotOne)


@dataclass(frozen=True)
class Tolerances:
    """Numerical tolerances shared by every validation in the package."""

    hermitian: float = 1e-10
    psd: float = 1e-10
    trace: float = 1e-10
    pure_norm: float = 1e-12
    unitary: float = 1e-10
    povm_sum: float = 1e-9
    prob_sum: float = 1e-12
    likelihood_clamp: float = 1e-12
    # eigenvalues below rank_cutoff * largest are treated as exact zeros
    rank_cutoff: float = 1e-13
    max_dim: int = 64


_TOL = Tolerances()


def tolerances() -> Tolerances:
    return _TOL


def set_tolerances(**overrides) -> Tolerances:
    """Replace fields of the global tolerance record; returns the previous record."""
    global _TOL
    previous = _TOL
    _TOL = dataclasses.replace(_TOL, **overrides)
    return previous


@contextlib.contextmanager
def override_tolerances(**overrides) -> Iterator[Tolerances]:
    global _TOL
    previous = set_tolerances(**overrides)
    try:
        yield _TOL
    finally:
        _TOL = previous


def dagger(m: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(m, -1, -2))


def hermitian_part(m: np.ndarray) -> np.ndarray:
    return 0.5 * (m + dagger(m))


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """A validated density matrix. Build it with :func:`validate_density`."""

    matrix: np.ndarray

    def __array__(self, dtype=None, copy=None):
        if dtype is None:
            return self.matrix
        return self.matrix.astype(dtype)

    @property
    def d(self) -> int:
        return self.matrix.shape[0]

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.matrix)

    def purity(self) -> float:
        return float(np.real(np.vdot(self.matrix, self.matrix)))

    def rank(self, cutoff: float = 1e-10) -> int:
        return int(np.sum(self.eigenvalues() > cutoff))

    @classmethod
    def from_pure(cls, state: Union["PureState", np.ndarray]) -> "DensityMatrix":
        v = state.amplitudes if isinstance(state, PureState) else np.asarray(state)
        return cls(np.outer(v, np.conj(v)))


@dataclass(frozen=True, eq=False)
class PureState:
    amplitudes: np.ndarray

    def __post_init__(self):
        norm = np.linalg.norm(self.amplitudes)
        if abs(norm - 1.0) > _TOL.pure_norm:
            raise NotNormalized(f"pure state norm deviates from 1 by {abs(norm - 1.0):.3e}")

    @property
    def d(self) -> int:
        return self.amplitudes.shape[0]

    def projector(self) -> DensityMatrix:
        return DensityMatrix.from_pure(self)


def as_matrix(m) -> np.ndarray:
    if isinstance(m, DensityMatrix):
        return m.matrix
    if isinstance(m, PureState):
        return DensityMatrix.from_pure(m).matrix
    return np.asarray(m, dtype=complex)


def validate_density(m) -> DensityMatrix:
    """Check Hermiticity, positivity and unit trace; return a read-only DensityMatrix."""
    m = np.array(as_matrix(m), dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionMismatch(f"density matrix must be square, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise NotHermitian("matrix has non-finite entries")
    herm_dev = float(np.max(np.abs(m - dagger(m))))
    if herm_dev > _TOL.hermitian:
        raise NotHermitian(f"max |M - M^dagger| = {herm_dev:.3e} exceeds {_TOL.hermitian:.1e}")
    m = hermitian_part(m)
    min_eig = float(np.linalg.eigvalsh(m)[0])
    if min_eig < -_TOL.psd:
        raise NotPSD(f"minimum eigenvalue {min_eig:.3e} below -{_TOL.psd:.1e}")
    tr = float(np.real(np.trace(m)))
    if abs(tr - 1.0) > _TOL.trace:
        raise TraceNotOne(f"trace is {tr:.12g} (deviation {abs(tr - 1.0):.3e})")
    m.setflags(write=False)
    return DensityMatrix(m)


def psd_eigh(m: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a (stack of) PSD matrices with small negative eigenvalues clamped.

    Eigenvalues in [-psd_tol, 0) become 0; anything more negative raises NotPSD.
    """
    w, v = np.linalg.eigh(hermitian_part(m))
    if np.any(w < -_TOL.psd):
        raise NotPSD(f"minimum eigenvalue {float(w.min()):.3e} below -{_TOL.psd:.1e}")
    return np.clip(w, 0.0, None), v


def sqrtm_psd(m: np.ndarray) -> np.ndarray:
    w, v = psd_eigh(m)
    return (v * np.sqrt(w)[..., None, :]) @ dagger(v)


def psd_factor(m: np.ndarray) -> np.ndarray:
    """Return B with ``m = B B^dagger`` keeping only the numerically nonzero spectrum.

    For a single matrix the result has as many columns as the numerical rank.
    """
    w, v = psd_eigh(m)
    keep = w > _TOL.rank_cutoff * max(float(w[-1]), 0.0)
    if not np.any(keep):
        keep[-1] = True
    return v[:, keep] * np.sqrt(w[keep])


def padded_factors(states: np.ndarray) -> np.ndarray:
    """Stacked version of :func:`psd_factor`: columns outside the support are exact zeros."""
    w, v = psd_eigh(states)
    w = np.where(w > _TOL.rank_cutoff * w[..., -1:], w, 0.0)
    return v * np.sqrt(w)[..., None, :]


def _check_pair(rho, sigma) -> tuple[np.ndarray, np.ndarray]:
    r, s = as_matrix(rho), as_matrix(sigma)
    if r.shape != s.shape or r.ndim != 2:
        raise DimensionMismatch(f"cannot compare states of shapes {r.shape} and {s.shape}")
    return r, s


def fidelity(rho, sigma) -> float:
    """Squared Uhlmann fidelity ``(Tr sqrt(sqrt(rho) sigma sqrt(rho)))**2``.

    The argument of lower numerical rank is factored as ``B B^dagger`` and the
    trace norm is taken on ``B^dagger other B``, which shares the nonzero
    spectrum of ``sqrt(rho) sigma sqrt(rho)``. For a pure argument this reduces
    exactly to ``<psi|other|psi>``.
    """
    r, s = _check_pair(rho, sigma)
    br, bs = psd_factor(r), psd_factor(s)
    if bs.shape[1] < br.shape[1]:
        br, s = bs, r
    m = hermitian_part(dagger(br) @ s @ br)
    w = np.clip(np.linalg.eigvalsh(m), 0.0, None)
    f = float(np.sum(np.sqrt(w)) ** 2)
    return min(max(f, 0.0), 1.0)


def infidelity(rho, sigma) -> float:
    return 1.0 - fidelity(rho, sigma)


def fidelity_from_factors(factors: np.ndarray, sigma: np.ndarray) -> np.ndarray:
    """Fidelities between many states ``B_a B_a^dagger`` and one state ``sigma``.

    ``factors`` has shape (L, d, k). Returns shape (L,).
    """
    m = hermitian_part(dagger(factors) @ np.asarray(sigma) @ factors)
    w = np.clip(np.linalg.eigvalsh(m), 0.0, None)
    return np.clip(np.sum(np.sqrt(w), axis=-1) ** 2, 0.0, 1.0)


@dataclass(frozen=True, eq=False)
class Povm:
    """A measurement: stacked PSD effects of shape (K, d, d) summing to the identity."""

    effects: np.ndarray

    def __post_init__(self):
        e = np.asarray(self.effects, dtype=complex)
        if e.ndim != 3 or e.shape[1] != e.shape[2]:
            raise DimensionMismatch(f"effects must have shape (K, d, d), got {e.shape}")
        herm_dev = float(np.max(np.abs(e - dagger(e))))
        if herm_dev > _TOL.hermitian:
            raise NotHermitian(f"POVM effect not Hermitian (deviation {herm_dev:.3e})")
        min_eig = float(np.min(np.linalg.eigvalsh(hermitian_part(e))))
        if min_eig < -_TOL.psd:
            raise NotPSD(f"POVM effect has eigenvalue {min_eig:.3e}")
        dev = float(np.max(np.abs(e.sum(axis=0) - np.eye(e.shape[1]))))
        if dev > _TOL.povm_sum:
            raise NotNormalized(f"POVM effects sum to identity only within {dev:.3e}")
        e = e.copy()
        e.setflags(write=False)
        object.__setattr__(self, "effects", e)

    @property
    def d(self) -> int:
        return self.effects.shape[1]

    @property
    def n_outcomes(self) -> int:
        return self.effects.shape[0]


def check_probabilities(p, normalized: bool = True) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if p.ndim != 1 or p.size == 0:
        raise NotNormalized("probability vector must be a nonempty 1-d array")
    if np.any(p < 0) or not np.all(np.isfinite(p)):
        raise NotNormalized("probability vector has negative or non-finite entries")
    if normalized and abs(p.sum() - 1.0) > _TOL.prob_sum:
        raise NotNormalized(f"probabilities sum to {p.sum():.15g}")
    return p


def normalize(weights) -> np.ndarray:
    w = check_probabilities(weights, normalized=False)
    total = w.sum()
    if total <= 0:
        raise NotNormalized("weights sum to zero")
    return w / total


ENSEMBLE_KINDS = ("pure-haar", "ginibre", "mixed-rank", "custom")


@dataclass(frozen=True, eq=False)
class Ensemble:
    """L states with prior weights, stored in factored form (p_a, rho_a).

    ``factors`` optionally carries B_a with rho_a = B_a B_a^dagger (shape
    (L, d, k)); samplers that know an exact factor pass it in so fidelities of
    low-rank members avoid eigensolver noise.
    """

    states: np.ndarray
    prior: np.ndarray
    kind: str = "custom"
    seed: int | None = None
    factors: np.ndarray | None = None

    def __post_init__(self):
        states = np.asarray(self.states, dtype=complex)
        if states.ndim != 3 or states.shape[1] != states.shape[2]:
            raise DimensionMismatch(f"states must have shape (L, d, d), got {states.shape}")
        prior = check_probabilities(self.prior)
        if prior.shape[0] != states.shape[0]:
            raise DimensionMismatch(f"{states.shape[0]} states but {prior.shape[0]} prior weights")
        if self.kind not in ENSEMBLE_KINDS:
            raise ValueError(f"unknown ensemble kind {self.kind!r}")
        herm_dev = float(np.max(np.abs(states - dagger(states))))
        if herm_dev > _TOL.hermitian:
            raise NotHermitian(f"ensemble state not Hermitian (deviation {herm_dev:.3e})")
        traces = np.real(np.trace(states, axis1=1, axis2=2))
        tr_dev = float(np.max(np.abs(traces - 1.0)))
        if tr_dev > _TOL.trace:
            raise TraceNotOne(f"ensemble state trace deviates from 1 by {tr_dev:.3e}")
        for arr in (states, prior):
            arr.setflags(write=False)
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "prior", prior)
        if self.factors is None:
            # raises NotPSD for non-positive members
            object.__setattr__(self, "factors", padded_factors(states))

    @property
    def d(self) -> int:
        return self.states.shape[1]

    @property
    def L(self) -> int:
        return self.states.shape[0]

    def __len__(self) -> int:
        return self.L

    def state(self, a: int) -> DensityMatrix:
        return DensityMatrix(self.states[a])

    def weighted(self, a: int) -> np.ndarray:
        """The unnormalized member p_a rho_a."""
        return self.prior[a] * self.states[a]

    def mean_state(self, weights=None) -> np.ndarray:
        w = self.prior if weights is None else np.asarray(weights)
        return np.einsum("a,aij->ij", w, self.states)
