"""Born-rule likelihoods, sequential Bayes updates and the Bayesian mean estimator."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .core import (DensityMatrix, Ensemble, Povm, as_matrix, dagger,
                   infidelity, tolerances, validate_density)
from .errors import (DimensionMismatch, IdentityViolated, NotUnitary,
                     ZeroProbabilityOutcome)

MIN_OUTCOME_PROB = 1e-300


def basis_povm(u) -> Povm:
    """Rank-one projective measurement onto the columns of a unitary."""
    u = np.asarray(u, dtype=complex)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        raise NotUnitary(f"basis matrix must be square, got shape {u.shape}")
    dev = float(np.max(np.abs(dagger(u) @ u - np.eye(u.shape[0]))))
    if dev > tolerances().unitary:
        raise NotUnitary(f"max |U^dagger U - I| = {dev:.3e}")
    cols = u.T
    return Povm(np.einsum("xi,xj->xij", cols, np.conj(cols)))


def _clamp(p: np.ndarray) -> np.ndarray:
    clamp = tolerances().likelihood_clamp
    return np.where((p < 0) & (p >= -clamp), 0.0, p)


def likelihood(povm: Povm, rho) -> np.ndarray:
    """p(x|rho) = Tr(E_x rho) for every outcome x."""
    r = as_matrix(rho)
    if r.shape != (povm.d, povm.d):
        raise DimensionMismatch(f"state of shape {r.shape} vs POVM dimension {povm.d}")
    return _clamp(np.real(np.einsum("xij,ji->x", povm.effects, r)))


def likelihood_matrix(povm: Povm, ensemble: Ensemble) -> np.ndarray:
    """Array of shape (L, K) with entry [a, x] = Tr(E_x rho_a)."""
    if ensemble.d != povm.d:
        raise DimensionMismatch(f"ensemble dimension {ensemble.d} vs POVM dimension {povm.d}")
    return _clamp(np.real(np.einsum("xij,aji->ax", povm.effects, ensemble.states)))


def basis_likelihoods(u: np.ndarray, ensemble: Ensemble) -> np.ndarray:
    """Likelihood matrix for the basis given by the columns of ``u``.

    Uses the factors rho_a = B_a B_a^dagger: p(x|a) = ||(U^dagger B_a)_x||^2.
    """
    c = dagger(np.asarray(u))[None] @ ensemble.factors
    return np.sum(c.real ** 2 + c.imag ** 2, axis=-1)


@dataclass(frozen=True, eq=False)
class Posterior:
    """Weights over ensemble members, held as normalized log-weights.

    Members ruled out by an observation keep weight zero (log-weight -inf)
    so indices stay aligned with the ensemble.
    """

    ensemble: Ensemble
    log_weights: np.ndarray
    update_count: int = 0
    outcomes: tuple = field(default=())

    @classmethod
    def from_prior(cls, ensemble: Ensemble, weights=None) -> "Posterior":
        w = ensemble.prior if weights is None else np.asarray(weights, dtype=float)
        if w.shape != (ensemble.L,):
            raise DimensionMismatch(f"{w.shape[0]} weights for {ensemble.L} states")
        with np.errstate(divide="ignore"):
            logw = np.log(w / w.sum())
        return cls(ensemble, logw)

    @property
    def weights(self) -> np.ndarray:
        return np.exp(self.log_weights)

    def updated(self, lik: np.ndarray, outcome=None) -> "Posterior":
        """Multiply in the likelihood column p(x|a) of an observed outcome and renormalize."""
        lik = np.asarray(lik, dtype=float)
        if lik.shape != self.log_weights.shape:
            raise DimensionMismatch(f"likelihood of length {lik.size} for {self.log_weights.size} states")
        p_x = float(np.dot(self.weights, lik))
        if not p_x > MIN_OUTCOME_PROB:
            raise ZeroProbabilityOutcome(f"outcome {outcome} has probability {p_x:.3e}")
        with np.errstate(divide="ignore"):
            logw = self.log_weights + np.log(lik)
        shift = np.max(logw)
        logw = logw - (shift + np.log(np.sum(np.exp(logw - shift))))
        return Posterior(self.ensemble, logw, self.update_count + 1, self.outcomes + (outcome,))


def total_probability(povm: Povm, ensemble: Ensemble, posterior=None) -> np.ndarray:
    """p(x) = sum_a w_a Tr(E_x rho_a), cross-checked against Tr(E_x rho_bar)."""
    w = ensemble.prior if posterior is None else (
        posterior.weights if isinstance(posterior, Posterior) else np.asarray(posterior, float))
    per_state = w @ likelihood_matrix(povm, ensemble)
    via_mean = likelihood(povm, ensemble.mean_state(w))
    dev = float(np.max(np.abs(per_state - via_mean)))
    if dev > 1e-10:
        raise IdentityViolated(f"total probability routes differ by {dev:.3e}")
    return per_state


def bayes_update(posterior: Posterior, povm: Povm, x: int) -> Posterior:
    lik = likelihood_matrix(povm, posterior.ensemble)[:, x]
    return posterior.updated(lik, outcome=x)


def bayes_estimator(posterior) -> DensityMatrix:
    """Posterior mean state sum_a p(a|x) rho_a."""
    if isinstance(posterior, Posterior):
        return validate_density(posterior.ensemble.mean_state(posterior.weights))
    raise TypeError("bayes_estimator expects a Posterior")


def risk(rho_true, estimator: Callable[[int], object], povm: Povm) -> float:
    """sum_x Tr(E_x rho) (1 - F(rho, estimator(x))); outcomes of zero probability are skipped."""
    p = likelihood(povm, rho_true)
    total = 0.0
    for x, px in enumerate(p):
        if px > 0:
            total += px * infidelity(rho_true, estimator(x))
    return total


def average_risk(ensemble: Ensemble, weights, risk_per_state: Sequence[float]) -> float:
    w = ensemble.prior if weights is None else np.asarray(weights, dtype=float)
    r = np.asarray(risk_per_state, dtype=float)
    if w.shape != r.shape or w.shape[0] != ensemble.L:
        raise DimensionMismatch(f"{w.size} weights, {r.size} risks, {ensemble.L} states")
    return float(np.dot(w, r))
