"""Pretty good measurement, its Bayesian posterior, and the Petz recovery map."""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .core import (DensityMatrix, Ensemble, Povm, as_matrix, dagger, fidelity,
                   hermitian_part, tolerances, validate_density)
from .errors import (DegenerateEnsemble, DimensionMismatch, IdentityViolated,
                     NotPSD, OutcomeOutOfRange)
from .sampling import RngLike, as_generator, build_ensemble, inverse_transform_sample

SUPPORT_CUTOFF = 1e-12
IDENTITY_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class PgmMeasurement:
    """Square-root measurement of an ensemble, one effect per member plus a residual.

    The residual effect covers the orthogonal complement of supp(rho_out)
    and keeps the effects complete when rho_out is rank deficient.
    """

    ensemble: Ensemble
    rho_out: np.ndarray
    inv_sqrt: np.ndarray
    effects: np.ndarray
    residual: np.ndarray
    support_rank: int

    @property
    def L(self) -> int:
        return self.effects.shape[0]

    @property
    def povm(self) -> Povm:
        """All L + 1 effects; outcome L is the residual."""
        return Povm(np.concatenate([self.effects, self.residual[None]]))

    def outcome_probabilities(self, rho) -> tuple[np.ndarray, float]:
        """(Tr(E_x rho) for x < L, Tr(E_perp rho))."""
        r = as_matrix(rho)
        if r.shape != self.rho_out.shape:
            raise DimensionMismatch(f"state of shape {r.shape} vs PGM dimension {self.rho_out.shape}")
        p = np.real(np.einsum("xij,ji->x", self.effects, r))
        return np.clip(p, 0.0, None), float(np.real(np.trace(self.residual @ r)))


def inverse_sqrt_on_support(m: np.ndarray, cutoff: float = SUPPORT_CUTOFF) -> tuple[np.ndarray, int]:
    """Pseudo-inverse square root; eigenvalues below cutoff * largest count as zero."""
    w, v = np.linalg.eigh(hermitian_part(m))
    top = float(w[-1])
    if top <= 0:
        raise DegenerateEnsemble("rho_out has numerical rank 0")
    keep = w > cutoff * top
    inv = np.zeros_like(w)
    inv[keep] = 1.0 / np.sqrt(w[keep])
    return (v * inv) @ dagger(v), int(keep.sum())


def build_pgm(ensemble: Ensemble) -> PgmMeasurement:
    """E_x = rho_out^{-1/2} p_x rho_x rho_out^{-1/2}, rho_out = sum_a p_a rho_a."""
    if ensemble.L < 1:
        raise DegenerateEnsemble("empty ensemble")
    tol = tolerances()
    rho_out = ensemble.mean_state()
    inv_sqrt, rank = inverse_sqrt_on_support(rho_out)
    weighted = ensemble.prior[:, None, None] * ensemble.states
    effects = hermitian_part(inv_sqrt[None] @ weighted @ inv_sqrt[None])
    residual = hermitian_part(np.eye(ensemble.d) - effects.sum(axis=0))
    min_eig = min(float(np.min(np.linalg.eigvalsh(effects))),
                  float(np.min(np.linalg.eigvalsh(residual))))
    if min_eig < -tol.psd:
        raise NotPSD(f"PGM effect has eigenvalue {min_eig:.3e}")
    leak = np.real(np.einsum("ij,aji->a", residual, ensemble.states))
    if np.max(leak) > 1e-9:
        raise IdentityViolated(f"residual effect has weight {np.max(leak):.3e} on an ensemble state")
    for arr in (rho_out, inv_sqrt, effects, residual):
        arr.setflags(write=False)
    return PgmMeasurement(ensemble, rho_out, inv_sqrt, effects, residual, rank)


def _check_outcome(pgm: PgmMeasurement, x: int) -> None:
    if not 0 <= x < pgm.L:
        raise OutcomeOutOfRange(f"outcome {x} outside 0..{pgm.L - 1}")


def posterior_routes(pgm: PgmMeasurement, x: int) -> tuple[np.ndarray, np.ndarray, float]:
    """Return (Bayes-rule posterior, Tr(E_a rho_x) for all a, total probability p(x))."""
    _check_outcome(pgm, x)
    ens = pgm.ensemble
    lik = np.real(np.einsum("ij,aji->a", pgm.effects[x], ens.states))
    joint = ens.prior * lik
    p_x = float(joint.sum())
    swapped = np.real(np.einsum("aij,ji->a", pgm.effects, ens.states[x]))
    return joint / p_x, swapped, p_x


def pgm_posterior(pgm: PgmMeasurement, x: int) -> np.ndarray:
    """p(a|x) by Bayes' rule, verified against the swapped-index form Tr(E_a rho_x)."""
    bayes, swapped, p_x = posterior_routes(pgm, x)
    dev = float(np.max(np.abs(bayes - swapped)))
    if dev > IDENTITY_TOL:
        raise IdentityViolated(f"Bayes and swapped-index posteriors differ by {dev:.3e}")
    marginal_dev = abs(p_x - pgm.ensemble.prior[x])
    if marginal_dev > IDENTITY_TOL:
        raise IdentityViolated(f"p(x) differs from the prior weight by {marginal_dev:.3e}")
    return bayes


def posterior_table(pgm: PgmMeasurement) -> np.ndarray:
    """All posteriors at once: row x holds Tr(E_a rho_x) over a."""
    return np.clip(np.real(np.einsum("aij,xji->xa", pgm.effects, pgm.ensemble.states)), 0.0, None)


def pgm_bayes_estimator(pgm: PgmMeasurement, x: int) -> DensityMatrix:
    return validate_density(pgm.ensemble.mean_state(pgm_posterior(pgm, x)))


def petz_recovery(pgm: PgmMeasurement, state) -> np.ndarray:
    """Diagonal of the Petz recovery of the preparation channel |a><a| -> rho_a.

    Evaluated through the spectral expansion of each member,
    p_a sum_b lambda_ba <v_ba| rho_out^{-1/2} state rho_out^{-1/2} |v_ba>,
    rather than through the PGM effects.
    """
    r = as_matrix(state)
    if r.shape != pgm.rho_out.shape:
        raise DimensionMismatch(f"state of shape {r.shape} vs PGM dimension {pgm.rho_out.shape}")
    ens = pgm.ensemble
    sandwiched = pgm.inv_sqrt @ r @ pgm.inv_sqrt
    lam, vecs = np.linalg.eigh(ens.states)
    # <v_ba| S |v_ba> for every member a and eigenvector b
    quad = np.real(np.einsum("aib,ij,ajb->ab", np.conj(vecs), sandwiched, vecs))
    return ens.prior * np.sum(lam * quad, axis=1)


def petz_residual(pgm: PgmMeasurement, state) -> float:
    """Mass of ``state`` outside supp(rho_out), not returned by :func:`petz_recovery`."""
    return 1.0 - float(np.sum(petz_recovery(pgm, state)))


class Trial(NamedTuple):
    trial: int
    outcome: int
    f_naive: float
    f_bayes: float


def naive_vs_bayes(ensemble: Ensemble, rho0, rng: RngLike, trials: int,
                   pgm: PgmMeasurement | None = None) -> list[Trial]:
    """Fidelity of the naive estimate rho_x against the PGM Bayes estimate.

    ``rho0`` is a fixed input state, or None to draw a fresh input from the
    ensemble (by prior weight) on every trial. Outcomes are sampled from the
    PGM statistics of the input restricted to the L ensemble outcomes.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    gen = as_generator(rng)
    pgm = build_pgm(ensemble) if pgm is None else pgm
    fixed = None if rho0 is None else validate_density(rho0)
    if fixed is not None and fixed.d != ensemble.d:
        raise DimensionMismatch(f"input dimension {fixed.d} vs ensemble dimension {ensemble.d}")
    estimates: dict[int, np.ndarray] = {}
    out = []
    for t in range(trials):
        if fixed is None:
            a0 = inverse_transform_sample(ensemble.prior, gen)
            rho = ensemble.states[a0]
        else:
            rho = fixed.matrix
        p, _ = pgm.outcome_probabilities(rho)
        x = inverse_transform_sample(p / p.sum(), gen)
        if x not in estimates:
            estimates[x] = pgm_bayes_estimator(pgm, x).matrix
        out.append(Trial(t, x, fidelity(rho, ensemble.states[x]), fidelity(rho, estimates[x])))
    return out


def random_ensemble(d: int, L: int, kind: str, rng: RngLike) -> Ensemble:
    """Uniform-prior ensemble, or with kind "weighted" a Ginibre ensemble with a random prior."""
    gen = as_generator(rng)
    if kind == "weighted":
        base = build_ensemble("ginibre", d, L, gen)
        prior = gen.random(L) + 0.05
        return Ensemble(base.states, prior / prior.sum(), kind="custom", factors=base.factors)
    return build_ensemble(kind, d, L, gen)


CORPUS_KINDS = ("pure-haar", "ginibre", "mixed-rank", "weighted")


def identity_corpus(n: int = 100, seed: int = 0, max_d: int = 5, max_L: int = 20):
    """Random ensembles cycling through kinds, with d in 2..max_d and L in 1..max_L."""
    gen = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
    for i in range(n):
        d = int(gen.integers(2, max_d + 1))
        L = int(gen.integers(1, max_L + 1))
        yield random_ensemble(d, L, CORPUS_KINDS[i % len(CORPUS_KINDS)], gen)


def identity_deviations(ensemble: Ensemble) -> dict[str, float]:
    """Largest violations of the PGM posterior, marginal and Petz identities on one ensemble."""
    pgm = build_pgm(ensemble)
    dev = {"posterior": 0.0, "marginal": 0.0, "petz": 0.0, "completeness": 0.0}
    total = pgm.effects.sum(axis=0) + pgm.residual
    dev["completeness"] = float(np.max(np.abs(total - np.eye(ensemble.d))))
    for x in range(pgm.L):
        bayes, swapped, p_x = posterior_routes(pgm, x)
        petz = petz_recovery(pgm, ensemble.states[x])
        dev["posterior"] = max(dev["posterior"], float(np.max(np.abs(bayes - swapped))))
        dev["marginal"] = max(dev["marginal"], abs(p_x - float(ensemble.prior[x])))
        dev["petz"] = max(dev["petz"], float(np.max(np.abs(petz - bayes))))
    return dev


def verify_identities(n: int = 100, seed: int = 0) -> dict[str, float]:
    worst = {"posterior": 0.0, "marginal": 0.0, "petz": 0.0, "completeness": 0.0}
    for ens in identity_corpus(n, seed):
        for k, v in identity_deviations(ens).items():
            worst[k] = max(worst[k], v)
    return worst
