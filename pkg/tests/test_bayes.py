import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qbme.bayes import (Posterior, average_risk, basis_likelihoods, basis_povm,
                        bayes_estimator, bayes_update, likelihood, likelihood_matrix,
                        risk, total_probability)
from qbme.core import Ensemble, Povm
from qbme.errors import DimensionMismatch, NotUnitary, ZeroProbabilityOutcome
from qbme.sampling import RngStream, build_ensemble, haar_unitaries, haar_unitary

from conftest import HADAMARD, KET0, KET1, KETP, random_density


def two_state_ensemble():
    return Ensemble(np.stack([KET0, KETP]), np.array([0.5, 0.5]))


def test_basis_povm_computational():
    povm = basis_povm(np.eye(2))
    assert np.allclose(likelihood(povm, KET0), [1, 0])
    assert np.allclose(likelihood(povm, KETP), [0.5, 0.5])


def test_basis_povm_rejects_non_unitary():
    with pytest.raises(NotUnitary):
        basis_povm(np.array([[1, 1], [0, 1]]))


def test_likelihood_dimension_check():
    with pytest.raises(DimensionMismatch):
        likelihood(basis_povm(np.eye(2)), np.eye(3) / 3)


def test_basis_likelihoods_match_trace_route():
    ens = build_ensemble("mixed-rank", 4, 9, RngStream(1, 0))
    u = haar_unitary(4, RngStream(1, 1)).matrix
    fast = basis_likelihoods(u, ens)
    slow = likelihood_matrix(basis_povm(u), ens)
    assert np.abs(fast - slow).max() < 1e-12


def test_total_probability_example():
    p = total_probability(basis_povm(np.eye(2)), two_state_ensemble())
    assert np.allclose(p, [0.75, 0.25])


def test_total_probability_haar_ensemble_is_flat():
    ens = build_ensemble("pure-haar", 2, 10_000, RngStream(2, 0))
    p = total_probability(basis_povm(np.eye(2)), ens)
    assert np.abs(p - 0.5).max() < 0.01


def test_update_example():
    ens = two_state_ensemble()
    post = bayes_update(Posterior.from_prior(ens), basis_povm(np.eye(2)), 0)
    assert np.allclose(post.weights, [2 / 3, 1 / 3])
    post = bayes_update(post, basis_povm(np.eye(2)), 1)
    assert np.allclose(post.weights, [0, 1])
    assert post.update_count == 2 and post.outcomes == (0, 1)


def test_update_zero_probability_raises():
    ens = Ensemble(np.stack([KET0, KET0]), np.array([0.5, 0.5]))
    with pytest.raises(ZeroProbabilityOutcome):
        bayes_update(Posterior.from_prior(ens), basis_povm(np.eye(2)), 1)


def test_update_many_small_likelihoods_stays_finite():
    ens = build_ensemble("ginibre", 2, 50, RngStream(3, 0))
    post = Posterior.from_prior(ens)
    lik = np.full(50, 1e-5)
    lik[7] = 2e-5
    for _ in range(200):
        post = post.updated(lik)
    w = post.weights
    assert np.isfinite(w).all() and abs(w.sum() - 1) < 1e-12
    assert w.argmax() == 7


def test_order_independence():
    ens = build_ensemble("ginibre", 3, 20, RngStream(4, 0))
    us = haar_unitaries(3, 3, RngStream(4, 1))
    obs = [(basis_povm(us[0]), 0), (basis_povm(us[1]), 2), (basis_povm(us[2]), 1)]
    finals = []
    for order in itertools.permutations(obs):
        post = Posterior.from_prior(ens)
        for povm, x in order:
            post = bayes_update(post, povm, x)
        finals.append(post.weights)
    for w in finals[1:]:
        assert np.abs(w - finals[0]).max() < 1e-12


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), d=st.integers(2, 4), L=st.integers(1, 12))
def test_posterior_martingale(seed, d, L):
    gen = np.random.default_rng(seed)
    ens = build_ensemble("ginibre", d, L, gen)
    prior = gen.dirichlet(np.ones(L))
    post = Posterior.from_prior(ens, prior)
    u = haar_unitaries(1, d, gen)[0]
    lik = basis_likelihoods(u, ens)
    p = prior @ lik
    expected = np.zeros(L)
    for x in range(d):
        if p[x] > 1e-300:
            expected += p[x] * post.updated(lik[:, x]).weights
    assert np.abs(expected - prior).max() < 1e-12


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), d=st.integers(2, 5), L=st.integers(1, 10))
def test_estimator_eigenvalues_within_convex_hull(seed, d, L):
    gen = np.random.default_rng(seed)
    ens = build_ensemble("mixed-rank", d, L, gen)
    post = Posterior.from_prior(ens, gen.dirichlet(np.ones(L)))
    est = bayes_estimator(post)
    lam = est.eigenvalues()
    lo = min(np.linalg.eigvalsh(s).min() for s in ens.states)
    hi = max(np.linalg.eigvalsh(s).max() for s in ens.states)
    assert lam.min() >= lo - 1e-12 and lam.max() <= hi + 1e-12
    assert abs(lam.sum() - 1) < 1e-12


def test_estimator_example():
    post = Posterior.from_prior(two_state_ensemble(), [2 / 3, 1 / 3])
    est = bayes_estimator(post).matrix
    assert np.abs(est - (2 * KET0 + KETP) / 3).max() < 1e-12


def test_risk_examples():
    povm = basis_povm(np.eye(2))
    perfect = {0: KET0, 1: KET1}
    assert risk(KET0, perfect.__getitem__, povm) == pytest.approx(0.0, abs=1e-12)
    # |+> measured in Z: either outcome, estimate |0> or |1>, fidelity 1/2
    assert risk(KETP, perfect.__getitem__, povm) == pytest.approx(0.5, abs=1e-12)
    mixed = lambda x: np.eye(2) / 2
    assert risk(KETP, mixed, basis_povm(HADAMARD)) == pytest.approx(0.5, abs=1e-12)


def test_average_risk():
    ens = two_state_ensemble()
    assert average_risk(ens, None, [0.0, 0.5]) == pytest.approx(0.25)
    with pytest.raises(DimensionMismatch):
        average_risk(ens, None, [0.0])


def test_general_povm_likelihood(gen):
    # trine POVM on a qubit
    vs = [np.array([np.cos(k * np.pi / 3), np.sin(k * np.pi / 3)]) for k in range(3)]
    povm = Povm(np.stack([2 / 3 * np.outer(v, v) for v in vs]).astype(complex))
    rho = random_density(gen, 2)
    p = likelihood(povm, rho)
    assert abs(p.sum() - 1) < 1e-12 and p.min() >= 0
