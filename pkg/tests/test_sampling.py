import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from qbme.core import dagger
from qbme.designs import frame_potential
from qbme.errors import NotNormalized, RankOutOfRange
from qbme.sampling import (RngStream, build_ensemble, fixed_rank_state, ginibre_matrix,
                           ginibre_state, haar_pure_state, haar_unitaries, haar_unitary,
                           inverse_transform_sample, load_ensemble, mixed_rank_assignment,
                           save_ensemble)


def test_stream_is_reproducible():
    a = RngStream(5, 3).generator.random(4)
    b = RngStream(5, 3).generator.random(4)
    c = RngStream(5, 4).generator.random(4)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_ginibre_entry_moments():
    g = np.stack([ginibre_matrix(4, RngStream(1, i)) for i in range(500)])
    assert abs(g.mean()) < 0.02
    assert abs(np.mean(np.abs(g) ** 2) - 2.0) < 0.05


def test_haar_unitaries_are_unitary_and_deterministic():
    u = haar_unitaries(50, 5, RngStream(2, 0))
    dev = np.abs(dagger(u) @ u - np.eye(5)).max()
    assert dev < 1e-12
    assert np.array_equal(u, haar_unitaries(50, 5, RngStream(2, 0)))


@pytest.mark.parametrize("d", [2, 3, 5])
def test_haar_column_second_moment(d):
    u = haar_unitaries(4000, d, RngStream(3, d))
    m = np.mean(np.abs(u[:, 0, 0]) ** 2)
    assert abs(m - 1 / d) < 0.02


def test_haar_first_order_frame_potential():
    u = haar_unitaries(200, 2, RngStream(4, 0))
    assert abs(frame_potential(u, 1) - 1.0) < 0.15


def test_haar_diagonal_phase_is_uniform():
    u = haar_unitaries(2000, 3, RngStream(6, 0))
    phases = (np.angle(u[:, 0, 0]) + np.pi) / (2 * np.pi)
    assert stats.kstest(phases, "uniform").pvalue > 1e-3


def test_haar_pure_state_is_normalized():
    psi = haar_pure_state(6, RngStream(0, 0))
    assert abs(np.linalg.norm(psi.amplitudes) - 1) < 1e-12


def test_ginibre_state_mean_purity_qubit():
    # Hilbert-Schmidt measure: E Tr rho^2 = (d + K) / (d K + 1) with K = d
    p = [ginibre_state(2, RngStream(8, i)).purity() for i in range(4000)]
    assert abs(np.mean(p) - 0.8) < 0.01


def test_ginibre_state_full_rank():
    for i in range(50):
        assert ginibre_state(4, RngStream(9, i)).rank() == 4


@pytest.mark.parametrize("d, r", [(3, 1), (4, 2), (5, 5)])
def test_fixed_rank(d, r):
    rho = fixed_rank_state(d, r, RngStream(10, r))
    assert rho.rank() == r
    assert abs(np.trace(rho.matrix).real - 1) < 1e-12


def test_fixed_rank_out_of_range():
    with pytest.raises(RankOutOfRange):
        fixed_rank_state(3, 4, 0)
    with pytest.raises(RankOutOfRange):
        fixed_rank_state(3, 0, 0)


def test_inverse_transform_frequencies():
    p = np.array([0.1, 0.2, 0.3, 0.4])
    gen = RngStream(12, 0).generator
    counts = np.bincount([inverse_transform_sample(p, gen) for _ in range(20000)], minlength=4)
    tv = 0.5 * np.abs(counts / counts.sum() - p).sum()
    assert tv < 0.02


def test_inverse_transform_degenerate_and_bad_input():
    gen = RngStream(13, 0).generator
    assert all(inverse_transform_sample([0.0, 1.0, 0.0], gen) == 1 for _ in range(100))
    with pytest.raises(NotNormalized):
        inverse_transform_sample([0.5, 0.6], gen)
    with pytest.raises(NotNormalized):
        inverse_transform_sample([1.5, -0.5], gen)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), k=st.integers(2, 8))
def test_inverse_transform_tv_property(seed, k):
    gen = np.random.default_rng(seed)
    p = gen.dirichlet(np.ones(k))
    n = 5000
    counts = np.bincount([inverse_transform_sample(p, gen) for _ in range(n)], minlength=k)
    tv = 0.5 * np.abs(counts / n - p).sum()
    # generous multiple of the sqrt(k / n) fluctuation scale
    assert tv < 3 * np.sqrt(k / n)


@pytest.mark.parametrize("d, L, expected", [(3, 10, [4, 3, 3]), (4, 8, [2, 2, 2, 2])])
def test_mixed_rank_counts(d, L, expected):
    ranks = mixed_rank_assignment(d, L)
    assert list(np.bincount(ranks)[1:]) == expected
    ens = build_ensemble("mixed-rank", d, L, RngStream(14, 0))
    got = [np.linalg.matrix_rank(s, tol=1e-10) for s in ens.states]
    assert sorted(got) == sorted(ranks.tolist())


@pytest.mark.parametrize("kind", ["pure-haar", "ginibre", "mixed-rank"])
def test_ensemble_factors_reproduce_states(kind):
    ens = build_ensemble(kind, 3, 12, RngStream(15, 0))
    assert np.abs(ens.factors @ dagger(ens.factors) - ens.states).max() < 1e-12
    assert abs(ens.prior.sum() - 1) < 1e-12


def test_unknown_kind():
    with pytest.raises(ValueError):
        build_ensemble("thermal", 2, 3, 0)


def test_ensemble_json_round_trip(tmp_path):
    ens = build_ensemble("mixed-rank", 3, 7, RngStream(16, 0))
    path = tmp_path / "ens.json"
    save_ensemble(ens, path)
    back = load_ensemble(path)
    assert back.kind == "mixed-rank" and back.seed == 16
    assert np.abs(back.states - ens.states).max() < 1e-15
    assert np.abs(back.prior - ens.prior).max() < 1e-15


def test_ensemble_json_rejects_bad_shape(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{"kind": "custom", "d": 2, "L": 2, "states": [[[1, 0]]], "prior": [0.5, 0.5]}')
    with pytest.raises(ValueError):
        load_ensemble(path)


def test_haar_unitary_type():
    u = haar_unitary(3, 0)
    assert u.matrix.shape == (3, 3)
