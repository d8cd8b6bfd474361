import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rbising import groundstate as gs
from rbising import stacked as S
from rbising.exact.enumeration import all_spins, model_energies
from rbising.lattice import BondModel, CouplingSpec, build_volume, sample_boundary


def test_aligned_plane_prefers_plus_plus():
    vol = build_volume(2, 8)
    left = S._left_mask(8)
    hL, hR = -1.0 * left.sum(), -1.0 * (~left).sum()
    pg = S.plane_ground_states(hL, hR, -np.ones(8))
    assert pg.argmin == (0,)


@given(st.integers(0, 2**40), st.integers(2, 12))
def test_flip_maps_argmin_set(seed, N):
    hL, hR = S.half_fields(seed, N, -1.0)
    line = np.random.default_rng(seed).choice([-1.0, 1.0], N)
    a = S.plane_ground_states(hL, hR, line)
    b = S.plane_ground_states(-hL, -hR, line)
    assert tuple(sorted(3 - k for k in a.argmin)) == b.argmin


def _candidate_config(N, sL, sR):
    left = build_volume(2, N).coords[:, 1] < 0
    return np.where(left, sL, sR)


@pytest.mark.parametrize("seed", range(10))
def test_argmin_matches_independent_candidate_energies(seed):
    N, J = 8, -50.0
    rng = np.random.default_rng(seed)
    line = rng.choice([-1.0, 1.0], N)
    model = S.plane_model(N, J, -1.0, seed, line)
    E = np.array([model.energy(_candidate_config(N, sL, sR)) for sL, sR in S.CANDIDATES])
    hL, hR = S.half_fields(seed, N, -1.0)
    pg = S.plane_ground_states(hL, hR, line)
    # the candidates differ from the model energies by the same bulk constant
    assert np.allclose(E - E[0], pg.energies - pg.energies[0])
    assert set(pg.argmin) == set(np.flatnonzero(np.isclose(E, E.min())))


def test_candidates_are_exact_ground_states_at_n3():
    rng = np.random.default_rng(0)
    S9 = all_spins(9)
    for seed in range(50):
        line = rng.choice([-1.0, 1.0], 3)
        model = S.plane_model(3, -50.0, -1.0, seed, line)
        E = model_energies(model)
        best = set(np.flatnonzero(np.isclose(E, E.min())))
        cands = {int(np.sum((_candidate_config(3, a, b) > 0) << np.arange(9))) for a, b in S.CANDIDATES}
        assert best <= cands


def test_generic_gaps_have_no_ties():
    rng = np.random.default_rng(0)
    pgs = [S.plane_ground_states(*rng.normal(size=2), rng.normal(size=8)) for _ in range(500)]
    assert not any(S.is_mixed(pg, 0.5) for pg in pgs)


def test_plus_minus_gap_ignores_line():
    # the line term enters ++ and -- identically, so their gap is 2|hL + hR|
    pg = S.plane_ground_states(3.0, -3.0, np.array([0.7, -2.1, 0.4]))
    assert pg.energies[0] == pg.energies[3]


def test_single_plane_matches_groundstate():
    for N in (4, 8, 16):
        model = S.StackedModel(1, N, 3)
        for r in range(40):
            seed = model.plane_seed(r, 0)
            lab = gs.recurrence_scan(seed, 2, -1.0, N, sizes=[N])[0][1]
            assert S.realization_counts(model, r, [gs.DEFAULT_DELTA])[0] == (lab == gs.MIXED)


def test_planes_are_independent():
    model = S.StackedModel(2, 4, 1)
    X = np.array([[S.is_mixed(pg) for pg in S.plane_states(model, r)] for r in range(4000)], dtype=float)
    cov = np.cov(X.T)[0, 1]
    se = X[:, 0].std() * X[:, 1].std() / math.sqrt(len(X))
    assert abs(cov) <= 4 * se


def test_census_row_fields():
    row = S.mixture_census(S.StackedModel(16, 16, 0), 30)
    assert row.mean_fraction == pytest.approx(row.mean_count / 16)
    assert row.ci_count >= 0


def test_no_mixed_planes_overlap_is_one():
    model = S.StackedModel(4, 64, 0)
    pure = [r for r in range(30) if S.realization_counts(model, r, [0.25])[0] == 0]
    assert pure
    for r in pure:
        assert np.all(S.realization_overlaps(model, r, 50) == 1.0)


def test_all_tied_planes_overlap_is_centred():
    model = S.StackedModel(50, 8, 0, Jp=0.0)
    q = S.realization_overlaps(model, 0, 2000)
    assert abs(q.mean()) <= 4 / math.sqrt(50 * 2000)


def test_overlap_monotone_in_delta():
    model = S.StackedModel(32, 32, 0, Jp=-0.1)
    q = [S.overlap_distribution(model, 20, 50, delta=d).mean_q for d in (0.1, 0.25, 0.4)]
    assert q[0] < q[1] < q[2]


def test_overlap_histogram_normalised():
    res = S.overlap_distribution(S.StackedModel(8, 8, 0), 10, 20)
    assert res.hist.sum() == pytest.approx(1.0)
    assert len(res.edges) == len(res.hist) + 1


def test_vertical_coupling_dynamic_programme_is_optimal():
    model = S.StackedModel(4, 4, 2, line_disorder=True, vertical_coupling=0.3)
    for r in range(10):
        states = S.plane_states(model, r)
        V = model.vertical_couplings(r)
        Q = np.array([[S.candidate_overlap(a, b, 4) for b in range(4)] for a in range(4)])

        def total(path):
            e = sum(states[p].energies[k] for p, k in enumerate(path))
            return e + sum(V[p] * 16 * Q[path[p], path[p + 1]] for p in range(len(path) - 1))

        best = min(total(p) for p in itertools.product(range(4), repeat=4))
        assert total(S.stack_ground_state(model, r, states)) == pytest.approx(best)


def test_decoupled_stack_takes_each_plane_argmin():
    model = S.StackedModel(5, 8, 0)
    states = S.plane_states(model, 0)
    assert S.stack_ground_state(model, 0, states) == [pg.argmin[0] for pg in states]


# ---------------------------------------------------------------- gauge


@pytest.mark.parametrize("sign", [1, -1])
def test_constant_gauge_is_exact(sign):
    vol = build_volume(2, 3)
    eta = sample_boundary(vol, "symmetric_iid", 1)
    assert S.gauge_check(vol, CouplingSpec(-1.0, -1.0), eta, S.GaugeField.constant(vol, sign)) == 0.0


@given(st.integers(0, 2**40))
def test_random_gauge_3x3(seed):
    rng = np.random.default_rng(seed)
    vol = build_volume(2, 3)
    eta = sample_boundary(vol, "symmetric_iid", seed)
    assert S.gauge_check(vol, CouplingSpec(-1.3, -0.8), eta, S.GaugeField.random(vol, rng)) <= 1e-12


@given(st.integers(0, 2**40))
def test_gauge_is_an_involution(seed):
    rng = np.random.default_rng(seed)
    vol = build_volume(2, 4)
    model = BondModel.uniform(vol, CouplingSpec(-1.1, -0.6), sample_boundary(vol, "symmetric_iid", seed))
    tau = S.GaugeField.random(vol, rng)
    back = S.gauge_transform(S.gauge_transform(model, tau), tau)
    assert np.array_equal(back.bond_J, model.bond_J)
    assert np.array_equal(back.eta, model.eta)
    assert np.array_equal(back.boundary_J, model.boundary_J)


@given(st.integers(0, 2**40))
def test_gauge_preserves_energy(seed):
    rng = np.random.default_rng(seed)
    vol = build_volume(2, 4)
    model = BondModel.uniform(vol, CouplingSpec(-1.1, -0.6), sample_boundary(vol, "symmetric_iid", seed))
    tau = S.GaugeField.random(vol, rng)
    s = rng.choice([-1, 1], vol.n_sites)
    assert S.gauge_transform(model, tau).energy(tau.sites * s) == pytest.approx(model.energy(s))


def test_model_validation():
    with pytest.raises(ValueError):
        S.StackedModel(0, 8)
    with pytest.raises(ValueError):
        S.StackedModel(2, 8, line_dist="cauchy")
