import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.special import logsumexp

from rbising.exact import (
    Window,
    all_labels,
    canonical_window,
    classify_ensemble,
    enumerate,
    enumerate_model,
    origin_window,
    split_enumeration_logz,
    tm_logz,
    tm_resolved,
    tm_window,
    transfer_matrix,
)
from rbising.exact import analysis as an
from rbising.exact.enumeration import all_spins, model_energies
from rbising.lattice import BondModel, CouplingSpec, SpinConfig, build_box, build_volume, flip, sample_boundary

shapes = st.tuples(st.integers(1, 4), st.integers(1, 4))
couplings = st.builds(CouplingSpec, st.floats(-3, 0.5), st.floats(-2, 2))


def _model(shape, c, seed):
    vol = build_box(shape)
    return BondModel.uniform(vol, c, sample_boundary(vol, "symmetric_iid", seed))


# ---------------------------------------------------------------- contours


def test_labels_simple_configurations():
    vol = build_volume(2, 5)
    plus = np.ones(25, dtype=np.int8)
    assert classify_ensemble(SpinConfig(plus), vol) == 1
    one = plus.copy()
    one[vol.center] = -1
    assert classify_ensemble(SpinConfig(one), vol) == 1
    assert classify_ensemble(SpinConfig(-plus), vol) == -1


@pytest.mark.parametrize("shape", [(3, 3), (3, 4), (4, 3), (4, 4)])
def test_labels_odd_under_flip(shape):
    lab = all_labels(shape)
    n = shape[0] * shape[1]
    idx = np.arange(1 << n)
    assert np.array_equal(lab[(~idx) & ((1 << n) - 1)], -lab)


def test_labels_follow_magnetization_when_large():
    lab = all_labels((4, 4))
    M = all_spins(16).sum(axis=1)
    big = np.abs(M) >= 8
    assert np.array_equal(lab[big], np.sign(M[big]))


def test_label_of_single_config_matches_table():
    rng = np.random.default_rng(1)
    vol = build_box((3, 4))
    lab = all_labels((3, 4))
    for _ in range(50):
        s = rng.choice([-1, 1], 12).astype(np.int8)
        idx = int(np.sum((s > 0) << np.arange(12)))
        assert classify_ensemble(SpinConfig(s), vol) == lab[idx]


# ---------------------------------------------------------------- enumeration


def test_enumeration_single_site():
    vol = build_volume(2, 1)
    res = enumerate(vol, CouplingSpec(-1.0, -1.0), sample_boundary(vol, "all_plus"))
    assert res.Z_full == pytest.approx(math.exp(4) + math.exp(-4), rel=1e-14)
    assert res.full.origin == pytest.approx(math.tanh(4), rel=1e-14)


@given(shapes, couplings, st.integers(0, 2**40))
def test_enumeration_matches_brute_force(shape, c, seed):
    model = _model(shape, c, seed)
    E = model_energies(model)
    S = all_spins(model.vol.n_sites)
    win = canonical_window(model.vol)
    res = enumerate_model(model, win)
    w = np.exp(-(E - E.min()))
    assert res.logZ_full == pytest.approx(logsumexp(-E), abs=1e-12)
    ref = (w @ S[:, win.sites[0]]) / w.sum()
    assert res.full.origin == pytest.approx(ref, abs=1e-12)


@given(shapes, couplings, st.integers(0, 2**40))
def test_enumeration_flip_mirror(shape, c, seed):
    model = _model(shape, c, seed)
    a = enumerate_model(model)
    b = enumerate_model(model.flipped())
    assert b.logZ_full == pytest.approx(a.logZ_full, abs=1e-12)
    assert b.logZ_plus == pytest.approx(a.logZ_minus, abs=1e-12)
    n_sites = len(a.full.window.sites)
    assert np.allclose(b.full.values[:n_sites], -a.full.values[:n_sites], atol=1e-12)
    assert np.allclose(b.full.values[n_sites:], a.full.values[n_sites:], atol=1e-12)


def test_enumeration_size_limit():
    vol = build_box((2, 13))
    with pytest.raises(ValueError):
        enumerate(vol, CouplingSpec(-1, -1), sample_boundary(vol, "all_plus"))


# ---------------------------------------------------------------- transfer matrix


@given(shapes, couplings, st.integers(0, 2**40))
def test_transfer_matches_enumeration(shape, c, seed):
    model = _model(shape, c, seed)
    assert tm_logz(model) == pytest.approx(enumerate_model(model).logZ_full, abs=1e-12)


def test_transfer_3x3_relative():
    rng = np.random.default_rng(0)
    for _ in range(50):
        c = CouplingSpec(rng.uniform(-3, 0), rng.uniform(-2, 2))
        model = _model((3, 3), c, int(rng.integers(1 << 40)))
        assert abs(math.expm1(tm_logz(model) - enumerate_model(model).logZ_full)) <= 1e-12


@pytest.mark.parametrize("shape", [(3, 9), (2, 13), (3, 12)])
def test_transfer_matches_split_enumeration(shape):
    model = _model(shape, CouplingSpec(-1.5, -1.0), 4)
    assert abs(math.expm1(tm_logz(model) - split_enumeration_logz(model))) <= 1e-12


def test_free_boundary_independent_of_eta():
    vol = build_box((3, 5))
    c = CouplingSpec(-1.1, 0.0)
    zs = {round(tm_logz(BondModel.uniform(vol, c, sample_boundary(vol, "symmetric_iid", s))), 12) for s in range(5)}
    assert len(zs) == 1


@given(shapes, couplings, st.integers(0, 2**40))
def test_resolved_partition(shape, c, seed):
    model = _model(shape, c, seed)
    r = tm_resolved(model)
    parts = [x for x in (r.logZ_pos, r.logZ_neg, r.logZ_zero) if np.isfinite(x)]
    assert logsumexp(parts) == pytest.approx(r.logZ_full, abs=1e-12)
    E = model_energies(model)
    M = all_spins(model.vol.n_sites).sum(axis=1)
    if (M > 0).any():
        assert r.logZ_pos == pytest.approx(logsumexp(-E[M > 0]), abs=1e-11)


@given(shapes, couplings, st.integers(0, 2**40))
def test_transfer_window_matches_enumeration(shape, c, seed):
    model = _model(shape, c, seed)
    win = canonical_window(model.vol)
    assert np.allclose(tm_window(model, win), enumerate_model(model, win).full.values, atol=1e-11)


def test_transfer_width_limit():
    vol = build_box((17, 17))
    with pytest.raises(ValueError):
        transfer_matrix(vol, CouplingSpec(-1, -1), sample_boundary(vol, "all_plus"))


# ---------------------------------------------------------------- analysis


def test_free_energy_pair_examples():
    vol = build_volume(2, 1)
    c = CouplingSpec(-1.0, -1.0)
    pair = an.free_energy_pair(enumerate(vol, c, sample_boundary(vol, "all_plus")))
    assert pair.delta == pytest.approx(8.0, abs=1e-12)
    tied = sample_boundary(vol, "explicit", values=[1, -1, 1, -1])
    assert an.free_energy_pair(enumerate(vol, c, tied)).delta == pytest.approx(0.0, abs=1e-12)


@given(shapes, couplings, st.integers(0, 2**40))
def test_delta_f_odd_under_flip(shape, c, seed):
    vol = build_box(shape)
    eta = sample_boundary(vol, "symmetric_iid", seed)
    a = an.free_energy_pair(enumerate(vol, c, eta))
    b = an.free_energy_pair(enumerate(vol, c, flip(eta)))
    assert b.delta == pytest.approx(-a.delta, abs=1e-10)
    assert sum(a.weights) == pytest.approx(1.0, abs=1e-15)


@given(st.integers(1, 3), couplings, st.integers(0, 2**40))
def test_decomposition_identity(N, c, seed):
    vol = build_volume(2, N)
    assert an.decompose_check(vol, c, sample_boundary(vol, "symmetric_iid", seed)) <= 1e-12


def test_plus_weight_grows_with_boundary_bias():
    vol = build_volume(2, 3)
    c = CouplingSpec(-1.0, -1.0)
    w = []
    for k in range(13):
        vals = np.array([1] * k + [-1] * (12 - k))
        w.append(an.free_energy_pair(enumerate(vol, c, sample_boundary(vol, "explicit", values=vals))).weights[0])
    assert all(b > a for a, b in zip(w, w[1:]))


def test_transfer_proxy_splits_zero_slab():
    model = _model((3, 3), CouplingSpec(-1.0, -1.0), 2)
    r = tm_resolved(model)
    pair = an.free_energy_pair(r)
    assert pair.logZ == pytest.approx(r.logZ_full, abs=1e-12)


def test_survey_zero_field_is_degenerate():
    rows, dF = an.fe_difference_survey([4, 6], CouplingSpec(-1.2, 0.0), 20)
    assert np.allclose(dF, 0.0, atol=1e-9)
    assert all(r.empirical_probability in (0.0, 1.0) for r in rows)


def test_survey_mean_is_symmetric():
    rows, dF = an.fe_difference_survey([4], CouplingSpec(-1.2, -1.0), 1000)
    assert abs(rows[0].mean_delta_f) <= 4 * rows[0].sem_delta_f
    assert rows[0].ci_low <= rows[0].empirical_probability <= rows[0].ci_high


def test_powerlaw_bound_and_monotone_helpers():
    rows = [an.SurveyRow(W, 100, 1.0, p, 0, 1, 0, 0, 0) for W, p in [(4, 0.2), (8, 0.15), (16, 0.1)]]
    const, ok = an.powerlaw_bound(rows)
    assert ok and const == pytest.approx(0.2 * 4**0.3)
    assert an.is_nonincreasing([3, 2, 2, 1]) and not an.is_nonincreasing([1, 2])


def test_probe_all_plus_field_matches_pure():
    vol = build_volume(2, 4)
    c = CouplingSpec(-2.0, -1.0)
    res = enumerate(vol, c, sample_boundary(vol, "all_plus"), origin_window(vol))
    pure = an.pure_origin(4, c)[0]
    assert abs(res.plus.origin - pure) <= 1e-3


def test_probe_flip_maps_plus_to_minus():
    vol = build_volume(2, 3)
    c = CouplingSpec(-2.0, -1.0)
    eta = sample_boundary(vol, "symmetric_iid", 5)
    a = enumerate(vol, c, eta, origin_window(vol))
    b = enumerate(vol, c, flip(eta), origin_window(vol))
    assert b.minus.origin == pytest.approx(-a.plus.origin, abs=1e-12)


def test_probe_rejects_weak_coupling():
    with pytest.raises(ValueError):
        an.restricted_convergence_probe([3], CouplingSpec(-1.0, -1.0), n_eta=1)


def test_probe_rows_use_same_fields_as_library():
    rows = an.restricted_convergence_probe([2, 3], CouplingSpec(-2.0, -1.0), n_eta=4, master_seed=3)
    assert [r.size for r in rows] == [2, 3]
    assert all(r.worst_plus >= r.mean_plus for r in rows)


def test_long_contour_weight_is_probability():
    vol = build_volume(2, 3)
    eta = sample_boundary(vol, "dobrushin")
    w = an.long_contour_weight(vol, CouplingSpec(-1.0, -1.0), eta)
    assert 0.0 < w < 1.0
    assert an.long_contour_weight(vol, CouplingSpec(-1.0, -1.0), sample_boundary(vol, "all_plus")) < w


def test_window_names():
    vol = build_volume(2, 3)
    win = canonical_window(vol)
    assert len(win.names()) == win.size == 3
    assert Window((0,)).size == 1
