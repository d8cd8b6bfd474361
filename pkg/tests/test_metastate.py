import copy

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rbising import metastate as ms
from rbising.lattice import CouplingSpec


def test_sequence_examples():
    assert ms.make_sequence("geometric", 2, base=4, k_max=7).sizes == (4, 16, 64, 256, 1024, 4096, 16384)
    assert ms.make_sequence("full", 2, N_max=10).sizes == tuple(range(1, 11))
    seq = ms.make_sequence("polynomial", 3, power=2, k_max=5)
    assert seq.sizes == (1, 4, 9, 16, 25) and seq.summable
    assert not ms.make_sequence("full", 2, N_max=10).summable


def test_sequence_rejects_non_summable():
    with pytest.raises(ValueError):
        ms.make_sequence("polynomial", 2, power=2, k_max=5)
    with pytest.raises(ValueError):
        ms.make_sequence("geometric", 2, base=1, k_max=5)
    assert not ms.make_sequence("polynomial", 2, power=2, k_max=5, require_sparse=False).summable


def test_geometric_tail_bound():
    seq = ms.make_sequence("geometric", 2, base=4, k_max=3)
    # remaining terms 4**-(k/2) for k > 3 sum to 1/8 * (1/2) / (1 - 1/2)
    assert seq.tail_bound == pytest.approx(0.125)


@given(st.lists(st.lists(st.floats(-1, 1), min_size=3, max_size=3), min_size=1, max_size=40), st.floats(0.01, 0.5))
def test_cluster_partition(points, radius):
    X = np.array(points)
    cents, counts, assign = ms.cluster(X, radius)
    assert sum(counts) == len(X)
    assert np.array_equal(np.bincount(assign, minlength=len(cents)), counts)
    for a in range(len(cents)):
        for b in range(a + 1, len(cents)):
            assert np.max(np.abs(cents[a] - cents[b])) > radius


def test_all_plus_boundary_single_plus_atom():
    seq = ms.make_sequence("geometric", 2, base=2, k_max=8)
    track = ms.track_limit_points(0, seq, ms.GroundStateProvider(bc="plus"))
    assert len(track.atoms) == 1
    assert set(track.classifications) == {ms.PLUS_LIKE}


def test_full_sequence_has_mixed_visits():
    track = ms.track_limit_points(1, ms.make_sequence("full", 2, N_max=400), ms.GroundStateProvider())
    assert len(track.mixed_sizes()) > 0
    assert track.cumulative_mixed()[-1] == len(track.mixed_sizes())


def _gs_meta(negate=False, n=2000, N=64):
    return ms.empirical_metastate("over-eta", ms.GroundStateProvider(negate=negate), size=N, n_samples=n, seed=2)


def test_ground_state_metastate_invariants():
    meta = _gs_meta()
    assert meta.total_weight == pytest.approx(1.0, abs=1e-12)
    classes = [ms.classify_descriptor(a.descriptor, meta.m_star) for a in meta.atoms]
    assert classes.count(ms.PLUS_LIKE) == 1 and classes.count(ms.MINUS_LIKE) == 1
    assert meta.to_json()["params_digest"] == meta.digest()


def test_metastate_flip_equivariance():
    a, b = _gs_meta(), _gs_meta(negate=True)
    assert len(a.atoms) == len(b.atoms)
    for x, y in zip(a.atoms, reversed(b.atoms)):
        assert np.allclose(x.descriptor[0], -y.descriptor[0])
        assert x.weight == y.weight


def test_metastate_is_deterministic():
    assert _gs_meta(n=300).to_json() == _gs_meta(n=300).to_json()


def test_free_boundary_transfer_single_symmetric_atom():
    prov = ms.ExactProvider(CouplingSpec(-1.5, 0.0), bc="free", solver="tm")
    meta = ms.empirical_metastate("over-eta", prov, size=10, n_samples=5, seed=0)
    assert len(meta.atoms) == 1
    assert abs(meta.atoms[0].descriptor[0]) <= 1e-12
    assert ms.classify_descriptor(meta.atoms[0].descriptor, meta.m_star) == ms.MIXED


def test_plus_boundary_single_atom_weight_one():
    prov = ms.ExactProvider(CouplingSpec(-1.5, -1.0), bc="plus")
    meta = ms.empirical_metastate("over-eta", prov, size=3, n_samples=5, seed=0)
    assert len(meta.atoms) == 1 and meta.atoms[0].weight == 1.0
    assert ms.classify_descriptor(meta.atoms[0].descriptor, meta.m_star) == ms.PLUS_LIKE


def test_calibrated_threshold_is_fraction_of_plus_state():
    prov = ms.ExactProvider(CouplingSpec(-1.5, -1.0))
    plus = ms.ExactProvider(CouplingSpec(-1.5, -1.0), bc="plus")
    assert ms.calibrate_m_star(prov, 3) == pytest.approx(0.9 * plus(3, 0)[0])


def test_over_volumes_matches_track():
    seq = ms.make_sequence("geometric", 2, base=4, k_max=5)
    meta = ms.empirical_metastate("over-volumes", ms.GroundStateProvider(), seed=7, sequence=seq)
    track = ms.track_limit_points(7, seq, ms.GroundStateProvider())
    assert sorted(a.n_visits for a in meta.atoms) == sorted(a.n_visits for a in track.atoms)


def test_compare_metastates():
    a = _gs_meta(n=500)
    same = ms.compare_metastates(a, a)
    assert same.max_weight_difference == 0.0 and same.unmatched_mass == 0.0
    b = copy.deepcopy(a)
    b.atoms[0].weight -= 0.01
    b.atoms[-1].weight += 0.01
    assert ms.compare_metastates(a, b).max_weight_difference == pytest.approx(0.01)
    free = ms.empirical_metastate("over-eta", ms.GroundStateProvider(bc="free"), size=64, n_samples=50, seed=0)
    assert ms.compare_metastates(a, free).unmatched_mass == pytest.approx(1.0, abs=0.1)
    prov = ms.ExactProvider(CouplingSpec(-1.5, -1.0), solver="tm")
    rand = ms.empirical_metastate("over-eta", prov, size=10, n_samples=100, seed=0)
    free_tm = ms.empirical_metastate("over-eta", ms.ExactProvider(CouplingSpec(-1.5, 0.0), bc="free", solver="tm"), size=10, n_samples=3, seed=0)
    assert ms.compare_metastates(rand, free_tm).unmatched_mass == pytest.approx(1.0, abs=0.1)


def test_empirical_metastate_argument_errors():
    with pytest.raises(ValueError):
        ms.empirical_metastate("over-eta", ms.GroundStateProvider(), size=8)
    with pytest.raises(ValueError):
        ms.empirical_metastate("elsewhere", ms.GroundStateProvider(), size=8, n_samples=2)
