"""Stacks of decoupled planes with random boundaries, and the Mattis gauge.

Each plane is an N x N ground-state box. Without line disorder a plane is
uniformly plus or minus, chosen by its boundary exactly as in ``groundstate``.
With line disorder the bonds crossing the vertical line between columns
x = -1 and x = 0 carry random signs, and the candidates are the four
configurations uniform on each side of that line.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import softmax

from . import groundstate as gs
from .exact.enumeration import Window, enumerate_model
from .experiment.seeds import derive_seed
from .lattice import BondModel, CouplingSpec, build_volume, coordinate_spins, sample_boundary

CANDIDATES = ((1, 1), (1, -1), (-1, 1), (-1, -1))
CANDIDATE_NAMES = ("++", "+-", "-+", "--")


@dataclass(frozen=True)
class StackedModel:
    K: int
    N: int
    master_seed: int = 0
    Jp: float = -1.0
    line_disorder: bool = False
    line_strength: float | None = None
    line_dist: str = "pm"
    vertical_coupling: float = 0.0

    def __post_init__(self):
        if self.K < 1 or self.N < 2:
            raise ValueError("need K >= 1 planes of size N >= 2")
        if self.line_dist not in ("pm", "gaussian"):
            raise ValueError("line_dist must be 'pm' or 'gaussian'")

    @property
    def strength(self) -> float:
        return abs(self.Jp) if self.line_strength is None else float(self.line_strength)

    def plane_seed(self, realization: int, p: int) -> int:
        return derive_seed(self.master_seed, ["stack", realization, "plane", p])

    def line_couplings(self, realization: int, p: int) -> np.ndarray:
        """Couplings of the N bonds crossing the plane's line (negative = ferromagnetic)."""
        if not self.line_disorder:
            return np.zeros(self.N)
        rng = np.random.default_rng(derive_seed(self.master_seed, ["stack", realization, "line", p]))
        if self.line_dist == "pm":
            return self.strength * rng.choice([-1.0, 1.0], size=self.N)
        return self.strength * rng.standard_normal(self.N)

    def vertical_couplings(self, realization: int) -> np.ndarray:
        """Weak random couplings between consecutive planes (zero when decoupled)."""
        if self.vertical_coupling == 0.0 or self.K < 2:
            return np.zeros(max(self.K - 1, 0))
        rng = np.random.default_rng(derive_seed(self.master_seed, ["stack", realization, "vertical"]))
        return self.vertical_coupling * rng.choice([-1.0, 1.0], size=self.K - 1)


@lru_cache(maxsize=32)
def _left_mask(N: int) -> np.ndarray:
    vol = build_volume(2, N)
    inside = vol.boundary_bonds[:, 0]
    return vol.coords[inside][:, 1] < 0


def half_fields(seed: int, N: int, Jp: float):
    """Boundary energies (hL, hR) of a uniformly plus left/right half."""
    eta = coordinate_spins(seed, build_volume(2, N).boundary_sites).astype(np.int64)
    left = _left_mask(N)
    return Jp * float(eta[left].sum()), Jp * float(eta[~left].sum())


@dataclass(frozen=True)
class PlaneGroundStates:
    energies: np.ndarray
    argmin: tuple
    allowed: tuple

    @property
    def leading_gap(self) -> float:
        e = np.sort(self.energies[list(self.allowed)])
        return float(e[1] - e[0]) if len(e) > 1 else float("inf")


def candidate_energies(hL: float, hR: float, line) -> np.ndarray:
    lam = float(np.sum(line))
    return np.array([sL * hL + sR * hR + sL * sR * lam for sL, sR in CANDIDATES])


def plane_ground_states(hL: float, hR: float, line=None, tol: float = 1e-9) -> PlaneGroundStates:
    """Energies of the four half-uniform candidates and the argmin set in ++, +-, -+, -- order.

    Without line disorder (``line`` None) only ++ and -- are admissible: the
    bonds across the line are then as stiff as the bulk.
    """
    allowed = (0, 1, 2, 3) if line is not None else (0, 3)
    E = candidate_energies(hL, hR, line if line is not None else np.zeros(1))
    if line is None:
        E[[1, 2]] = np.inf
    emin = min(E[k] for k in allowed)
    scale = max(1.0, abs(emin))
    arg = tuple(k for k in allowed if E[k] - emin <= tol * scale)
    return PlaneGroundStates(E, arg, allowed)


def is_mixed(pg: PlaneGroundStates, delta: float = gs.DEFAULT_DELTA) -> bool:
    """Leading two candidates near-degenerate: their two-state selection probability lies in [delta, 1-delta]."""
    return pg.leading_gap <= 2.0 * gs.mixture_halfwidth(delta)


def plane_states(model: StackedModel, realization: int):
    """Ground-state data of every plane of one realization."""
    out = []
    for p in range(model.K):
        hL, hR = half_fields(model.plane_seed(realization, p), model.N, model.Jp)
        line = model.line_couplings(realization, p) if model.line_disorder else None
        out.append(plane_ground_states(hL, hR, line))
    return out


def _half_weights(N: int):
    left = N // 2
    return left / N, (N - left) / N


def candidate_overlap(a: int, b: int, N: int) -> float:
    wl, wr = _half_weights(N)
    (l1, r1), (l2, r2) = CANDIDATES[a], CANDIDATES[b]
    return wl * l1 * l2 + wr * r1 * r2


def stack_ground_state(model: StackedModel, realization: int, states=None):
    """Candidate index per plane minimising the total energy, vertical couplings included.

    With no vertical coupling this is each plane's first argmin; otherwise a
    dynamic programme over the chain of planes.
    """
    states = plane_states(model, realization) if states is None else states
    V = model.vertical_couplings(realization)
    if not np.any(V):
        return [pg.argmin[0] for pg in states]
    n2 = model.N**2
    Q = np.array([[candidate_overlap(a, b, model.N) for b in range(4)] for a in range(4)])
    cost = states[0].energies.copy()
    back = []
    for p in range(1, model.K):
        trans = cost[:, None] + V[p - 1] * n2 * Q
        back.append(np.argmin(trans, axis=0))
        cost = trans.min(axis=0) + states[p].energies
    k = int(np.argmin(cost))
    path = [k]
    for b in reversed(back):
        k = int(b[k])
        path.append(k)
    return path[::-1]


@dataclass(frozen=True)
class CensusRow:
    N: int
    K: int
    delta: float
    n_realizations: int
    mean_count: float
    ci_count: float
    mean_fraction: float
    ci_fraction: float


def realization_counts(model: StackedModel, realization: int, deltas) -> list:
    """Mixed-plane count of one realization for each delta (plane states computed once)."""
    states = plane_states(model, realization)
    return [int(sum(is_mixed(pg, d) for pg in states)) for d in deltas]


def census_counts(model: StackedModel, n_realizations: int, delta: float) -> np.ndarray:
    return np.array([realization_counts(model, r, [delta])[0] for r in range(n_realizations)])


def mixture_census(model: StackedModel, n_realizations: int, delta: float = gs.DEFAULT_DELTA) -> CensusRow:
    """Mean number and fraction of mixed planes, with 95% normal intervals."""
    counts = census_counts(model, n_realizations, delta)
    sd = counts.std(ddof=1) if n_realizations > 1 else 0.0
    ci = 1.96 * sd / np.sqrt(n_realizations)
    return CensusRow(model.N, model.K, delta, n_realizations, float(counts.mean()), float(ci),
                     float(counts.mean() / model.K), float(ci / model.K))


def plane_probabilities(pg: PlaneGroundStates, delta: float):
    """Selection probabilities over candidates: the argmin for a pure plane, Gibbs weights among the admissible ones when mixed."""
    p = np.zeros(4)
    if not is_mixed(pg, delta):
        p[pg.argmin[0]] = 1.0
        return p
    idx = list(pg.allowed)
    p[idx] = softmax(-pg.energies[idx])
    return p


@dataclass(frozen=True)
class OverlapResult:
    N: int
    K: int
    delta: float
    mean_q: float
    stderr_q: float
    hist: np.ndarray
    edges: np.ndarray


def realization_overlaps(model: StackedModel, realization: int, n_samples: int, delta: float = gs.DEFAULT_DELTA) -> np.ndarray:
    """n_samples replica-pair overlaps q = (1/K) sum_p q_p for one disorder draw."""
    Q = np.array([[candidate_overlap(a, b, model.N) for b in range(4)] for a in range(4)])
    rng = np.random.default_rng(derive_seed(model.master_seed, ["overlap", realization]))
    q = np.zeros(n_samples)
    for pg in plane_states(model, realization):
        p = plane_probabilities(pg, delta)
        if p.max() == 1.0:
            k = int(np.argmax(p))
            q += Q[k, k]
            continue
        a = rng.choice(4, size=n_samples, p=p)
        b = rng.choice(4, size=n_samples, p=p)
        q += Q[a, b]
    return q / model.K


def overlap_distribution(model: StackedModel, n_realizations: int, n_samples: int, delta: float = gs.DEFAULT_DELTA, bins: int = 41) -> OverlapResult:
    """Replica overlap from two independent plane selections per disorder draw."""
    edges = np.linspace(-1.0, 1.0, bins + 1)
    hist = np.zeros(bins)
    per_real = []
    for r in range(n_realizations):
        q = realization_overlaps(model, r, n_samples, delta)
        hist += np.histogram(np.clip(q, -1, 1), bins=edges)[0]
        per_real.append(q.mean())
    per_real = np.asarray(per_real)
    se = per_real.std(ddof=1) / np.sqrt(len(per_real)) if len(per_real) > 1 else 0.0
    return OverlapResult(model.N, model.K, delta, float(per_real.mean()), float(se), hist / hist.sum(), edges)


# ---------------------------------------------------------------- gauge


@dataclass(frozen=True, eq=False)
class GaugeField:
    """Signs on the box sites and on the boundary shell."""

    sites: np.ndarray
    boundary: np.ndarray

    @classmethod
    def random(cls, vol, rng: np.random.Generator) -> "GaugeField":
        return cls(rng.choice(np.array([-1, 1], dtype=np.int8), vol.n_sites),
                   rng.choice(np.array([-1, 1], dtype=np.int8), len(vol.boundary_sites)))

    @classmethod
    def constant(cls, vol, sign: int) -> "GaugeField":
        return cls(np.full(vol.n_sites, sign, dtype=np.int8), np.full(len(vol.boundary_sites), sign, dtype=np.int8))


def gauge_transform(model: BondModel, tau: GaugeField) -> BondModel:
    """Couplings J_ij t_i t_j, boundary couplings J'_ij t_i t_j and boundary values t_j eta_j.

    sigma_i -> t_i sigma_i maps the Gibbs measure of one model onto the other;
    applying the same t twice returns the original model.
    """
    t = tau.sites.astype(float)
    tb = tau.boundary.astype(float)
    inside = model.vol.boundary_bonds[:, 0]
    bond_J = model.bond_J * t[model.bonds[:, 0]] * t[model.bonds[:, 1]]
    boundary_J = model.boundary_J * t[inside] * tb
    eta = (model.eta * tau.boundary).astype(np.int8)
    return BondModel(model.vol, model.bonds, bond_J, boundary_J, eta)


def gauge_check(vol, c: CouplingSpec, eta, tau: GaugeField) -> float:
    """max_i |<s_i>_Mattis - t_i <s_i>_ferro| over all sites, both by enumeration."""
    ferro = BondModel.uniform(vol, c, eta)
    win = Window(tuple(range(vol.n_sites)))
    mf = enumerate_model(ferro, win).full.values
    mm = enumerate_model(gauge_transform(ferro, tau), win).full.values
    return float(np.max(np.abs(mm - tau.sites * mf)))


def plane_model(N: int, J: float, Jp: float, seed: int, line) -> BondModel:
    """Finite-coupling plane with its line bonds, for exhaustive checks of the ground-state candidates."""
    vol = build_volume(2, N)
    model = BondModel.uniform(vol, CouplingSpec(J, Jp), sample_boundary(vol, "symmetric_iid", seed))
    bond_J = model.bond_J.copy()
    cols = vol.coords[:, 1]
    b = model.bonds
    crossing = np.where((cols[b[:, 0]] == -1) & (cols[b[:, 1]] == 0))[0]
    rows = vol.coords[b[crossing, 0], 0]
    bond_J[crossing] = np.asarray(line)[np.argsort(np.argsort(rows))]
    return BondModel(vol, b, bond_J, model.boundary_J, model.eta)
