"""Volume sequences, limit points along them and empirical metastates.

A state is represented by its descriptor: the canonical window expectations
(origin spin, then the origin's pair correlation along each axis). Limit points
and metastate atoms are clusters of descriptors in the max-norm.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import groundstate as gs
from .exact.enumeration import canonical_window, enumerate_model
from .exact.transfer import tm_window
from .experiment.seeds import derive_seed
from .lattice import BondModel, BoundaryCondition, CouplingSpec, build_volume, flip, sample_boundary
from .montecarlo import ChainConfig, default_ladder, run_chain

DEFAULT_RADIUS = 0.1
DEFAULT_M_STAR = 0.9
PLUS_LIKE, MINUS_LIKE, MIXED = "plus-like", "minus-like", "mixed"


# ---------------------------------------------------------------- sequences


@dataclass(frozen=True)
class VolumeSequence:
    kind: str
    params: tuple
    d: int
    sizes: tuple
    partial_sum: float
    tail_bound: float

    @property
    def summable(self) -> bool:
        return math.isfinite(self.tail_bound)


def _tail_bound(kind, params, d, sizes):
    a = (d - 1) / 2.0
    if kind == "geometric":
        r = params[0] ** -a
        return sizes[-1] ** -a * r / (1.0 - r) if r < 1 else math.inf
    if kind == "polynomial":
        s = params[0] * a
        K = len(sizes)
        # sum over k > K of k**-s <= integral from K to infinity
        return K ** (1.0 - s) / (s - 1.0) if s > 1 else math.inf
    return math.inf if a <= 1 else sizes[-1] ** (1.0 - a) / (a - 1.0)


def make_sequence(kind: str, d: int, *, N_max=None, base=None, power=None, k_max=None, require_sparse=None) -> VolumeSequence:
    """full(N_max) = 1..N_max, geometric(base, k_max) = base**k, polynomial(power, k_max) = k**power.

    Geometric and polynomial sequences must satisfy sum N_k**(-(d-1)/2) < inf
    for the declared d (checked through the tail bound); ``require_sparse``
    overrides that default.
    """
    if d not in (2, 3):
        raise ValueError("d must be 2 or 3")
    if kind == "full":
        if not N_max or N_max < 1:
            raise ValueError("full sequence needs N_max >= 1")
        sizes, params = tuple(range(1, N_max + 1)), (N_max,)
    elif kind == "geometric":
        if not base or base < 2 or not k_max or k_max < 1:
            raise ValueError("geometric sequence needs integer base >= 2 and k_max >= 1")
        sizes, params = tuple(int(base) ** k for k in range(1, k_max + 1)), (base, k_max)
    elif kind == "polynomial":
        if not power or power <= 0 or not k_max or k_max < 1:
            raise ValueError("polynomial sequence needs power > 0 and k_max >= 1")
        sizes = tuple(sorted({int(round(k**power)) for k in range(1, k_max + 1)}))
        params = (power, k_max)
    else:
        raise ValueError(f"unknown sequence kind {kind!r}")
    a = (d - 1) / 2.0
    seq = VolumeSequence(kind, params, d, sizes, float(sum(n**-a for n in sizes)), _tail_bound(kind, params, d, sizes))
    if require_sparse is None:
        require_sparse = kind != "full"
    if require_sparse and not seq.summable:
        raise ValueError(f"{kind}{params} is not summable in d={d}")
    return seq


# ---------------------------------------------------------------- providers


def _boundary(vol, bc: str, seed: int, negate: bool) -> BoundaryCondition:
    kind = {"random": "symmetric_iid", "plus": "all_plus", "minus": "all_minus", "free": "free", "periodic": "periodic"}[bc]
    eta = sample_boundary(vol, kind, seed if kind == "symmetric_iid" else None)
    return flip(eta) if negate and not eta.decoupled else eta


@dataclass(frozen=True)
class GroundStateProvider:
    """Exact -J = infinity states: descriptor (p+ - p-, 1, ..., 1)."""

    d: int = 2
    Jp: float = -1.0
    bc: str = "random"
    negate: bool = False
    name: str = "ground-state"

    def H_plus(self, N: int, seed: int) -> float:
        if self.bc == "random":
            s = gs.boundary_sum_direct(seed, self.d, N)
        elif self.bc in ("plus", "minus"):
            s = gs.n_boundary_sites(self.d, N) * (1 if self.bc == "plus" else -1)
        else:
            s = 0
        return self.Jp * (-s if self.negate else s)

    def __call__(self, N: int, seed: int) -> np.ndarray:
        p, m = gs.selection_prob(self.H_plus(N, seed))
        return np.array([p - m] + [1.0] * self.d)

    def scan(self, seed: int, sizes) -> np.ndarray:
        """Descriptors along a size list, using the prefix-sum scan when sizes are dense."""
        sizes = list(sizes)
        if self.bc == "random" and sizes == list(range(1, len(sizes) + 1)):
            H = self.Jp * gs.boundary_sums_scan(seed, self.d, len(sizes)) * (-1 if self.negate else 1)
        else:
            H = np.array([self.H_plus(N, seed) for N in sizes])
        p, m = gs.selection_prob(np.asarray(H, dtype=float))
        return np.column_stack([np.atleast_1d(p - m)] + [np.ones(len(sizes))] * self.d)


@dataclass(frozen=True)
class ExactProvider:
    """Finite-temperature descriptors from enumeration (small boxes) or the transfer matrix."""

    c: CouplingSpec
    bc: str = "random"
    solver: str = "enumeration"
    negate: bool = False

    @property
    def name(self):
        return self.solver

    def __call__(self, N: int, seed: int) -> np.ndarray:
        vol = build_volume(2, N)
        model = BondModel.uniform(vol, self.c, _boundary(vol, self.bc, seed, self.negate))
        win = canonical_window(vol)
        if self.solver == "enumeration":
            return enumerate_model(model, win).full.values
        if self.bc == "periodic":
            raise ValueError("transfer matrix handles open boxes only")
        return tm_window(model, win)


@dataclass(frozen=True)
class MCProvider:
    c: CouplingSpec
    bc: str = "random"
    d: int = 2
    sweeps: int = 20000
    ladder: tuple = field(default_factory=default_ladder)
    negate: bool = False
    name: str = "mc"

    def __call__(self, N: int, seed: int) -> np.ndarray:
        vol = build_volume(self.d, N)
        eta = _boundary(vol, self.bc, seed, self.negate)
        cfg = ChainConfig(vol, self.c, eta, self.sweeps, seed=derive_seed(seed, ["mc", N]), ladder=self.ladder)
        return run_chain(cfg, canonical_window(vol)).values


def calibrate_m_star(provider, N: int, factor: float = 0.9) -> float:
    """Finite-temperature threshold: a fraction of the all-plus-boundary origin magnetization."""
    c = provider.c
    if c.Jp == 0:
        # a plus boundary needs a coupling to act; J' = 0 is the free box
        c = CouplingSpec(c.J, -1.0)
    plus = dataclasses.replace(provider, c=c, bc="plus", negate=False)
    return factor * float(plus(N, 0)[0])


# ---------------------------------------------------------------- clustering


@dataclass
class Atom:
    descriptor: np.ndarray
    weight: float
    n_visits: int

    def as_dict(self):
        return {"descriptor": [float(x) for x in self.descriptor], "weight": float(self.weight), "n_visits": int(self.n_visits)}


def classify_descriptor(x, m_star: float) -> str:
    m = float(x[0])
    if m >= m_star:
        return PLUS_LIKE
    if m <= -m_star:
        return MINUS_LIKE
    return MIXED


def cluster(descriptors, radius: float = DEFAULT_RADIUS):
    """Online leader clustering in the max-norm, then merging of centroids closer than ``radius``.

    Returns (centroids, counts, assignment) with assignment[i] the final atom
    index of descriptor i. Deterministic for a given order.
    """
    X = np.asarray(descriptors, dtype=float)
    cents, counts, assign = [], [], np.empty(len(X), dtype=np.int64)
    for i, x in enumerate(X):
        if cents:
            dist = np.max(np.abs(np.asarray(cents) - x), axis=1)
            j = int(np.argmin(dist))
            if dist[j] <= radius:
                counts[j] += 1
                cents[j] = cents[j] + (x - cents[j]) / counts[j]
                assign[i] = j
                continue
        cents.append(x.copy())
        counts.append(1)
        assign[i] = len(cents) - 1
    cents = [np.asarray(c) for c in cents]
    alive = list(range(len(cents)))
    label = np.arange(len(cents))
    merged = True
    while merged:
        merged = False
        for a_pos, a in enumerate(alive):
            for b in alive[a_pos + 1:]:
                if np.max(np.abs(cents[a] - cents[b])) <= radius:
                    tot = counts[a] + counts[b]
                    cents[a] = (cents[a] * counts[a] + cents[b] * counts[b]) / tot
                    counts[a] = tot
                    label[label == b] = a
                    alive.remove(b)
                    merged = True
                    break
            if merged:
                break
    remap = {old: new for new, old in enumerate(alive)}
    return [cents[a] for a in alive], [counts[a] for a in alive], np.array([remap[label[j]] for j in assign], dtype=np.int64)


@dataclass
class LimitPointTrack:
    sizes: list
    descriptors: np.ndarray
    classifications: list
    atoms: list
    assignment: np.ndarray
    m_star: float

    def atom_classes(self):
        return [classify_descriptor(a.descriptor, self.m_star) for a in self.atoms]

    def mixed_sizes(self, k_min: int = 1):
        """Sizes (from the k_min-th on, 1-based) whose state is classified mixed."""
        return [N for k, (N, c) in enumerate(zip(self.sizes, self.classifications), 1) if k >= k_min and c == MIXED]

    def cumulative_mixed(self) -> np.ndarray:
        return np.cumsum([c == MIXED for c in self.classifications])


def track_limit_points(seed: int, sequence, provider, radius: float = DEFAULT_RADIUS, m_star: float | None = None) -> LimitPointTrack:
    """States along a volume sequence for one fixed boundary field."""
    sizes = list(sequence.sizes if isinstance(sequence, VolumeSequence) else sequence)
    if m_star is None:
        m_star = DEFAULT_M_STAR if isinstance(provider, GroundStateProvider) else calibrate_m_star(provider, sizes[0])
    if isinstance(provider, GroundStateProvider):
        X = provider.scan(seed, sizes)
    else:
        X = np.array([provider(N, seed) for N in sizes])
    cents, counts, assign = cluster(X, radius)
    n = len(X)
    atoms = [Atom(c, cnt / n, cnt) for c, cnt in zip(cents, counts)]
    return LimitPointTrack(sizes, X, [classify_descriptor(x, m_star) for x in X], atoms, assign, m_star)


# ---------------------------------------------------------------- metastates


@dataclass
class EmpiricalMetastate:
    atoms: list
    provenance: str
    params: dict
    m_star: float = DEFAULT_M_STAR
    unclustered_mass: float = 0.0

    def pure_atoms(self):
        return [a for a in self.atoms if classify_descriptor(a.descriptor, self.m_star) != MIXED]

    @property
    def total_weight(self) -> float:
        return float(sum(a.weight for a in self.atoms))

    def digest(self) -> str:
        return params_digest(self.params)

    def to_json(self) -> dict:
        return {
            "provenance": self.provenance,
            "params_digest": self.digest(),
            "atoms": [a.as_dict() for a in self.atoms],
            "unclustered_mass": float(self.unclustered_mass),
        }


def params_digest(params: dict) -> str:
    return hashlib.blake2b(json.dumps(params, sort_keys=True, default=str).encode(), digest_size=8).hexdigest()


def from_descriptors(X, provenance, params, radius, m_star):
    cents, counts, _ = cluster(X, radius)
    n = len(X)
    order = np.argsort([-c[0] for c in cents], kind="stable")
    atoms = [Atom(cents[i], counts[i] / n, counts[i]) for i in order]
    single = sum(a.weight for a in atoms if a.n_visits == 1)
    return EmpiricalMetastate(atoms, provenance, params, m_star, float(single) if n > 1 else 0.0)


def empirical_metastate(provenance: str, provider, *, size=None, n_samples=None, seed: int = 0, sequence=None,
                        radius: float = DEFAULT_RADIUS, m_star: float | None = None, mapper=map) -> EmpiricalMetastate:
    """Cluster descriptors over boundary fields at one size ("over-eta") or over a sequence at one field ("over-volumes")."""
    if provenance not in ("over-eta", "over-volumes"):
        raise ValueError(f"unknown provenance {provenance!r}")
    if provenance == "over-eta" and (size is None or not n_samples):
        raise ValueError("over-eta needs size and n_samples")
    if provenance == "over-volumes" and sequence is None:
        raise ValueError("over-volumes needs a sequence")
    if m_star is None:
        N0 = size if provenance == "over-eta" else (sequence.sizes[0] if isinstance(sequence, VolumeSequence) else sequence[0])
        m_star = DEFAULT_M_STAR if isinstance(provider, GroundStateProvider) else calibrate_m_star(provider, N0)
    params = {"provider": repr(provider), "radius": radius, "m_star": m_star, "seed": seed}
    if provenance == "over-eta":
        if size is None or not n_samples:
            raise ValueError("over-eta needs size and n_samples")
        seeds = [derive_seed(seed, ["eta", i]) for i in range(n_samples)]
        X = np.array(list(mapper(provider, [size] * n_samples, seeds)))
        params.update(size=size, n_samples=n_samples)
    elif provenance == "over-volumes":
        if sequence is None:
            raise ValueError("over-volumes needs a sequence")
        track = track_limit_points(seed, sequence, provider, radius, m_star)
        X = track.descriptors
        params.update(sizes=list(track.sizes))
    else:
        raise ValueError(f"unknown provenance {provenance!r}")
    return from_descriptors(X, provenance, params, radius, m_star)


@dataclass
class MetastateComparison:
    matches: list
    unmatched_a: list
    unmatched_b: list
    unmatched_mass: float

    @property
    def max_weight_difference(self) -> float:
        return max((abs(m["weight_difference"]) for m in self.matches), default=0.0)


def compare_metastates(a: EmpiricalMetastate, b: EmpiricalMetastate, tolerance: float = DEFAULT_RADIUS) -> MetastateComparison:
    """Greedy matching of atoms by descriptor distance (closest pairs first).

    ``unmatched_mass`` is 1 minus the weight shared by matched atoms: 0 for
    identical metastates, 1 for disjoint ones.
    """
    pairs = []
    for i, x in enumerate(a.atoms):
        for j, y in enumerate(b.atoms):
            if len(x.descriptor) != len(y.descriptor):
                raise ValueError("metastates use different descriptor windows")
            dist = float(np.max(np.abs(x.descriptor - y.descriptor)))
            if dist <= tolerance:
                pairs.append((dist, i, j))
    pairs.sort()
    used_a, used_b, matches = set(), set(), []
    for dist, i, j in pairs:
        if i in used_a or j in used_b:
            continue
        used_a.add(i)
        used_b.add(j)
        matches.append({"a": i, "b": j, "distance": dist, "weight_difference": a.atoms[i].weight - b.atoms[j].weight})
    ua = [i for i in range(len(a.atoms)) if i not in used_a]
    ub = [j for j in range(len(b.atoms)) if j not in used_b]
    # weight that cannot be paired across matched atoms (total variation distance)
    mass = 1.0 - sum(min(a.atoms[m["a"]].weight, b.atoms[m["b"]].weight) for m in matches)
    return MetastateComparison(matches, ua, ub, float(mass))
