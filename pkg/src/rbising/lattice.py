"""Boxes of Z^d, spin configurations, boundary shells and the nearest-neighbour Hamiltonian.

Sites carry absolute integer coordinates. A cubic box of linear size N spans
``[lo, lo + N - 1]`` along every axis with ``lo = -(N // 2)``, so boxes of
increasing N are concentric and nested around the origin. Site indices are
row-major over the coordinates (axis 0 most significant).

Couplings are dimensionless with the inverse temperature absorbed: the Gibbs
weight of a configuration is ``exp(-H)`` and ``J < 0`` is ferromagnetic.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property, lru_cache

import numpy as np
from numba import njit

BOUNDARY_KINDS = ("symmetric_iid", "all_plus", "all_minus", "dobrushin", "explicit", "free", "periodic")

_COORD_OFFSET = 1 << 20
_COORD_BITS = 21
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)


@dataclass(frozen=True, eq=False)
class LatticeVolume:
    """A box of Z^d with its bulk bonds and outer boundary shell.

    ``N`` is the linear size for cubic boxes and ``None`` for the rectangular
    boxes used by the transfer-matrix oracle.
    """

    d: int
    shape: tuple
    lo: tuple

    @property
    def N(self):
        return self.shape[0] if len(set(self.shape)) == 1 else None

    @property
    def n_sites(self) -> int:
        return int(np.prod(self.shape))

    @cached_property
    def coords(self) -> np.ndarray:
        """Absolute coordinates of every site, shape (n_sites, d)."""
        grids = np.meshgrid(*[np.arange(n) for n in self.shape], indexing="ij")
        rel = np.stack([g.ravel() for g in grids], axis=1)
        return rel + np.asarray(self.lo)

    @cached_property
    def bulk_bonds(self) -> np.ndarray:
        """Nearest-neighbour pairs inside the box, shape (n_bonds, 2), i < j."""
        idx = np.arange(self.n_sites).reshape(self.shape)
        pairs = []
        for a in range(self.d):
            lead = [slice(None)] * self.d
            nxt = [slice(None)] * self.d
            lead[a] = slice(0, self.shape[a] - 1)
            nxt[a] = slice(1, None)
            pairs.append(np.stack([idx[tuple(lead)].ravel(), idx[tuple(nxt)].ravel()], axis=1))
        return np.concatenate(pairs).astype(np.int64)

    @cached_property
    def wrap_bonds(self) -> np.ndarray:
        """Bonds closing the box into a torus (used by the periodic kind)."""
        idx = np.arange(self.n_sites).reshape(self.shape)
        pairs = []
        for a in range(self.d):
            last = [slice(None)] * self.d
            first = [slice(None)] * self.d
            last[a] = self.shape[a] - 1
            first[a] = 0
            pairs.append(np.stack([idx[tuple(first)].ravel(), idx[tuple(last)].ravel()], axis=1))
        return np.concatenate(pairs).astype(np.int64)

    @cached_property
    def _shell(self):
        # built face by face so large boxes never materialise all coordinates
        inside, outside = [], []
        for a in range(self.d):
            for side in (0, 1):
                axes = [np.arange(n) for n in self.shape]
                axes[a] = np.array([0 if side == 0 else self.shape[a] - 1])
                rel = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, self.d)
                out = rel + np.asarray(self.lo)
                out[:, a] += -1 if side == 0 else 1
                inside.append(np.ravel_multi_index(tuple(rel.T), self.shape))
                outside.append(out)
        return np.concatenate(inside).astype(np.int64), np.concatenate(outside)

    @property
    def boundary_sites(self) -> np.ndarray:
        """Coordinates of the outer boundary shell, shape (n_boundary, d).

        Ordered by axis, then low face before high face, then row-major
        within the face.
        """
        return self._shell[1]

    @property
    def boundary_bonds(self) -> np.ndarray:
        """Pairs (inside site index, boundary site index), one per boundary site."""
        inside = self._shell[0]
        return np.stack([inside, np.arange(len(inside))], axis=1)

    @property
    def center(self) -> int:
        """Index of the site at the origin (the site nearest it for even sizes)."""
        rel = tuple(-x for x in self.lo)
        return int(np.ravel_multi_index(rel, self.shape))

    def site_index(self, coord) -> int:
        rel = tuple(int(c) - l for c, l in zip(coord, self.lo))
        return int(np.ravel_multi_index(rel, self.shape))

    def neighbor(self, site: int, axis: int) -> int:
        """A nearest neighbour of ``site`` along ``axis``: forward if inside, else backward."""
        rel = list(np.unravel_index(site, self.shape))
        rel[axis] += 1 if rel[axis] + 1 < self.shape[axis] else -1
        return int(np.ravel_multi_index(tuple(rel), self.shape))

    def __repr__(self):
        return f"LatticeVolume(d={self.d}, shape={self.shape})"


@dataclass(frozen=True)
class CouplingSpec:
    J: float
    Jp: float


@dataclass(frozen=True, eq=False)
class SpinConfig:
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.int8)
        if v.ndim != 1 or not np.all(np.abs(v) == 1):
            raise ValueError("spin values must be a flat array of +-1")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    def __eq__(self, other):
        return isinstance(other, SpinConfig) and np.array_equal(self.values, other.values)


@dataclass(frozen=True, eq=False)
class BoundaryCondition:
    values: np.ndarray
    kind: str = "explicit"
    seed: int | None = None

    def __post_init__(self):
        if self.kind not in BOUNDARY_KINDS:
            raise ValueError(f"unknown boundary kind {self.kind!r}")
        v = np.asarray(self.values, dtype=np.int8)
        if self.kind not in ("free", "periodic") and not np.all(np.abs(v) == 1):
            raise ValueError("boundary values must be +-1")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @property
    def decoupled(self) -> bool:
        return self.kind in ("free", "periodic")

    def __eq__(self, other):
        return (
            isinstance(other, BoundaryCondition)
            and self.kind == other.kind
            and np.array_equal(self.values, other.values)
        )


@lru_cache(maxsize=64)
def build_volume(d: int, N: int) -> LatticeVolume:
    if d not in (2, 3):
        raise ValueError(f"dimension must be 2 or 3, got {d}")
    if N < 1:
        raise ValueError(f"linear size must be >= 1, got {N}")
    return LatticeVolume(d=d, shape=(N,) * d, lo=(-(N // 2),) * d)


def build_box(shape) -> LatticeVolume:
    """Rectangular 2D box, centred like the cubic volumes (rows, columns)."""
    shape = tuple(int(n) for n in shape)
    if len(shape) != 2 or min(shape) < 1:
        raise ValueError(f"box shape must be two positive sizes, got {shape}")
    return LatticeVolume(d=2, shape=shape, lo=tuple(-(n // 2) for n in shape))


@njit(cache=True)
def _mix64(x):
    x = x ^ (x >> np.uint64(30))
    x = x * _M1
    x = x ^ (x >> np.uint64(27))
    x = x * _M2
    return x ^ (x >> np.uint64(31))


@njit(cache=True)
def _hash_signs(coords, seed):
    n, d = coords.shape
    key = _mix64(seed + _GOLDEN)
    out = np.empty(n, np.int8)
    for i in range(n):
        code = np.uint64(0)
        for a in range(d):
            code |= np.uint64(coords[i, a] + _COORD_OFFSET) << np.uint64(_COORD_BITS * a)
        h = _mix64(_mix64(code ^ key) + _GOLDEN)
        out[i] = 1 if (h >> np.uint64(63)) else -1
    return out


@njit(cache=True)
def _hash_grid(lo, shape, seed):
    d = len(shape)
    n = 1
    for a in range(d):
        n *= shape[a]
    key = _mix64(seed + _GOLDEN)
    out = np.empty(n, np.int8)
    for i in range(n):
        rest = i
        code = np.uint64(0)
        for a in range(d - 1, -1, -1):
            x = lo[a] + rest % shape[a]
            rest //= shape[a]
            code |= np.uint64(x + _COORD_OFFSET) << np.uint64(_COORD_BITS * a)
        h = _mix64(_mix64(code ^ key) + _GOLDEN)
        out[i] = 1 if (h >> np.uint64(63)) else -1
    return out


def grid_spins(seed: int, lo, shape) -> np.ndarray:
    """The seed's field on the box with corner ``lo`` and extent ``shape`` (row-major array)."""
    lo = np.asarray(lo, dtype=np.int64)
    shape = np.asarray(shape, dtype=np.int64)
    if np.any(np.abs(lo) >= _COORD_OFFSET) or np.any(np.abs(lo + shape - 1) >= _COORD_OFFSET):
        raise ValueError("coordinates out of hashable range")
    out = _hash_grid(lo, shape, np.uint64(int(seed) & 0xFFFFFFFFFFFFFFFF))
    return out.reshape(tuple(int(x) for x in shape))


def coordinate_spins(seed: int, coords) -> np.ndarray:
    """Fair +-1 value attached to each lattice coordinate by a keyed hash.

    One seed fixes one infinite field on Z^d: any box sees the same value at
    the same site, whatever else is evaluated.
    """
    coords = np.asarray(coords, dtype=np.int64)
    if np.any(np.abs(coords) >= _COORD_OFFSET):
        raise ValueError("coordinates out of hashable range")
    flat = np.ascontiguousarray(coords.reshape(-1, coords.shape[-1]))
    return _hash_signs(flat, np.uint64(int(seed) & 0xFFFFFFFFFFFFFFFF)).reshape(coords.shape[:-1])


def sample_boundary(vol: LatticeVolume, kind: str = "symmetric_iid", seed: int | None = None, values=None):
    nb = len(vol.boundary_sites)
    if kind == "symmetric_iid":
        if seed is None:
            raise ValueError("symmetric_iid boundary needs a seed")
        vals = coordinate_spins(seed, vol.boundary_sites)
    elif kind == "all_plus":
        vals = np.ones(nb, dtype=np.int8)
    elif kind == "all_minus":
        vals = -np.ones(nb, dtype=np.int8)
    elif kind == "dobrushin":
        # minus on the low side of the last axis, plus on the high side
        vals = np.where(vol.boundary_sites[:, -1] < 0, -1, 1).astype(np.int8)
    elif kind == "explicit":
        vals = np.asarray(values, dtype=np.int8)
        if vals.shape != (nb,):
            raise ValueError(f"explicit boundary needs {nb} values, got shape {vals.shape}")
    elif kind in ("free", "periodic"):
        vals = np.zeros(nb, dtype=np.int8)
    else:
        raise ValueError(f"unknown boundary kind {kind!r}")
    return BoundaryCondition(vals, kind=kind, seed=seed)


def flip(x):
    if isinstance(x, SpinConfig):
        return SpinConfig(-x.values)
    if isinstance(x, BoundaryCondition):
        return BoundaryCondition(-x.values, kind=x.kind, seed=x.seed)
    raise TypeError(f"cannot flip {type(x).__name__}")


def boundary_field(vol: LatticeVolume, Jp: float, eta: BoundaryCondition) -> np.ndarray:
    """Per-site field J' * (sum of neighbouring boundary values)."""
    f = np.zeros(vol.n_sites)
    if eta.decoupled:
        return f
    _check_eta(vol, eta)
    bb = vol.boundary_bonds
    np.add.at(f, bb[:, 0], Jp * eta.values[bb[:, 1]].astype(float))
    return f


def _check_eta(vol, eta):
    if eta.values.shape != (len(vol.boundary_sites),):
        raise ValueError(f"boundary has {eta.values.shape[0]} values, volume needs {len(vol.boundary_sites)}")


def hamiltonian(vol: LatticeVolume, c: CouplingSpec, sigma: SpinConfig, eta: BoundaryCondition) -> float:
    s = sigma.values if isinstance(sigma, SpinConfig) else np.asarray(sigma)
    if s.shape != (vol.n_sites,):
        raise ValueError(f"configuration has {s.size} sites, volume has {vol.n_sites}")
    s = s.astype(np.int64)
    bonds = vol.bulk_bonds
    if eta.kind == "periodic":
        bonds = np.concatenate([bonds, vol.wrap_bonds])
    e = c.J * float(np.sum(s[bonds[:, 0]] * s[bonds[:, 1]]))
    if not eta.decoupled:
        _check_eta(vol, eta)
        bb = vol.boundary_bonds
        e += c.Jp * float(np.sum(s[bb[:, 0]] * eta.values[bb[:, 1]]))
    return e


@dataclass(frozen=True, eq=False)
class BondModel:
    """Nearest-neighbour model with one coupling per bond.

    Covers the uniform ferromagnet with any boundary condition, Mattis models
    obtained by gauge transformation, and planes carrying random line bonds.
    """

    vol: LatticeVolume
    bonds: np.ndarray
    bond_J: np.ndarray
    boundary_J: np.ndarray = field(default=None)
    eta: np.ndarray = field(default=None)

    def __post_init__(self):
        nb = len(self.vol.boundary_sites)
        if self.boundary_J is None:
            object.__setattr__(self, "boundary_J", np.zeros(nb))
        if self.eta is None:
            object.__setattr__(self, "eta", np.zeros(nb, dtype=np.int8))

    @classmethod
    def uniform(cls, vol: LatticeVolume, c: CouplingSpec, eta: BoundaryCondition) -> "BondModel":
        bonds = vol.bulk_bonds
        nb = len(vol.boundary_sites)
        if eta.kind == "periodic":
            bonds = np.concatenate([bonds, vol.wrap_bonds])
        if eta.decoupled:
            return cls(vol, bonds, np.full(len(bonds), float(c.J)), np.zeros(nb), np.zeros(nb, dtype=np.int8))
        _check_eta(vol, eta)
        return cls(vol, bonds, np.full(len(bonds), float(c.J)), np.full(nb, float(c.Jp)), eta.values.copy())

    @property
    def field(self) -> np.ndarray:
        f = np.zeros(self.vol.n_sites)
        bb = self.vol.boundary_bonds
        np.add.at(f, bb[:, 0], self.boundary_J * self.eta[bb[:, 1]])
        return f

    @property
    def uniform_J(self):
        """The common bulk coupling if all bonds share it, else None."""
        if len(self.bond_J) and np.all(self.bond_J == self.bond_J[0]):
            return float(self.bond_J[0])
        return None

    def energy(self, sigma) -> float:
        s = np.asarray(sigma.values if isinstance(sigma, SpinConfig) else sigma, dtype=np.int64)
        e = float(np.sum(self.bond_J * s[self.bonds[:, 0]] * s[self.bonds[:, 1]]))
        return e + float(np.dot(self.field, s))

    def neighbor_table(self):
        """Padded per-site neighbour indices and couplings (index -1 marks padding)."""
        n = self.vol.n_sites
        deg = np.zeros(n, dtype=np.int64)
        for i, j in self.bonds:
            deg[i] += 1
            deg[j] += 1
        width = max(int(deg.max()) if n else 0, 1)
        nbr = -np.ones((n, width), dtype=np.int64)
        cpl = np.zeros((n, width))
        fill = np.zeros(n, dtype=np.int64)
        for (i, j), Jb in zip(self.bonds, self.bond_J):
            nbr[i, fill[i]], cpl[i, fill[i]] = j, Jb
            fill[i] += 1
            nbr[j, fill[j]], cpl[j, fill[j]] = i, Jb
            fill[j] += 1
        return nbr, cpl

    def flipped(self) -> "BondModel":
        return BondModel(self.vol, self.bonds, self.bond_J, self.boundary_J, (-self.eta).astype(np.int8))


def to_bits(values) -> str:
    """Little-endian bit string (as hex) of +-1 values, +1 -> 1, in site order."""
    v = np.asarray(values.values if hasattr(values, "values") else values)
    return np.packbits(v > 0, bitorder="little").tobytes().hex()


def from_bits(hexstr: str, n: int) -> np.ndarray:
    bits = np.unpackbits(np.frombuffer(bytes.fromhex(hexstr), dtype=np.uint8), bitorder="little")[:n]
    return (bits.astype(np.int8) * 2 - 1).astype(np.int8)
