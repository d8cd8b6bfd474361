"""Brute-force sums over every configuration of a small box.

Configurations are visited in Gray-code order so each step flips one spin and
the energy updates in O(degree); it is recomputed from scratch every 256 steps
to stop rounding drift. Partition sums and observable sums use compensated
(Neumaier) accumulation against a fixed upper bound on -H.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit
from scipy.special import logsumexp

from ..lattice import BondModel, CouplingSpec, LatticeVolume
from .contours import all_labels

MAX_SITES = 25
_REFRESH = 255


@dataclass(frozen=True)
class Window:
    """Local observables: single spins at ``sites`` and products over ``pairs``."""

    sites: tuple
    pairs: tuple = ()

    @property
    def size(self) -> int:
        return len(self.sites) + len(self.pairs)

    def names(self):
        return [f"s{i}" for i in self.sites] + [f"s{i}s{j}" for i, j in self.pairs]


def canonical_window(vol: LatticeVolume) -> Window:
    """The origin spin and its pair correlation with one neighbour per axis."""
    o = vol.center
    pairs = tuple((o, vol.neighbor(o, a)) for a in range(vol.d) if vol.shape[a] > 1)
    return Window((o,), pairs)


def origin_window(vol: LatticeVolume) -> Window:
    return Window((vol.center,))


@dataclass(frozen=True)
class WindowMarginal:
    window: Window
    values: np.ndarray
    stderr: np.ndarray | None = None

    @property
    def origin(self) -> float:
        return float(self.values[0])

    def as_dict(self):
        out = {"names": self.window.names(), "values": [float(v) for v in self.values]}
        if self.stderr is not None:
            out["stderr"] = [float(v) for v in self.stderr]
        return out


@dataclass(frozen=True)
class EnumerationResult:
    logZ_full: float
    logZ_plus: float
    logZ_minus: float
    full: WindowMarginal
    plus: WindowMarginal
    minus: WindowMarginal

    @property
    def Z_full(self) -> float:
        return float(np.exp(self.logZ_full))

    @property
    def Z_plus(self) -> float:
        return float(np.exp(self.logZ_plus))

    @property
    def Z_minus(self) -> float:
        return float(np.exp(self.logZ_minus))


@njit(cache=True, inline="always")
def _acc(sums, comps, k, x):
    s = sums[k]
    t = s + x
    if abs(s) >= abs(x):
        comps[k] += (s - t) + x
    else:
        comps[k] += (x - t) + s
    sums[k] = t


@njit(cache=True)
def _energy(spins, nbr, cpl, field):
    e = 0.0
    n = spins.shape[0]
    for i in range(n):
        local = 0.0
        for q in range(nbr.shape[1]):
            j = nbr[i, q]
            if j >= 0:
                local += cpl[i, q] * spins[j]
        e += spins[i] * (0.5 * local + field[i])
    return e


@njit(cache=True)
def _gray_sums(n, nbr, cpl, field, labels, obs_sites, obs_pairs, shift, sums, comps):
    spins = -np.ones(n, np.int64)
    n_site = obs_sites.shape[0]
    n_pair = obs_pairs.shape[0]
    E = _energy(spins, nbr, cpl, field)
    g = 0
    for t in range(1 << n):
        if t > 0:
            k = 0
            while not (t >> k) & 1:
                k += 1
            local = field[k]
            for q in range(nbr.shape[1]):
                j = nbr[k, q]
                if j >= 0:
                    local += cpl[k, q] * spins[j]
            E -= 2.0 * spins[k] * local
            spins[k] = -spins[k]
            g ^= 1 << k
            if (t & _REFRESH) == 0:
                E = _energy(spins, nbr, cpl, field)
        w = np.exp(-E - shift)
        lab = labels[g]
        side = 1 if lab > 0 else 2
        _acc(sums, comps, 0, w)
        _acc(sums, comps, side, w)
        for o in range(n_site):
            x = w * spins[obs_sites[o]]
            _acc(sums, comps, 3 + 3 * o, x)
            _acc(sums, comps, 3 + 3 * o + side, x)
        for o in range(n_pair):
            x = w * spins[obs_pairs[o, 0]] * spins[obs_pairs[o, 1]]
            b = 3 + 3 * (n_site + o)
            _acc(sums, comps, b, x)
            _acc(sums, comps, b + side, x)


def _run_gray(model: BondModel, window: Window, labels, shift):
    n = model.vol.n_sites
    nbr, cpl = model.neighbor_table()
    obs_sites = np.asarray(window.sites, dtype=np.int64)
    obs_pairs = np.asarray(window.pairs, dtype=np.int64).reshape(-1, 2)
    k = 3 * (1 + window.size)
    sums, comps = np.zeros(k), np.zeros(k)
    _gray_sums(n, nbr, cpl, model.field, labels, obs_sites, obs_pairs, shift, sums, comps)
    return sums + comps


def enumerate_model(model: BondModel, window: Window | None = None, labels=None) -> EnumerationResult:
    vol = model.vol
    if vol.n_sites > MAX_SITES:
        raise ValueError(f"enumeration limited to {MAX_SITES} sites, volume has {vol.n_sites}")
    window = canonical_window(vol) if window is None else window
    labels = all_labels(vol.shape) if labels is None else labels
    shift = float(np.sum(np.abs(model.bond_J)) + np.sum(np.abs(model.field)))
    tot = _run_gray(model, window, labels, shift)
    if not tot[0] > 1e-250:
        # bound too loose for this instance; re-centre on the first estimate
        shift += np.log(tot[0]) if tot[0] > 0 else -600.0
        tot = _run_gray(model, window, labels, shift)
    Z = tot[:3]
    S = tot[3:].reshape(-1, 3)
    with np.errstate(divide="ignore", invalid="ignore"):
        logs = np.log(Z) + shift
        marg = [WindowMarginal(window, S[:, e] / Z[e]) for e in range(3)]
    return EnumerationResult(float(logs[0]), float(logs[1]), float(logs[2]), *marg)


def enumerate(vol: LatticeVolume, c: CouplingSpec, eta, window: Window | None = None) -> EnumerationResult:
    return enumerate_model(BondModel.uniform(vol, c, eta), window)


def all_spins(n: int) -> np.ndarray:
    """Every configuration of n sites as rows of +-1, row index = bit pattern."""
    idx = np.arange(1 << n, dtype=np.int64)
    return (((idx[:, None] >> np.arange(n)) & 1) * 2 - 1).astype(np.int8)


def model_energies(model: BondModel) -> np.ndarray:
    """Energy of every configuration (bit pattern order); for up to ~22 sites."""
    n = model.vol.n_sites
    if n > 22:
        raise ValueError("too many sites for a full energy table")
    s = all_spins(n).astype(np.float64)
    b = model.bonds
    return (s[:, b[:, 0]] * s[:, b[:, 1]]) @ model.bond_J + s @ model.field


def _half_logz(C, bonds, bond_J, field, rows, bin_row):
    """Log partition sums of the sub-box ``rows`` binned by the state of row ``bin_row``."""
    sites = np.array([r * C + c for r in rows for c in range(C)])
    local = -np.ones(len(field), dtype=np.int64)
    local[sites] = np.arange(len(sites))
    s = all_spins(len(sites)).astype(np.float64)
    E = s @ field[sites]
    for (i, j), Jb in zip(bonds, bond_J):
        if local[i] >= 0 and local[j] >= 0:
            E += Jb * s[:, local[i]] * s[:, local[j]]
    key = np.zeros(len(s), dtype=np.int64)
    for b in range(C):
        key += (s[:, local[bin_row * C + b]] > 0).astype(np.int64) << b
    order = np.argsort(key, kind="stable")
    bounds = np.searchsorted(key[order], np.arange((1 << C) + 1))
    out = np.full(1 << C, -np.inf)
    for a in range(1 << C):
        chunk = -E[order[bounds[a]:bounds[a + 1]]]
        if len(chunk):
            out[a] = logsumexp(chunk)
    return out


def split_enumeration_logz(model: BondModel) -> float:
    """log Z of a 2D box by enumerating its two halves and joining over the cut.

    Every configuration is still summed explicitly (as a product of half
    configurations), so boxes up to ~40 sites are reachable. The box is cut
    across its longer side.
    """
    if model.vol.d != 2 or model.vol.n_sites < 2:
        raise ValueError("split enumeration needs a 2D box with at least two sites")
    R, C = model.vol.shape
    bonds, field = model.bonds, model.field
    if R < C:
        # transpose so the cut runs across the long axis
        perm = (np.arange(R * C) % C) * R + np.arange(R * C) // C
        bonds = perm[bonds]
        field = np.empty_like(model.field)
        field[perm] = model.field
        R, C = C, R
    if (R - R // 2) * C > 22:
        raise ValueError("box too large for split enumeration")
    r1 = R // 2
    top = _half_logz(C, bonds, model.bond_J, field, range(0, r1), r1 - 1)
    bot = _half_logz(C, bonds, model.bond_J, field, range(r1, R), r1)
    cross = np.zeros(C)
    for (i, j), Jb in zip(bonds, model.bond_J):
        a, b = sorted((int(i), int(j)))
        if a // C == r1 - 1 and b - a == C:
            cross[a % C] += Jb
        elif (a // C < r1) != (b // C < r1):
            raise ValueError("split enumeration handles open boxes only")
    st = ((np.arange(1 << C)[:, None] >> np.arange(C)) & 1) * 2 - 1
    Ecross = (st[:, None, :] * st[None, :, :]) @ cross
    return float(logsumexp(top[:, None] + bot[None, :] - Ecross))
