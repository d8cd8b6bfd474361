"""Row-major transfer matrices for 2D boxes with arbitrary boundary fields.

Sites are added one at a time in row-major order; the state is the frontier
of the last W spins (one per column), so each step costs O(2^W). Vectors are
renormalised after every site and the scale is kept as a running logarithm.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from ..lattice import BondModel, CouplingSpec, LatticeVolume

MAX_WIDTH = 16
MAX_WIDTH_RESOLVED = 12


@dataclass(frozen=True)
class TransferResult:
    logZ_full: float
    logZ_pos: float | None = None
    logZ_neg: float | None = None
    logZ_zero: float | None = None


def _grid_couplings(model: BondModel):
    R, C = model.vol.shape
    Jh = np.zeros((R, max(C - 1, 0)))
    Jv = np.zeros((max(R - 1, 0), C))
    for (i, j), Jb in zip(model.bonds, model.bond_J):
        a, b = sorted((int(i), int(j)))
        if b - a == 1 and a // C == b // C:
            Jh[a // C, a % C] += Jb
        elif b - a == C:
            Jv[a // C, a % C] += Jb
        else:
            raise ValueError("transfer matrix handles open boxes only (no wrap bonds)")
    return Jh, Jv, model.field.reshape(R, C)


def _check(model, limit):
    if model.vol.d != 2:
        raise ValueError("transfer matrix is two-dimensional")
    W = model.vol.shape[1]
    if W > limit:
        raise ValueError(f"width {W} over limit {limit}")


def tm_logz(model: BondModel, fixed=None) -> float:
    """log Z, optionally with some spins pinned (``fixed`` maps site -> +-1)."""
    _check(model, MAX_WIDTH)
    R, C = model.vol.shape
    Jh, Jv, F = _grid_couplings(model)
    pins = np.zeros(R * C, dtype=np.int8)
    for site, val in (fixed or {}).items():
        pins[site] = val
    S = 1 << C
    states = np.arange(S)
    spins = ((states[:, None] >> np.arange(C)) & 1) * 2 - 1
    Z = np.zeros(S)
    Z[0] = 1.0
    logscale = 0.0
    for r in range(R):
        for c in range(C):
            hi, lo = S >> (c + 1), 1 << c
            new = np.zeros((hi, 2, lo))
            for bit, s in ((0, -1), (1, 1)):
                if pins[r * C + c] == -s:
                    continue
                e = F[r, c] * s
                if r > 0:
                    e = e + Jv[r - 1, c] * s * spins[:, c]
                if c > 0:
                    e = e + Jh[r, c - 1] * s * spins[:, c - 1]
                contrib = (Z * np.exp(-e)).reshape(hi, 2, lo)
                new[:, bit, :] = contrib[:, 0, :] + contrib[:, 1, :]
            Z = new.reshape(S)
            m = Z.max()
            Z /= m
            logscale += np.log(m)
    return float(logscale + np.log(Z.sum()))


@njit(cache=True, inline="always")
def _half_step(src, dst, W, c, S, nb, assign):
    """Add site c with spin ``nb`` (0 minus, 1 plus): dst[new state] (+)= sum over the old bit."""
    bit = 1 << c
    m = 0.0
    for h in range(S >> (c + 1)):
        base = h << (c + 1)
        for l in range(bit):
            s0 = base | l
            s1 = s0 | bit
            v = src[s0] * W[s0] + src[s1] * W[s1]
            t = s0 | (nb << c)
            if not assign:
                v += dst[t]
            dst[t] = v
            m = max(m, v)
    return m


@njit(cache=True, inline="always")
def _zero_half(dst, c, S, nb):
    bit = 1 << c
    for h in range(S >> (c + 1)):
        base = (h << (c + 1)) | (nb << c)
        for l in range(bit):
            dst[base | l] = 0.0


@njit(cache=True)
def _tm_resolved(R, C, Jh, Jv, F):
    n = R * C
    S = 1 << C
    # Z[P, s]: frontier state s with P plus spins so far and the sign of M still open;
    # Zp / Zm collect states whose sign is already decided
    Z = np.zeros((n + 1, S))
    Zn = np.zeros((n + 1, S))
    Zp = np.zeros(S)
    Zm = np.zeros(S)
    Zpn = np.zeros(S)
    Zmn = np.zeros(S)
    Z[0, 0] = 1.0
    logscale = 0.0
    inv = 1.0
    w = np.empty(8)
    W0 = np.empty(S)
    W1 = np.empty(S)
    plo, phi = 0, 0
    k = 0
    for r in range(R):
        for c in range(C):
            k += 1
            rem = n - k
            nlo = max(0, (n + 1) // 2 - rem)
            nhi = min(k, n // 2)
            for idx in range(8):
                nb = idx & 1
                up = 1 if (idx >> 1) & 1 else -1
                left = 1 if (idx >> 2) & 1 else -1
                sp = 2 * nb - 1
                e = F[r, c] * sp
                if r > 0:
                    e += Jv[r - 1, c] * sp * up
                if c > 0:
                    e += Jh[r, c - 1] * sp * left
                # previous normalisation folded into this step
                w[idx] = np.exp(-e) * inv
            for s in range(S):
                ub = (s >> c) & 1
                lb = (s >> (c - 1)) & 1 if c > 0 else 0
                W0[s] = w[(ub << 1) | (lb << 2)]
                W1[s] = w[1 | (ub << 1) | (lb << 2)]
            m = 0.0
            Zpn[:] = 0.0
            Zmn[:] = 0.0
            _half_step(Zp, Zpn, W0, c, S, 0, False)
            _half_step(Zp, Zpn, W1, c, S, 1, False)
            _half_step(Zm, Zmn, W0, c, S, 0, False)
            _half_step(Zm, Zmn, W1, c, S, 1, False)
            for P in range(plo, phi + 1):
                for nb in range(2):
                    P2 = P + nb
                    if 2 * P2 > n:
                        _half_step(Z[P], Zpn, W1 if nb else W0, c, S, nb, False)
                    elif 2 * (P2 + rem) < n:
                        _half_step(Z[P], Zmn, W1 if nb else W0, c, S, nb, False)
            m = max(Zpn.max(), Zmn.max())
            for P2 in range(nlo, nhi + 1):
                # each half of a live row has exactly one source row
                if plo <= P2 <= phi:
                    m = max(m, _half_step(Z[P2], Zn[P2], W0, c, S, 0, True))
                else:
                    _zero_half(Zn[P2], c, S, 0)
                if plo <= P2 - 1 <= phi:
                    m = max(m, _half_step(Z[P2 - 1], Zn[P2], W1, c, S, 1, True))
                else:
                    _zero_half(Zn[P2], c, S, 1)
            logscale -= np.log(inv)
            inv = 1.0 / m
            Z, Zn = Zn, Z
            Zp, Zpn = Zpn, Zp
            Zm, Zmn = Zmn, Zm
            plo, phi = nlo, nhi
    zero = Z[n // 2].sum() if n % 2 == 0 else 0.0
    return logscale, Zp.sum(), Zm.sum(), zero


def _safe_log(x):
    return float(np.log(x)) if x > 0 else float("-inf")


def tm_resolved(model: BondModel) -> TransferResult:
    _check(model, MAX_WIDTH_RESOLVED)
    R, C = model.vol.shape
    Jh, Jv, F = _grid_couplings(model)
    scale, pos, neg, zero = _tm_resolved(R, C, Jh, Jv, np.ascontiguousarray(F))
    return TransferResult(
        float(scale + np.log(pos + neg + zero)),
        scale + _safe_log(pos),
        scale + _safe_log(neg),
        scale + _safe_log(zero),
    )


def transfer_matrix(vol: LatticeVolume, c: CouplingSpec, eta, resolve_magnetization: bool = False) -> TransferResult:
    """Exact partition function of a 2D box (rows x W columns).

    With ``resolve_magnetization`` the sum is split by the sign of the total
    magnetization M into M > 0, M < 0 and M = 0 parts.
    """
    model = BondModel.uniform(vol, c, eta)
    if resolve_magnetization:
        return tm_resolved(model)
    return TransferResult(tm_logz(model))


def tm_window(model: BondModel, window) -> np.ndarray:
    """Exact window expectations from pinned-spin partition functions."""
    logZ = tm_logz(model)
    vals = []
    for i in window.sites:
        lp, lm = tm_logz(model, {i: 1}), tm_logz(model, {i: -1})
        vals.append(float(np.exp(lp - logZ) - np.exp(lm - logZ)))
    for i, j in window.pairs:
        tot = 0.0
        for a in (1, -1):
            for b in (1, -1):
                tot += a * b * np.exp(tm_logz(model, {i: a, j: b}) - logZ)
        vals.append(float(tot))
    return np.asarray(vals)
