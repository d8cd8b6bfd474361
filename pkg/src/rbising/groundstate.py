"""The -J = infinity limit: frozen uniform bulk, selection by the boundary alone.

Inside a box the spins are all plus or all minus, so the only random quantity
is the boundary energy ``H_plus = J' * sum(eta)`` over the outer shell.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import gmpy2
import numpy as np
from scipy.special import expit

from .experiment.fitting import fit_powerlaw
from .lattice import build_volume, grid_spins, sample_boundary

PLUS, MINUS, MIXED = "plus", "minus", "mixed"
DEFAULT_DELTA = 0.25


@dataclass(frozen=True)
class GroundStateOutcome:
    H_plus: float
    p_plus: float
    p_minus: float
    classification: str
    delta: float = DEFAULT_DELTA

    @property
    def magnetization(self) -> float:
        return self.p_plus - self.p_minus


def boundary_energy(vol, Jp, eta) -> float:
    return float(Jp) * float(np.sum(eta.values, dtype=np.int64))


def selection_prob(H_plus):
    """Probabilities of the plus and minus configurations given H_plus.

    Works elementwise on arrays.
    """
    H = np.asarray(H_plus, dtype=float)
    p_plus, p_minus = expit(-2.0 * H), expit(2.0 * H)
    if H.ndim == 0:
        return float(p_plus), float(p_minus)
    return p_plus, p_minus


def mixture_halfwidth(delta: float) -> float:
    """Largest |H_plus| classified as a mixture for window delta."""
    if not 0.0 < delta <= 0.5:
        raise ValueError("delta must lie in (0, 0.5]")
    return 0.5 * math.log((1.0 - delta) / delta)


def classify(H_plus, delta: float = DEFAULT_DELTA):
    """Plus, minus or mixed; mixed iff p_plus lies in [delta, 1 - delta].

    Decided in energy space, |H_plus| <= halfwidth(delta), which is the same
    set without rounding trouble at the edges.
    """
    w = mixture_halfwidth(delta)
    H = np.asarray(H_plus, dtype=float)
    out = np.where(np.abs(H) <= w, MIXED, np.where(H < 0, PLUS, MINUS))
    return str(out) if H.ndim == 0 else out


def outcome(H_plus: float, delta: float = DEFAULT_DELTA) -> GroundStateOutcome:
    p, m = selection_prob(H_plus)
    return GroundStateOutcome(float(H_plus), p, m, classify(H_plus, delta), delta)


def n_boundary_sites(d: int, N: int) -> int:
    return 2 * d * N ** (d - 1)


def tie_probability_exact(d: int, N: int, Jp: float, c: float) -> float:
    """Prob(|H_plus| <= c) for i.i.d. fair boundary values, by exact binomials."""
    if c < 0:
        raise ValueError("window c must be >= 0")
    B = n_boundary_sites(d, N)
    if Jp == 0:
        return 1.0
    # |B - 2k| <= c / |J'|, k = number of plus values
    reach = math.floor(c / abs(Jp) + 1e-12)
    k_lo = max(0, math.ceil((B - reach) / 2))
    k_hi = min(B, (B + reach) // 2)
    if k_lo > k_hi:
        return 0.0
    term = gmpy2.comb(B, k_lo)
    total = term
    for k in range(k_lo, k_hi):
        term = term * (B - k) // (k + 1)
        total += term
    # exact integer ratio, rounded once to double
    return float(gmpy2.mpfr(total) / gmpy2.mpfr(2) ** B)


def scaling_fit(d: int, N_list, Jp: float, c: float, min_decades: float = 1.5):
    """Slope and standard error of log tie probability against log N."""
    N_list = sorted(set(int(n) for n in N_list))
    if len(N_list) < 5:
        raise ValueError("need at least 5 sizes")
    if math.log10(N_list[-1] / N_list[0]) < min_decades:
        raise ValueError(f"sizes must span at least {min_decades} decades")
    probs = [tie_probability_exact(d, n, Jp, c) for n in N_list]
    if len(set(probs)) == 1:
        return 0.0, 0.0
    fit = fit_powerlaw(zip(N_list, probs))
    return fit.slope, fit.slope_stderr


def box_bounds(N: int):
    lo = -(N // 2)
    return lo, lo + N - 1


def boundary_sum_direct(seed: int, d: int, N: int) -> int:
    """Sum of the seed's infinite field over the shell of the size-N box."""
    vol = build_volume(d, N)
    return int(np.sum(sample_boundary(vol, "symmetric_iid", seed).values, dtype=np.int64))


def boundary_sums_scan(seed: int, d: int, N_max: int) -> np.ndarray:
    """Boundary sums for every N = 1..N_max from one hashed field and prefix sums."""
    g0 = -(N_max // 2) - 1
    g1 = -(-N_max // 2)
    span = g1 - g0 + 1
    P = np.zeros((span + 1,) * d, dtype=np.int32)
    P[(slice(1, None),) * d] = grid_spins(seed, (g0,) * d, (span,) * d)
    for a in range(d):
        np.cumsum(P, axis=a, out=P)

    Ns = np.arange(1, N_max + 1)
    lo = -(Ns // 2)
    hi = lo + Ns - 1
    total = np.zeros(N_max, dtype=np.int64)
    for a in range(d):
        for plane in (lo - 1, hi + 1):
            lows = [lo - g0] * d
            highs = [hi - g0 + 1] * d
            lows[a] = plane - g0
            highs[a] = plane - g0 + 1
            for corner in range(1 << d):
                idx, sign = [], 1
                for b in range(d):
                    if (corner >> b) & 1:
                        idx.append(lows[b])
                        sign = -sign
                    else:
                        idx.append(highs[b])
                total += sign * P[tuple(idx)]
    return total


def scan_energies(seed: int, d: int, Jp: float, N_max: int, sizes=None):
    """Sizes and H_plus values along one fixed boundary field.

    ``sizes`` defaults to every N up to N_max; sparse size lists are
    evaluated shell by shell.
    """
    if sizes is None:
        Ns = np.arange(1, N_max + 1)
        sums = boundary_sums_scan(seed, d, N_max)
    else:
        Ns = np.asarray(sorted(int(n) for n in sizes))
        sums = np.array([boundary_sum_direct(seed, d, int(n)) for n in Ns])
    return Ns, float(Jp) * sums


def recurrence_scan(seed: int, d: int, Jp: float, N_max: int, delta: float = DEFAULT_DELTA, sizes=None):
    """(N, classification) for each size under one fixed field."""
    Ns, H = scan_energies(seed, d, Jp, N_max, sizes)
    return [(int(n), str(lab)) for n, lab in zip(Ns, classify(H, delta))]
