"""Restricted free energies, the plus/minus decomposition and the finite-temperature surveys."""

from __future__ import annotations

import csv
from dataclasses import asdict, dataclass

import numpy as np
from scipy.special import expit, logsumexp
from scipy.stats import binomtest

from ..experiment.seeds import derive_seed
from ..lattice import BondModel, CouplingSpec, build_volume, sample_boundary
from .contours import all_longest_contours
from .enumeration import EnumerationResult, Window, canonical_window, enumerate_model, model_energies, origin_window
from .transfer import TransferResult, tm_resolved


@dataclass(frozen=True)
class FreeEnergyPair:
    F_plus: float
    F_minus: float

    @property
    def delta(self) -> float:
        return self.F_plus - self.F_minus

    @property
    def weights(self):
        """(w_plus, w_minus) of the full state as a mixture of the two ensembles."""
        return float(expit(self.delta)), float(expit(-self.delta))

    @property
    def logZ(self) -> float:
        return float(np.logaddexp(self.F_plus, self.F_minus))


def free_energy_pair(result) -> FreeEnergyPair:
    """F_plus, F_minus from an enumeration or a magnetization-resolved transfer matrix.

    For the transfer matrix the ensembles are M > 0 and M < 0 with the M = 0
    slab split evenly between them.
    """
    if isinstance(result, EnumerationResult):
        Fp, Fm = result.logZ_plus, result.logZ_minus
    elif isinstance(result, TransferResult):
        if result.logZ_pos is None:
            raise ValueError("transfer-matrix result lacks magnetization resolution")
        half0 = result.logZ_zero - np.log(2.0)
        Fp = float(np.logaddexp(result.logZ_pos, half0))
        Fm = float(np.logaddexp(result.logZ_neg, half0))
    else:
        raise TypeError(f"unsupported solver output {type(result).__name__}")
    if not (np.isfinite(Fp) and np.isfinite(Fm)):
        raise ValueError("both restricted partition functions must be positive")
    return FreeEnergyPair(float(Fp), float(Fm))


def decompose_check(vol, c: CouplingSpec, eta, window: Window | None = None) -> float:
    """Largest gap between full expectations and the w+/w- mixture of restricted ones."""
    res = enumerate_model(BondModel.uniform(vol, c, eta), window)
    wp, wm = free_energy_pair(res).weights
    mix = wp * res.plus.values + wm * res.minus.values
    return float(np.max(np.abs(res.full.values - mix)))


def delta_f_tm(W: int, c: CouplingSpec, seed: int) -> float:
    """F_plus - F_minus on the W x W box under the seed's boundary field."""
    vol = build_volume(2, W)
    model = BondModel.uniform(vol, c, sample_boundary(vol, "symmetric_iid", seed))
    return free_energy_pair(tm_resolved(model)).delta


def fe_sample(widths, c: CouplingSpec, seed: int):
    """Delta F at each width for one boundary field (boxes are concentric)."""
    return [delta_f_tm(int(W), c, seed) for W in widths]


@dataclass(frozen=True)
class SurveyRow:
    size: int
    n_samples: int
    threshold: float
    empirical_probability: float
    ci_low: float
    ci_high: float
    mean_delta_f: float
    sem_delta_f: float
    tail_min_abs_delta_f: float


def survey_rows(widths, dF, thresholds) -> list[SurveyRow]:
    """Summarise a (samples x widths) matrix of Delta F values."""
    dF = np.asarray(dF, dtype=float)
    n = dF.shape[0]
    # smallest |dF| from each size onward, per field: a finite proxy for |dF| escaping to infinity
    tail_min = np.minimum.accumulate(np.abs(dF)[:, ::-1], axis=1)[:, ::-1]
    rows = []
    for k, W in enumerate(widths):
        hits = int(np.sum(np.abs(dF[:, k]) <= thresholds[k]))
        ci = binomtest(hits, n).proportion_ci(0.95, method="wilson")
        rows.append(
            SurveyRow(
                int(W),
                n,
                float(thresholds[k]),
                hits / n,
                float(ci.low),
                float(ci.high),
                float(dF[:, k].mean()),
                float(dF[:, k].std(ddof=1) / np.sqrt(n)) if n > 1 else float("nan"),
                float(tail_min[:, k].mean()),
            )
        )
    return rows


def fe_difference_survey(widths, c: CouplingSpec, n_samples: int, tau: float = 1.0, eps=None, master_seed: int = 0, mapper=map):
    """Empirical Prob(|Delta F| <= threshold) per width, threshold tau or W**eps.

    ``mapper`` lets a caller fan samples out to worker processes; the result is
    ordered by sample index either way.
    """
    widths = [int(W) for W in widths]
    seeds = [derive_seed(master_seed, ["fe-survey", i]) for i in range(n_samples)]
    dF = np.array(list(mapper(fe_sample, [widths] * n_samples, [c] * n_samples, seeds)))
    thresholds = [float(W) ** eps if eps is not None else float(tau) for W in widths]
    return survey_rows(widths, dF, thresholds), dF


def powerlaw_bound(rows, exponent: float = 0.3):
    """Constant of the bound p(W) <= const * W**-exponent anchored at the smallest W,
    and whether every width obeys it."""
    const = rows[0].empirical_probability * rows[0].size**exponent
    ok = all(r.empirical_probability <= const * r.size**-exponent + 1e-15 for r in rows)
    return const, ok


def is_nonincreasing(values) -> bool:
    v = list(values)
    return all(b <= a for a, b in zip(v, v[1:]))


def write_survey_csv(path, rows):
    fields = list(SurveyRow.__dataclass_fields__)
    with open(path, "w", newline="") as fh:
        wr = csv.DictWriter(fh, fieldnames=fields)
        wr.writeheader()
        for r in rows:
            wr.writerow(asdict(r))


@dataclass(frozen=True)
class ProbeRow:
    size: int
    n_eta: int
    pure_plus: float
    pure_minus: float
    worst_plus: float
    worst_minus: float
    mean_plus: float


def check_probe_couplings(c: CouplingSpec, Delta: float = 2.0):
    if -c.J < Delta * abs(c.Jp) or -c.J < 1.5:
        raise ValueError(f"probe needs -J >= {Delta}|J'| and -J >= 1.5, got J={c.J}, J'={c.Jp}")


def pure_origin(N: int, c: CouplingSpec):
    """<s0> under all-plus and all-minus boundaries on the N x N box."""
    vol = build_volume(2, int(N))
    win = origin_window(vol)
    return tuple(
        enumerate_model(BondModel.uniform(vol, c, sample_boundary(vol, kind)), win).full.origin
        for kind in ("all_plus", "all_minus")
    )


def restricted_origin(N: int, c: CouplingSpec, seed: int):
    """<s0> in the plus and minus ensembles under the seed's boundary field."""
    vol = build_volume(2, int(N))
    eta = sample_boundary(vol, "symmetric_iid", seed)
    res = enumerate_model(BondModel.uniform(vol, c, eta), origin_window(vol))
    return res.plus.origin, res.minus.origin


def probe_rows(sizes, pure, restricted):
    """ProbeRows from pure[k] = (plus, minus) and restricted[i][k] = (plus, minus)."""
    R = np.asarray(restricted, dtype=float)
    rows = []
    for k, N in enumerate(sizes):
        dev_p = np.abs(R[:, k, 0] - pure[k][0])
        dev_m = np.abs(R[:, k, 1] - pure[k][1])
        rows.append(ProbeRow(int(N), len(R), float(pure[k][0]), float(pure[k][1]), float(dev_p.max()), float(dev_m.max()), float(dev_p.mean())))
    return rows


def restricted_convergence_probe(sizes, c: CouplingSpec, n_eta: int = 100, master_seed: int = 0, Delta: float = 2.0):
    """Worst |<s0>_{eta,+-} - <s0>_{+-bc}| over random fields, per box size (enumeration)."""
    check_probe_couplings(c, Delta)
    pure = [pure_origin(N, c) for N in sizes]
    seeds = [derive_seed(master_seed, ["probe", i]) for i in range(n_eta)]
    restricted = [[restricted_origin(N, c, s) for N in sizes] for s in seeds]
    return probe_rows(sizes, pure, restricted)


def long_contour_weight(vol, c: CouplingSpec, eta, min_length=None) -> float:
    """Gibbs weight of configurations whose longest contour has at least ``min_length`` edges (default 2N)."""
    if vol.d != 2:
        raise ValueError("contour lengths are two-dimensional")
    min_length = 2 * max(vol.shape) if min_length is None else min_length
    logw = -model_energies(BondModel.uniform(vol, c, eta))
    longest = all_longest_contours(vol.shape)
    sel = longest >= min_length
    if not sel.any():
        return 0.0
    return float(np.exp(logsumexp(logw[sel]) - logsumexp(logw)))


__all__ = [
    "FreeEnergyPair",
    "free_energy_pair",
    "decompose_check",
    "delta_f_tm",
    "fe_sample",
    "SurveyRow",
    "survey_rows",
    "fe_difference_survey",
    "powerlaw_bound",
    "is_nonincreasing",
    "pure_origin",
    "restricted_origin",
    "probe_rows",
    "write_survey_csv",
    "ProbeRow",
    "restricted_convergence_probe",
    "long_contour_weight",
    "canonical_window",
]
