"""Acceptance criteria, each at its stated tolerance and runtime budget.

Every criterion prints one PASS/FAIL line (collected in the terminal summary).
Run alone with:  pytest tests/test_acceptance.py -v
"""

import time

import numpy as np
import pytest

from rbising.experiment.config import make_config
from rbising.experiment.runner import REPORT, RECORDS, SUMMARY, run

pytestmark = pytest.mark.slow


def _run(kind, params, tmp_path, seed=0, workers=1, name=None):
    t = time.perf_counter()
    res = run(make_config(kind, {k: str(v) for k, v in params.items()}, seed, workers, str(tmp_path / (name or kind))))
    assert not res.failures, res.failures
    return res, time.perf_counter() - t


def test_criterion_01_tie_probability_scaling(tmp_path, acceptance):
    r2, t2 = _run("gs-scaling", {"dim": 2, "sizes": "16 32 64 128 256 512 1024 2048 4096"}, tmp_path, name="d2")
    r3, t3 = _run("gs-scaling", {"dim": 3, "sizes": "8 16 32 64 128 256 512"}, tmp_path, name="d3")
    s2, s3 = r2.report["slope"], r3.report["slope"]
    ok = abs(s2 + 0.5) <= 0.03 and abs(s3 + 1.0) <= 0.05 and t2 + t3 < 60
    acceptance(1, ok, f"slope d=2 {s2:.4f} (target -0.5 +- 0.03), d=3 {s3:.4f} (target -1.0 +- 0.05), {t2 + t3:.1f} s")
    assert ok


def test_criterion_02_metastate_weights(tmp_path, acceptance):
    res, t = _run("metastate", {"provenance": "over-eta", "provider": "ground-state", "bc": "random", "dim": 2, "size": 256, "samples": 10000}, tmp_path)
    atoms = res.report["metastate"]["atoms"]
    m_star = res.report["m_star"]
    pure = [a["weight"] for a in atoms if abs(a["descriptor"][0]) >= m_star]
    total = sum(pure)
    ok = len(pure) == 2 and total >= 0.95 and all(abs(w - 0.5) <= 0.015 for w in pure) and t < 60
    shares = ", ".join(f"{w / total:.4f}" for w in pure) if pure else "-"
    acceptance(
        2, ok,
        f"pure atoms {len(pure)}, weights {', '.join(f'{w:.4f}' for w in pure)} (each 0.5 +- 0.015), "
        f"pure total {total:.4f} (>= 0.95), shares within pure mass {shares}, {t:.1f} s",
    )
    assert ok


def test_criterion_03_sparse_sequence_selection(tmp_path, acceptance):
    geo, t1 = _run("gs-recurrence", {"sequence": "geometric", "base": 4, "k_max": 7, "k_min": 3, "samples": 500}, tmp_path, name="geo")
    full, t2 = _run("gs-recurrence", {"sequence": "full", "n_max": 2000, "samples": 500}, tmp_path, name="full")
    clean, expo = geo.report["clean_fraction"], full.report["exponent"]
    ok = clean >= 0.9 and abs(expo - 0.5) <= 0.1 and t1 + t2 < 300
    acceptance(3, ok, f"no-mixed fraction for k >= 3: {clean:.3f} (>= 0.9); full-sequence exponent {expo:.3f} (0.5 +- 0.1), {t1 + t2:.1f} s")
    assert ok


def test_criterion_04_solver_oracle(tmp_path, acceptance):
    res, t = _run("oracle", {"max_rows": 3, "max_cols": 12, "samples": 50}, tmp_path)
    rel, dec = res.report["max_relative_error"], res.report["max_decomposition_error"]
    shapes = {tuple(r["shape"]) for r in res.records}
    ok = rel <= 1e-12 and dec <= 1e-12 and (3, 12) in shapes and t < 120
    acceptance(4, ok, f"max rel |Z_enum/Z_tm - 1| {rel:.2e}, decomposition {dec:.2e} over {res.report['n_enumeration']} enumeration instances (<= 1e-12), {t:.1f} s")
    assert ok


def test_criterion_05_restricted_convergence(tmp_path, acceptance):
    res, t = _run("restricted-probe", {"sizes": "3 4 5", "J": -2.0, "Jp": -1.0, "samples": 100}, tmp_path)
    worst = [max(r["worst_plus"], r["worst_minus"]) for r in res.summary_rows]
    mono = all(b < a for a, b in zip(worst, worst[1:]))
    ok = mono and worst[-1] <= 0.01 and t < 600
    acceptance(5, ok, f"worst deviation 3x3/4x4/5x5: {', '.join(f'{w:.2e}' for w in worst)} (monotone: {mono}; 5x5 <= 0.01), {t:.1f} s")
    assert ok


def test_criterion_06_free_energy_survey(tmp_path, acceptance):
    res, t = _run("fe-survey", {"sizes": "4 6 8 10 12", "J": -1.2, "Jp": -1.0, "tau": 1.0, "samples": 10000}, tmp_path)
    probs = res.report["probabilities"]
    ok = res.checks["nonincreasing"] and res.checks["powerlaw_bound"] and t < 1800
    acceptance(
        6, ok,
        f"Prob(|dF| <= 1) for W=4..12: {', '.join(f'{p:.4f}' for p in probs)}; non-increasing {res.checks['nonincreasing']}, "
        f"<= {res.report['bound_constant']:.3f} W^-0.3: {res.checks['powerlaw_bound']}, {t:.0f} s",
    )
    assert ok


def test_criterion_07_stacked_census(tmp_path, acceptance):
    res, t = _run("stacked-census", {"sizes": "64 256 1024", "deltas": "0.1 0.25 0.4", "samples": 200}, tmp_path)
    parts = [f"delta {d}: count {v['count_exponent']:.3f}, fraction {v['fraction_exponent']:.3f}" for d, v in
             ((k.split("=")[1], v) for k, v in res.report.items() if k.startswith("delta="))]
    ok = all(res.checks.values()) and t < 300
    acceptance(7, ok, f"{'; '.join(parts)} (0.5 +- 0.1 / -0.5 +- 0.1), {t:.1f} s")
    assert ok


def test_criterion_08_overlap(tmp_path, acceptance):
    res, t = _run("overlap", {"sizes": "64 256 1024", "samples": 200, "draws": 100}, tmp_path)
    cs = res.report["c"]
    qs = [r["mean_q"] for r in res.summary_rows]
    ok = res.checks["c_stable"] and t < 300
    acceptance(8, ok, f"mean q {', '.join(f'{q:.4f}' for q in qs)}; c = sqrt(N)(1 - q) {', '.join(f'{c:.3f}' for c in cs)} (within 30% of mean), {t:.1f} s")
    assert ok


def test_criterion_09_gauge(tmp_path, acceptance):
    res, t = _run("gauge-check", {"sizes": "3 4", "samples": 50, "J": -1.3, "Jp": -0.8}, tmp_path)
    dev = res.report["max_deviation"]
    ok = dev <= 1e-12 and t < 60
    acceptance(9, ok, f"max deviation {dev:.2e} over {len(res.records)} instances (<= 1e-12), {t:.1f} s")
    assert ok


def test_criterion_10_monte_carlo(tmp_path, acceptance):
    res, t = _run("mc-validate", {"size": 10, "J": -1.2, "Jp": -1.0, "samples": 20, "sweeps": 100000}, tmp_path)
    z = res.report["max_abs_z"]
    ok = z <= 4.0 and t < 600
    acceptance(10, ok, f"max |z| {z:.2f} over {3 * len(res.records)} window observables (<= 4), {t:.1f} s")
    assert ok


REPRO = [
    ("fe-survey", {"sizes": "4 6 8", "samples": 60}),
    ("metastate", {"size": 64, "samples": 500}),
    ("stacked-census", {"sizes": "16 32 64", "samples": 20}),
    ("overlap", {"sizes": "16 64", "samples": 10, "draws": 20}),
    ("mc-validate", {"size": 4, "samples": 3, "sweeps": 4000}),
]


def test_criterion_11_reproducibility(tmp_path, acceptance):
    same = []
    for kind, params in REPRO:
        outs = []
        for workers in (1, 3):
            _run(kind, params, tmp_path, seed=11, workers=workers, name=f"{kind}-{workers}")
            d = tmp_path / f"{kind}-{workers}"
            outs.append([(d / f).read_bytes() for f in (RECORDS, SUMMARY, REPORT)])
        same.append(outs[0] == outs[1])
    ok = all(same)
    acceptance(11, ok, f"byte-identical outputs at 1 vs 3 workers for {sum(same)}/{len(same)} experiments")
    assert ok
