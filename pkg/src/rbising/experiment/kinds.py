"""Experiment kinds: parameter schema, task list, pure task function and aggregation.

Task functions take a JSON payload and the task seed and return a JSON-ready
dict. Aggregation sees the records in task order and returns summary rows, a
report and named acceptance checks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .. import groundstate as gs
from .. import metastate as ms
from .. import stacked as st
from ..exact import analysis as an
from ..exact.enumeration import canonical_window, enumerate_model, split_enumeration_logz
from ..exact.transfer import tm_logz, tm_window
from ..lattice import BondModel, CouplingSpec, build_box, build_volume, sample_boundary
from ..montecarlo import ChainConfig, default_ladder, run_chain
from .config import ConfigError
from .fitting import fit_powerlaw
from .runner import Task
from .seeds import derive_seed


@dataclass(frozen=True)
class Kind:
    schema: dict
    tasks: Callable
    run_task: Callable
    aggregate: Callable
    validate: Callable = lambda params: None


def _require(cond, msg):
    if not cond:
        raise ConfigError(msg)


def _tasks(items, kind):
    """Tasks from (path suffix, payload) pairs, indexed in order."""
    return [Task(i, (kind, *suffix), payload) for i, (suffix, payload) in enumerate(items)]


# ---------------------------------------------------------------- gs-scaling

_SCALING_DEFAULTS = {2: ([16, 32, 64, 128, 256, 512, 1024, 2048, 4096], 0.03), 3: ([8, 16, 32, 64, 128, 256, 512], 0.05)}


def _scaling_validate(p):
    _require(p["dim"] in (2, 3), "dim must be 2 or 3")
    if not p["sizes"]:
        p["sizes"] = _SCALING_DEFAULTS[p["dim"]][0]
    if p["tolerance"] is None:
        p["tolerance"] = _SCALING_DEFAULTS[p["dim"]][1]
    _require(len(set(p["sizes"])) >= 5 and min(p["sizes"]) >= 1, "need at least 5 distinct positive sizes")


def _scaling_tasks(p, master_seed):
    return _tasks([((N,), {"dim": p["dim"], "N": N, "Jp": p["Jp"], "window": p["window"]}) for N in p["sizes"]], "gs-scaling")


def _scaling_run(q, seed):
    return {"N": q["N"], "tie_probability": gs.tie_probability_exact(q["dim"], q["N"], q["Jp"], q["window"])}


def _scaling_aggregate(p, records):
    rows = [{"N": r["N"], "tie_probability": r["tie_probability"]} for r in records]
    fit = fit_powerlaw((r["N"], r["tie_probability"]) for r in records)
    expected = -(p["dim"] - 1) / 2.0
    report = {"slope": fit.slope, "slope_stderr": fit.slope_stderr, "expected_slope": expected, "r_squared": fit.r_squared}
    return rows, report, {"slope_within_tolerance": abs(fit.slope - expected) <= p["tolerance"]}


GS_SCALING = Kind(
    {"dim": ("int", 2), "sizes": ("ints", ""), "Jp": ("float", -1.0), "window": ("float", 0.0), "tolerance": ("opt_float", None)},
    _scaling_tasks, _scaling_run, _scaling_aggregate, _scaling_validate,
)


# ---------------------------------------------------------------- gs-recurrence


def _sequence(p):
    try:
        return ms.make_sequence(p["sequence"], p["dim"], N_max=p["n_max"], base=p["base"], power=p["power"], k_max=p["k_max"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _recurrence_validate(p):
    _require(p["dim"] in (2, 3), "dim must be 2 or 3")
    _require(p["samples"] >= 1, "samples must be >= 1")
    _require(0 < p["delta"] <= 0.5, "delta must lie in (0, 0.5]")
    _sequence(p)


def _recurrence_tasks(p, master_seed):
    payload = {k: p[k] for k in ("dim", "Jp", "delta", "sequence", "n_max", "base", "power", "k_max")}
    return _tasks([((i,), payload) for i in range(p["samples"])], "gs-recurrence")


def _recurrence_run(q, seed):
    seq = _sequence(q)
    H = ms.GroundStateProvider(q["dim"], q["Jp"]).scan(seed, seq.sizes)
    # descriptor[0] = p+ - p-; mixed iff p+ in [delta, 1 - delta]
    mixed = np.abs(H[:, 0]) <= 1.0 - 2.0 * q["delta"]
    return {"mixed_index": [int(k) + 1 for k in np.flatnonzero(mixed)]}


def _recurrence_aggregate(p, records):
    seq = _sequence(p)
    n = len(records)
    if p["sequence"] == "full":
        grid = sorted({int(round(x)) for x in np.geomspace(p["fit_from"], seq.sizes[-1], 15)})
        cum = np.zeros(len(grid))
        for r in records:
            idx = np.asarray(r["mixed_index"], dtype=np.int64)
            cum += np.searchsorted(idx, grid, side="right")
        cum /= n
        rows = [{"N": N, "mean_cumulative_mixed": float(c)} for N, c in zip(grid, cum)]
        fit = fit_powerlaw(zip(grid, cum))
        report = {"exponent": fit.slope, "exponent_stderr": fit.slope_stderr, "n_seeds": n}
        return rows, report, {"exponent_within_tolerance": abs(fit.slope - p["target_exponent"]) <= p["tolerance"]}
    clean = [not any(k >= p["k_min"] for k in r["mixed_index"]) for r in records]
    counts = np.zeros(len(seq.sizes))
    for r in records:
        for k in r["mixed_index"]:
            counts[k - 1] += 1
    rows = [{"k": k + 1, "N": N, "mixed_fraction": counts[k] / n} for k, N in enumerate(seq.sizes)]
    frac = float(np.mean(clean))
    report = {"clean_fraction": frac, "k_min": p["k_min"], "n_seeds": n, "partial_sum": seq.partial_sum, "tail_bound": seq.tail_bound}
    return rows, report, {"clean_fraction": frac >= p["min_clean_fraction"]}


GS_RECURRENCE = Kind(
    {
        "dim": ("int", 2), "Jp": ("float", -1.0), "delta": ("float", gs.DEFAULT_DELTA), "samples": ("int", 500),
        "sequence": ("str", "geometric"), "n_max": ("int", 2000), "base": ("int", 4), "power": ("float", 2.0),
        "k_max": ("int", 7), "k_min": ("int", 3), "min_clean_fraction": ("float", 0.9),
        "fit_from": ("int", 20), "target_exponent": ("float", 0.5), "tolerance": ("float", 0.1),
    },
    _recurrence_tasks, _recurrence_run, _recurrence_aggregate, _recurrence_validate,
)


# ---------------------------------------------------------------- metastate


def _provider(q):
    c = CouplingSpec(q["J"], q["Jp"])
    if q["provider"] == "ground-state":
        return ms.GroundStateProvider(q["dim"], q["Jp"], q["bc"])
    if q["provider"] in ("enumeration", "transfer"):
        return ms.ExactProvider(c, q["bc"], "enumeration" if q["provider"] == "enumeration" else "tm")
    return ms.MCProvider(c, q["bc"], q["dim"], q["sweeps"], default_ladder())


def _metastate_validate(p):
    _require(p["provenance"] in ("over-eta", "over-volumes"), "provenance must be over-eta or over-volumes")
    _require(p["bc"] in ("random", "free", "periodic", "plus", "minus"), "unknown bc")
    _require(p["provider"] in ("ground-state", "enumeration", "transfer", "mc"), "unknown provider")
    _require(p["dim"] in (2, 3), "dim must be 2 or 3")
    _require(p["provider"] in ("ground-state", "mc") or p["dim"] == 2, "exact providers are two-dimensional")
    _require(not (p["provider"] == "transfer" and p["bc"] == "periodic"), "transfer matrix handles open boxes only")
    if p["provenance"] == "over-eta":
        _require(p["samples"] >= 1 and p["size"] >= 1, "over-eta needs size and samples")
    else:
        _sequence(p)


def _metastate_tasks(p, master_seed):
    payload = {k: v for k, v in p.items()}
    if p["provenance"] == "over-eta":
        return [Task(i, ("eta", i), {**payload, "N": p["size"]}) for i in range(p["samples"])]
    # one boundary field (the master seed's) followed along the sequence
    return [Task(k, ("volume", k), {**payload, "N": N, "field_seed": master_seed}) for k, N in enumerate(_sequence(p).sizes)]


def _metastate_run(q, seed):
    field_seed = q.get("field_seed", seed)
    return {"N": q["N"], "descriptor": [float(x) for x in _provider(q)(q["N"], field_seed)]}


def _metastate_aggregate(p, records):
    provider = _provider(p)
    m_star = p["m_star"]
    if m_star is None:
        N0 = records[0]["N"]
        m_star = ms.DEFAULT_M_STAR if p["provider"] == "ground-state" else ms.calibrate_m_star(provider, N0)
    X = np.array([r["descriptor"] for r in records])
    meta = ms.from_descriptors(X, p["provenance"], dict(p), p["radius"], m_star)
    rows = [
        {"atom": i, "class": ms.classify_descriptor(a.descriptor, m_star), "weight": a.weight, "n_visits": a.n_visits,
         "descriptor": [float(x) for x in a.descriptor]}
        for i, a in enumerate(meta.atoms)
    ]
    pure = meta.pure_atoms()
    n = len(records)
    checks = {"weights_sum_to_one": abs(meta.total_weight - 1.0) <= 1e-12}
    if p["bc"] == "random" and p["provenance"] == "over-eta":
        sigma3 = 3.0 * math.sqrt(0.25 / n)
        checks["two_pure_atoms"] = len(pure) == 2
        checks["pure_weight"] = sum(a.weight for a in pure) >= 0.95
        checks["balanced_pure_atoms"] = len(pure) == 2 and all(abs(a.weight - 0.5) <= sigma3 for a in pure)
    elif p["bc"] in ("plus", "minus"):
        checks["single_pure_atom"] = len(meta.atoms) == 1 and len(pure) == 1
    elif p["bc"] in ("free", "periodic") and p["provider"] != "ground-state":
        # the boundary does not depend on the seed, so every sample is the same state
        checks["single_atom"] = len(meta.atoms) == 1
    report = {"metastate": meta.to_json(), "m_star": m_star, "n_pure": len(pure), "pure_weight": float(sum(a.weight for a in pure))}
    return rows, report, checks


METASTATE = Kind(
    {
        "provenance": ("str", "over-eta"), "bc": ("str", "random"), "provider": ("str", "ground-state"),
        "dim": ("int", 2), "size": ("int", 256), "samples": ("int", 10000), "J": ("float", -1.2), "Jp": ("float", -1.0),
        "radius": ("float", ms.DEFAULT_RADIUS), "m_star": ("opt_float", None), "sweeps": ("int", 20000),
        "sequence": ("str", "geometric"), "n_max": ("int", 2000), "base": ("int", 4), "power": ("float", 2.0), "k_max": ("int", 7),
    },
    _metastate_tasks, _metastate_run, _metastate_aggregate, _metastate_validate,
)


# ---------------------------------------------------------------- fe-survey


def _fe_validate(p):
    _require(p["samples"] >= 2, "samples must be >= 2")
    _require(all(2 <= W <= 12 for W in p["sizes"]), "widths must lie in 2..12 (resolved transfer matrix)")
    _require(len(p["sizes"]) >= 2, "need at least two widths")


def _fe_tasks(p, master_seed):
    payload = {"sizes": p["sizes"], "J": p["J"], "Jp": p["Jp"]}
    return _tasks([((i,), payload) for i in range(p["samples"])], "fe-survey")


def _fe_run(q, seed):
    return {"delta_f": an.fe_sample(q["sizes"], CouplingSpec(q["J"], q["Jp"]), seed)}


def _fe_aggregate(p, records):
    dF = np.array([r["delta_f"] for r in records])
    thresholds = [float(W) ** p["eps"] if p["eps"] is not None else p["tau"] for W in p["sizes"]]
    rows = an.survey_rows(p["sizes"], dF, thresholds)
    const, bounded = an.powerlaw_bound(rows, p["exponent"])
    probs = [r.empirical_probability for r in rows]
    report = {"bound_constant": const, "bound_exponent": p["exponent"], "probabilities": probs}
    checks = {"nonincreasing": an.is_nonincreasing(probs), "powerlaw_bound": bounded}
    return [r.__dict__ for r in rows], report, checks


FE_SURVEY = Kind(
    {"sizes": ("ints", "4 6 8 10 12"), "J": ("float", -1.2), "Jp": ("float", -1.0), "tau": ("float", 1.0),
     "eps": ("opt_float", None), "samples": ("int", 10000), "exponent": ("float", 0.3)},
    _fe_tasks, _fe_run, _fe_aggregate, _fe_validate,
)


# ---------------------------------------------------------------- restricted-probe


def _probe_validate(p):
    _require(all(1 <= N <= 5 for N in p["sizes"]), "probe sizes must lie in 1..5 (enumeration)")
    _require(p["samples"] >= 1, "samples must be >= 1")
    try:
        an.check_probe_couplings(CouplingSpec(p["J"], p["Jp"]), p["Delta"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _probe_tasks(p, master_seed):
    base = {"sizes": p["sizes"], "J": p["J"], "Jp": p["Jp"]}
    pure = [(("pure",), {**base, "pure": True})]
    # task paths ("probe", i) give the same fields as restricted_convergence_probe
    fields = [Task(1 + i, ("probe", i), base) for i in range(p["samples"])]
    return _tasks(pure, "restricted-probe") + fields


def _probe_run(q, seed):
    c = CouplingSpec(q["J"], q["Jp"])
    if q.get("pure"):
        return {"pure": [list(an.pure_origin(N, c)) for N in q["sizes"]]}
    return {"restricted": [list(an.restricted_origin(N, c, seed)) for N in q["sizes"]]}


def _probe_aggregate(p, records):
    pure = records[0]["pure"]
    rows = an.probe_rows(p["sizes"], pure, [r["restricted"] for r in records[1:]])
    worst = [max(r.worst_plus, r.worst_minus) for r in rows]
    checks = {
        "monotone_decrease": all(b < a for a, b in zip(worst, worst[1:])),
        "final_within_tolerance": worst[-1] <= p["tolerance"],
    }
    return [r.__dict__ for r in rows], {"worst_deviation": worst}, checks


RESTRICTED_PROBE = Kind(
    {"sizes": ("ints", "3 4 5"), "J": ("float", -2.0), "Jp": ("float", -1.0), "samples": ("int", 100),
     "Delta": ("float", 2.0), "tolerance": ("float", 0.01)},
    _probe_tasks, _probe_run, _probe_aggregate, _probe_validate,
)


# ---------------------------------------------------------------- stacked


def _stack_model(q, N, master_seed):
    return st.StackedModel(q["K"] or N, N, master_seed, q["Jp"], q["line_disorder"])


def _stacked_validate(p):
    _require(all(N >= 2 for N in p["sizes"]), "sizes must be >= 2")
    _require(p["samples"] >= 2, "samples (realizations) must be >= 2")


def _census_tasks(p, master_seed):
    payload = {k: p[k] for k in ("K", "Jp", "line_disorder", "deltas")}
    items = [((N, r), {**payload, "N": N, "r": r, "master": master_seed}) for N in p["sizes"] for r in range(p["samples"])]
    return _tasks(items, "stacked-census")


def _census_run(q, seed):
    model = _stack_model(q, q["N"], q["master"])
    return {"N": q["N"], "K": model.K, "counts": st.realization_counts(model, q["r"], q["deltas"])}


def _census_aggregate(p, records):
    rows, checks, report = [], {}, {}
    sizes = p["sizes"]
    for j, delta in enumerate(p["deltas"]):
        means, fracs = [], []
        for N in sizes:
            recs = [r for r in records if r["N"] == N]
            c = np.array([r["counts"][j] for r in recs], dtype=float)
            K = recs[0]["K"]
            ci = 1.96 * c.std(ddof=1) / math.sqrt(len(c))
            rows.append({"N": N, "K": K, "delta": delta, "n_realizations": len(c), "mean_count": float(c.mean()),
                         "ci_count": float(ci), "mean_fraction": float(c.mean() / K), "ci_fraction": float(ci / K)})
            means.append(c.mean())
            fracs.append(c.mean() / K)
        if min(means) <= 0:
            report[f"delta={delta}"] = {"count_exponent": None, "fraction_exponent": None}
            checks[f"count_exponent[{delta}]"] = checks[f"fraction_exponent[{delta}]"] = False
            continue
        cs, fs = fit_powerlaw(zip(sizes, means)).slope, fit_powerlaw(zip(sizes, fracs)).slope
        report[f"delta={delta}"] = {"count_exponent": cs, "fraction_exponent": fs}
        checks[f"count_exponent[{delta}]"] = abs(cs - p["count_exponent"]) <= p["tolerance"]
        checks[f"fraction_exponent[{delta}]"] = abs(fs - p["fraction_exponent"]) <= p["tolerance"]
    return rows, report, checks


STACKED_CENSUS = Kind(
    {"sizes": ("ints", "64 256 1024"), "K": ("int", 0), "Jp": ("float", -1.0), "line_disorder": ("bool", False),
     "deltas": ("floats", "0.1 0.25 0.4"), "samples": ("int", 200),
     "count_exponent": ("float", 0.5), "fraction_exponent": ("float", -0.5), "tolerance": ("float", 0.1)},
    _census_tasks, _census_run, _census_aggregate, _stacked_validate,
)


def _overlap_tasks(p, master_seed):
    payload = {k: p[k] for k in ("K", "Jp", "line_disorder", "delta", "draws", "bins")}
    items = [((N, r), {**payload, "N": N, "r": r, "master": master_seed}) for N in p["sizes"] for r in range(p["samples"])]
    return _tasks(items, "overlap")


def _overlap_run(q, seed):
    model = _stack_model(q, q["N"], q["master"])
    qs = st.realization_overlaps(model, q["r"], q["draws"], q["delta"])
    hist = np.histogram(np.clip(qs, -1, 1), bins=np.linspace(-1.0, 1.0, q["bins"] + 1))[0]
    return {"N": q["N"], "mean_q": float(qs.mean()), "hist": [int(h) for h in hist]}


def _overlap_aggregate(p, records):
    rows, hists = [], {}
    for N in p["sizes"]:
        recs = [r for r in records if r["N"] == N]
        m = np.array([r["mean_q"] for r in recs])
        q = float(m.mean())
        rows.append({"N": N, "mean_q": q, "stderr_q": float(m.std(ddof=1) / math.sqrt(len(m))), "c": math.sqrt(N) * (1.0 - q)})
        hists[str(N)] = [int(x) for x in np.sum([r["hist"] for r in recs], axis=0)]
    cs = np.array([r["c"] for r in rows])
    ok = cs.mean() > 0 and bool(np.all(np.abs(cs / cs.mean() - 1.0) <= p["stability"]))
    return rows, {"c": [float(x) for x in cs], "histograms": hists}, {"c_stable": ok}


OVERLAP = Kind(
    {"sizes": ("ints", "64 256 1024"), "K": ("int", 0), "Jp": ("float", -1.0), "line_disorder": ("bool", False),
     "delta": ("float", gs.DEFAULT_DELTA), "samples": ("int", 200), "draws": ("int", 100), "bins": ("int", 41),
     "stability": ("float", 0.3)},
    _overlap_tasks, _overlap_run, _overlap_aggregate, _stacked_validate,
)


# ---------------------------------------------------------------- gauge-check


def _gauge_validate(p):
    _require(all(1 <= N <= 5 for N in p["sizes"]), "gauge sizes must lie in 1..5 (enumeration)")


def _gauge_tasks(p, master_seed):
    items = [((N, i), {"N": N, "J": p["J"], "Jp": p["Jp"]}) for N in p["sizes"] for i in range(p["samples"])]
    return _tasks(items, "gauge-check")


def _gauge_run(q, seed):
    rng = np.random.default_rng(seed)
    vol = build_volume(2, q["N"])
    eta = sample_boundary(vol, "symmetric_iid", int(rng.integers(1 << 62)))
    tau = st.GaugeField.random(vol, rng)
    return {"N": q["N"], "deviation": st.gauge_check(vol, CouplingSpec(q["J"], q["Jp"]), eta, tau)}


def _gauge_aggregate(p, records):
    rows = [{"N": N, "max_deviation": max(r["deviation"] for r in records if r["N"] == N)} for N in p["sizes"]]
    worst = max(r["max_deviation"] for r in rows)
    return rows, {"max_deviation": worst}, {"deviation_within_tolerance": worst <= p["tolerance"]}


GAUGE_CHECK = Kind(
    {"sizes": ("ints", "3 4"), "J": ("float", -1.0), "Jp": ("float", -1.0), "samples": ("int", 50), "tolerance": ("float", 1e-12)},
    _gauge_tasks, _gauge_run, _gauge_aggregate, _gauge_validate,
)


# ---------------------------------------------------------------- oracle


def random_instance(rng, max_rows, max_cols, shape=None):
    """Random box, couplings and boundary field for solver cross-checks."""
    R, C = shape if shape else (int(rng.integers(1, max_rows + 1)), int(rng.integers(1, max_cols + 1)))
    vol = build_box((R, C))
    c = CouplingSpec(float(rng.uniform(-2.0, -0.2)), float(rng.uniform(-1.5, 1.5)))
    return BondModel.uniform(vol, c, sample_boundary(vol, "symmetric_iid", int(rng.integers(1 << 62))))


def _oracle_validate(p):
    _require(1 <= p["max_rows"] <= p["max_cols"] <= 16, "need 1 <= max_rows <= max_cols <= 16")
    _require(p["max_rows"] * p["max_cols"] <= 40, "boxes beyond 40 sites are out of reach of split enumeration")


def _oracle_tasks(p, master_seed):
    items = []
    for i in range(p["samples"]):
        # the first instance always has the largest shape
        shape = [p["max_rows"], p["max_cols"]] if i == 0 else None
        items.append(((i,), {"max_rows": p["max_rows"], "max_cols": p["max_cols"], "shape": shape}))
    return _tasks(items, "oracle")


def _oracle_run(q, seed):
    model = random_instance(np.random.default_rng(seed), q["max_rows"], q["max_cols"], q["shape"])
    n = model.vol.n_sites
    tm = tm_logz(model)
    out = {"shape": list(model.vol.shape), "J": model.bond_J[0] if len(model.bond_J) else 0.0, "logZ_tm": tm}
    if n <= 25:
        res = enumerate_model(model, canonical_window(model.vol))
        wp, wm = an.free_energy_pair(res).weights if res.Z_plus > 0 and res.Z_minus > 0 else (float(res.Z_plus > 0), float(res.Z_minus > 0))
        mix = wp * res.plus.values + wm * res.minus.values
        out.update(method="enumeration", logZ_exact=res.logZ_full, decomposition_error=float(np.max(np.abs(res.full.values - mix))))
    else:
        out.update(method="split", logZ_exact=split_enumeration_logz(model), decomposition_error=None)
    out["J"] = float(out["J"])
    out["relative_error"] = abs(math.expm1(out["logZ_exact"] - tm))
    return out


def _oracle_aggregate(p, records):
    rows = [{"task": r["task"], "shape": "x".join(map(str, r["shape"])), "method": r["method"], "relative_error": r["relative_error"],
             "decomposition_error": r["decomposition_error"]} for r in records]
    rel = max(r["relative_error"] for r in records)
    dec = [r["decomposition_error"] for r in records if r["decomposition_error"] is not None]
    report = {"max_relative_error": rel, "max_decomposition_error": max(dec, default=0.0), "n_enumeration": len(dec)}
    return rows, report, {"z_agreement": rel <= p["tolerance"], "decomposition": max(dec, default=0.0) <= p["tolerance"]}


ORACLE = Kind(
    {"max_rows": ("int", 3), "max_cols": ("int", 12), "samples": ("int", 50), "tolerance": ("float", 1e-12)},
    _oracle_tasks, _oracle_run, _oracle_aggregate, _oracle_validate,
)


# ---------------------------------------------------------------- mc-validate


def _mc_tasks(p, master_seed):
    return _tasks([((i,), {k: p[k] for k in ("size", "J", "Jp", "sweeps", "rungs", "lowest")}) for i in range(p["samples"])], "mc-validate")


def _mc_run(q, seed):
    vol = build_volume(2, q["size"])
    c = CouplingSpec(q["J"], q["Jp"])
    eta = sample_boundary(vol, "symmetric_iid", derive_seed(seed, ["field"]))
    win = canonical_window(vol)
    exact = tm_window(BondModel.uniform(vol, c, eta), win)
    ladder = default_ladder(q["rungs"], q["lowest"]) if q["rungs"] > 1 else None
    m = run_chain(ChainConfig(vol, c, eta, q["sweeps"], seed=derive_seed(seed, ["chain"]), ladder=ladder), win)
    z = (m.values - exact) / m.stderr
    return {"exact": [float(x) for x in exact], "mc": [float(x) for x in m.values], "stderr": [float(x) for x in m.stderr],
            "z": [float(x) for x in z]}


def _mc_aggregate(p, records):
    rows = [{"task": r["task"], "max_abs_z": max(abs(z) for z in r["z"])} for r in records]
    worst = max(r["max_abs_z"] for r in rows)
    return rows, {"max_abs_z": worst}, {"within_sigma": worst <= p["sigma"]}


MC_VALIDATE = Kind(
    {"size": ("int", 10), "J": ("float", -1.2), "Jp": ("float", -1.0), "samples": ("int", 20), "sweeps": ("int", 100000),
     "rungs": ("int", 8), "lowest": ("float", 0.3), "sigma": ("float", 4.0)},
    _mc_tasks, _mc_run, _mc_aggregate,
    lambda p: _require(2 <= p["size"] <= 16 and p["sweeps"] >= 1000, "need size in 2..16 and sweeps >= 1000"),
)


KINDS = {
    "gs-scaling": GS_SCALING,
    "gs-recurrence": GS_RECURRENCE,
    "metastate": METASTATE,
    "fe-survey": FE_SURVEY,
    "restricted-probe": RESTRICTED_PROBE,
    "stacked-census": STACKED_CENSUS,
    "overlap": OVERLAP,
    "gauge-check": GAUGE_CHECK,
    "oracle": ORACLE,
    "mc-validate": MC_VALIDATE,
}
