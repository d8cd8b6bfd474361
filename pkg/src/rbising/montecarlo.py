"""Heat-bath Monte Carlo for boxes beyond the exact solvers.

Sites are updated in row-major order. Uniform variates are drawn in blocks
from a numpy Generator and handed to the compiled kernels, so a (config, seed)
pair fixes the whole trajectory bit for bit.

Replica exchange runs copies of the system with every coupling scaled by a
ladder multiplier; rung 0 (multiplier 1) is the target and the hotter rungs
below it help the chain cross between the plus and minus phases.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .exact.enumeration import Window, WindowMarginal, canonical_window, model_energies
from .lattice import BondModel, BoundaryCondition, CouplingSpec, LatticeVolume, SpinConfig

DEFAULT_BATCHES = 32
_CHUNK = 512


@njit(cache=True)
def _sweep_batch(spins, nbr, cpl, field, scale, u):
    """One ordered heat-bath sweep of each row of ``spins``; row r uses couplings * scale[r]."""
    R, n = spins.shape
    for r in range(R):
        lam = scale[r]
        for i in range(n):
            local = field[i]
            for q in range(nbr.shape[1]):
                j = nbr[i, q]
                if j >= 0:
                    local += cpl[i, q] * spins[r, j]
            # P(+1) = exp(-lam*local) / (exp(-lam*local) + exp(lam*local))
            p_plus = 1.0 / (1.0 + np.exp(2.0 * lam * local))
            spins[r, i] = 1 if u[r, i] < p_plus else -1


@njit(cache=True)
def _energies(spins, nbr, cpl, field, out):
    R, n = spins.shape
    for r in range(R):
        e = 0.0
        for i in range(n):
            local = 0.0
            for q in range(nbr.shape[1]):
                j = nbr[i, q]
                if j >= 0:
                    local += cpl[i, q] * spins[r, j]
            e += spins[r, i] * (0.5 * local + field[i])
        out[r] = e


@njit(cache=True)
def _chain_chunk(spins, nbr, cpl, field, ladder, u, us, parity0, obs_sites, obs_pairs, record, out, energy, swaps):
    """Run len(u) sweeps (+ exchange attempts) and record window observables of rung 0."""
    L = spins.shape[0]
    n_site = obs_sites.shape[0]
    row = 0
    for t in range(u.shape[0]):
        _sweep_batch(spins, nbr, cpl, field, ladder, u[t])
        if L > 1:
            _energies(spins, nbr, cpl, field, energy)
            start = (parity0 + t) & 1
            for a in range(start, L - 1, 2):
                b = a + 1
                x = (ladder[a] - ladder[b]) * (energy[a] - energy[b])
                swaps[a, 0] += 1
                if x >= 0.0 or us[t, a] < np.exp(x):
                    swaps[a, 1] += 1
                    for i in range(spins.shape[1]):
                        tmp = spins[a, i]
                        spins[a, i] = spins[b, i]
                        spins[b, i] = tmp
                    tmp_e = energy[a]
                    energy[a] = energy[b]
                    energy[b] = tmp_e
        if record[t]:
            for o in range(n_site):
                out[row, o] = spins[0, obs_sites[o]]
            for o in range(obs_pairs.shape[0]):
                out[row, n_site + o] = spins[0, obs_pairs[o, 0]] * spins[0, obs_pairs[o, 1]]
            row += 1


def _model_of(vol, c, eta):
    return BondModel.uniform(vol, c, eta)


def heatbath_sweep(sigma, vol: LatticeVolume, c: CouplingSpec, eta: BoundaryCondition, rng: np.random.Generator, scale=1.0):
    """One ordered heat-bath sweep; ``sigma`` is one configuration or a (replicas, sites) batch.

    Returns the updated configuration(s) as a new int8 array.
    """
    model = _model_of(vol, c, eta)
    nbr, cpl = model.neighbor_table()
    s = np.asarray(sigma.values if isinstance(sigma, SpinConfig) else sigma, dtype=np.int8)
    batch = np.atleast_2d(s).copy()
    if batch.shape[1] != vol.n_sites:
        raise ValueError("configuration does not match volume")
    u = rng.random(batch.shape)
    lam = np.broadcast_to(np.asarray(scale, dtype=float), (batch.shape[0],)).copy()
    _sweep_batch(batch, nbr, cpl, model.field, lam, u)
    return batch if s.ndim == 2 else batch[0]


@dataclass(frozen=True, eq=False)
class ChainConfig:
    vol: LatticeVolume
    couplings: CouplingSpec
    eta: BoundaryCondition
    sweeps_total: int
    sweeps_burnin: int | None = None
    thinning: int = 1
    seed: int = 0
    ladder: tuple | None = None
    n_batches: int = DEFAULT_BATCHES
    init: str = "random"
    model: BondModel | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.sweeps_burnin is None:
            object.__setattr__(self, "sweeps_burnin", self.sweeps_total // 5)
        if not 0 <= self.sweeps_burnin < self.sweeps_total:
            raise ValueError("need 0 <= sweeps_burnin < sweeps_total")
        if self.thinning < 1:
            raise ValueError("thinning must be >= 1")
        if self.ladder is not None:
            lad = np.asarray(self.ladder, dtype=float)
            if lad[0] != 1.0 or np.any(np.diff(lad) >= 0) or lad[-1] <= 0:
                raise ValueError("ladder must start at 1 and decrease strictly, staying positive")
        if self.init not in ("random", "plus", "minus"):
            raise ValueError(f"unknown init {self.init!r}")
        if (self.sweeps_total - self.sweeps_burnin) // self.thinning < self.n_batches:
            raise ValueError("too few recorded samples for the batch count")

    def bond_model(self) -> BondModel:
        return self.model if self.model is not None else _model_of(self.vol, self.couplings, self.eta)

    def digest(self) -> str:
        m = self.bond_model()
        h = hashlib.blake2b(digest_size=8)
        for arr in (np.asarray(self.vol.shape), m.bonds, m.bond_J, m.field):
            h.update(np.ascontiguousarray(arr).tobytes())
        params = [self.sweeps_total, self.sweeps_burnin, self.thinning, int(self.seed), self.ladder, self.n_batches, self.init]
        h.update(json.dumps(params).encode())
        return h.hexdigest()


@dataclass(frozen=True)
class ChainResult:
    marginal: WindowMarginal
    n_samples: int
    n_effective: np.ndarray
    swap_rates: np.ndarray
    samples: np.ndarray = field(repr=False)


def batch_means(samples: np.ndarray, n_batches: int = DEFAULT_BATCHES):
    """Mean, batch-means standard error and effective sample size per column.

    Columns are +-1 observables. The error is floored at the independent-draw
    binomial error with half a count added on each side, so a run that never
    sees the rare value still reports a nonzero error.
    """
    x = np.asarray(samples, dtype=float)
    m = (len(x) // n_batches) * n_batches
    means = x[:m].reshape(n_batches, -1, x.shape[1]).mean(axis=1)
    se = means.std(axis=0, ddof=1) / np.sqrt(n_batches)
    k = (x.mean(axis=0) + 1.0) / 2.0 * len(x)
    p = (k + 1.0) / (len(x) + 2.0)
    se = np.maximum(se, 2.0 * np.sqrt(p * (1.0 - p) / len(x)))
    var = x.var(axis=0, ddof=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        n_eff = np.where(se > 0, var / se**2, float(len(x)))
    return x.mean(axis=0), se, np.minimum(n_eff, len(x))


def run_chain_detailed(cfg: ChainConfig, window: Window | None = None) -> ChainResult:
    model = cfg.bond_model()
    window = canonical_window(cfg.vol) if window is None else window
    nbr, cpl = model.neighbor_table()
    rng = np.random.default_rng(cfg.seed)
    ladder = np.asarray(cfg.ladder if cfg.ladder else (1.0,), dtype=float)
    L, n = len(ladder), cfg.vol.n_sites
    if cfg.init == "random":
        spins = np.where(rng.random((L, n)) < 0.5, 1, -1).astype(np.int8)
    else:
        spins = np.full((L, n), 1 if cfg.init == "plus" else -1, dtype=np.int8)
    obs_sites = np.asarray(window.sites, dtype=np.int64)
    obs_pairs = np.asarray(window.pairs, dtype=np.int64).reshape(-1, 2)
    t_all = np.arange(cfg.sweeps_total)
    rec_all = (t_all >= cfg.sweeps_burnin) & ((t_all - cfg.sweeps_burnin) % cfg.thinning == 0)
    out = np.empty((int(rec_all.sum()), window.size), dtype=np.int8)
    energy = np.zeros(L)
    swaps = np.zeros((max(L - 1, 1), 2), dtype=np.int64)
    pos = 0
    for start in range(0, cfg.sweeps_total, _CHUNK):
        m = min(_CHUNK, cfg.sweeps_total - start)
        u = rng.random((m, L, n))
        us = rng.random((m, max(L - 1, 1)))
        rec = rec_all[start:start + m]
        k = int(rec.sum())
        _chain_chunk(spins, nbr, cpl, model.field, ladder, u, us, start & 1, obs_sites, obs_pairs, rec, out[pos:pos + k], energy, swaps)
        pos += k
    mean, se, n_eff = batch_means(out, cfg.n_batches)
    with np.errstate(invalid="ignore"):
        rates = swaps[:, 1] / np.maximum(swaps[:, 0], 1) if L > 1 else np.zeros(0)
    return ChainResult(WindowMarginal(window, mean, se), len(out), n_eff, rates, out)


def run_chain(cfg: ChainConfig, window: Window | None = None) -> WindowMarginal:
    """Window expectations with batch-means standard errors."""
    return run_chain_detailed(cfg, window).marginal


def summary_records(cfg: ChainConfig, result: ChainResult):
    """JSONL-ready rows, one per window observable."""
    digest = cfg.digest()
    m = result.marginal
    return [
        {
            "config_digest": digest,
            "observable": name,
            "mean": float(m.values[k]),
            "stderr": float(m.stderr[k]),
            "n_effective": float(result.n_effective[k]),
        }
        for k, name in enumerate(m.window.names())
    ]


def exact_samples(model: BondModel, n: int, rng: np.random.Generator) -> np.ndarray:
    """Independent draws from the exact Gibbs measure of a tiny box (rows of +-1)."""
    E = model_energies(model)
    p = np.exp(-(E - E.min()))
    idx = rng.choice(len(E), size=n, p=p / p.sum())
    nsites = model.vol.n_sites
    return (((idx[:, None] >> np.arange(nsites)) & 1) * 2 - 1).astype(np.int8)


def default_ladder(n_rungs: int = 8, lowest: float = 0.3):
    """Geometric multipliers from 1 down to ``lowest``."""
    return tuple(float(x) for x in np.geomspace(1.0, lowest, n_rungs))
