"""Disorder ensembles: seeded realizations and per-W statistics."""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .model import EDGES, SITES, DisorderRealization, ModelParams, resolve

log = logging.getLogger(__name__)

KINDS = {"frequency": 0, "hopping": 1}
KIND_ALIASES = {"freq": "frequency", "hop": "hopping"}
OBSERVABLES = ("g2_11", "g2_22", "g2_12", "n_b1", "n_b2")
MAX_FAILURE_FRACTION = 0.05


def _kind(kind: str) -> str:
    kind = KIND_ALIASES.get(kind, kind)
    if kind not in KINDS:
        raise ValueError(f"disorder kind must be one of {sorted(KINDS)}, got {kind!r}")
    return kind


@dataclass(frozen=True)
class EnsembleConfig:
    n_realizations: int = 200
    w_grid: tuple[float, ...] = (0.0, 0.25, 0.5, 0.75, 1.0)
    kind: str = "frequency"
    master_seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "kind", _kind(self.kind))
        object.__setattr__(self, "w_grid", tuple(float(w) for w in self.w_grid))
        if self.n_realizations < 1:
            raise ValueError("n_realizations must be >= 1")
        if any(w < 0 for w in self.w_grid):
            raise ValueError("disorder strengths must be non-negative")


def sample_realization(config: EnsembleConfig, w_index: int,
                       index: int) -> DisorderRealization:
    """Realization ``index`` at grid point ``w_index``.

    The random stream is keyed by ``(master_seed, kind, w_index, index)``
    only, so results do not depend on execution order.
    """
    if not 0 <= index < config.n_realizations:
        raise IndexError(f"realization {index} out of range")
    w = config.w_grid[w_index]
    seq = np.random.SeedSequence(config.master_seed,
                                 spawn_key=(KINDS[config.kind], w_index, index))
    xi = np.random.default_rng(seq).uniform(-0.5, 0.5, size=6)
    if config.kind == "frequency":
        return DisorderRealization(site_shifts=dict(zip(SITES, xi.tolist())),
                                   w_freq=w, seed=config.master_seed)
    return DisorderRealization(edge_shifts=dict(zip(EDGES, xi.tolist())),
                               w_hop=w, seed=config.master_seed)


@dataclass
class ObservableStats:
    mean: float
    std: float
    stderr: float
    count: int


@dataclass
class EnsembleStats:
    """Per (W, observable) statistics plus failure bookkeeping."""

    w_grid: tuple[float, ...]
    stats: dict = field(default_factory=dict)      # (w, name) -> ObservableStats
    failures: dict = field(default_factory=dict)   # w -> number failed
    invalid: set = field(default_factory=set)      # w values with too many failures
    samples: dict = field(default_factory=dict)    # (w, name) -> list of values

    def mean(self, w: float, name: str) -> float:
        return self.stats[(w, name)].mean

    def rows(self) -> list[dict]:
        out = []
        for w in self.w_grid:
            for name in OBSERVABLES:
                st = self.stats.get((w, name))
                if st is None:
                    continue
                out.append({"w": w, "observable": name, "mean": st.mean,
                            "std": st.std, "stderr": st.stderr, "n_ok": st.count,
                            "n_failed": self.failures.get(w, 0),
                            "valid": int(w not in self.invalid)})
        return out


def summarize(values: Sequence[float]) -> ObservableStats:
    """Mean, sample standard deviation and standard error with exact summation."""
    n = len(values)
    if n == 0:
        return ObservableStats(float("nan"), float("nan"), float("nan"), 0)
    if min(values) == max(values):
        return ObservableStats(float(values[0]), 0.0, 0.0, n)
    mean = math.fsum(values) / n
    if n > 1:
        var = math.fsum((x - mean) ** 2 for x in values) / (n - 1)
    else:
        var = 0.0
    std = math.sqrt(var)
    return ObservableStats(mean, std, std / math.sqrt(n), n)


def hierarchy_solver(params: ModelParams, n_c: int = 4) -> Callable:
    """Per-realization solver returning hierarchy observables."""
    return _HierarchySolver(params, n_c)


class _HierarchySolver:
    # a class rather than a closure so it pickles for process pools
    def __init__(self, params, n_c):
        self.params = params
        self.n_c = n_c

    def __call__(self, realization: DisorderRealization) -> dict:
        from . import hierarchy
        lattice = resolve(self.params, realization)
        return hierarchy.observables(hierarchy.solve(lattice, self.n_c))


def _run_one(args):
    solver, config, w_index, index = args
    realization = sample_realization(config, w_index, index)
    try:
        obs = solver(realization)
        values = {k: float(obs[k]) for k in OBSERVABLES}
        if not all(math.isfinite(v) for v in values.values()):
            return w_index, index, None
        return w_index, index, values
    except Exception as exc:  # failures are counted, never retried
        log.warning("realization (%d, %d) failed: %s", w_index, index, exc)
        return w_index, index, None


def run_ensemble(config: EnsembleConfig, solver: Callable[[DisorderRealization], dict],
                 workers: int = 1, keep_samples: bool = False) -> EnsembleStats:
    """Solve every realization of every W and collect statistics.

    Failed realizations are excluded; a W point with more than 5 % failures
    is marked invalid.
    """
    jobs = [(solver, config, wi, i) for wi in range(len(config.w_grid))
            for i in range(config.n_realizations)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_one, jobs, chunksize=8))
    else:
        results = [_run_one(job) for job in jobs]
    results.sort(key=lambda r: (r[0], r[1]))

    out = EnsembleStats(config.w_grid)
    for wi, w in enumerate(config.w_grid):
        ok = [r[2] for r in results if r[0] == wi and r[2] is not None]
        failed = sum(1 for r in results if r[0] == wi and r[2] is None)
        out.failures[w] = failed
        if failed > MAX_FAILURE_FRACTION * config.n_realizations:
            out.invalid.add(w)
        for name in OBSERVABLES:
            vals = [r[name] for r in ok]
            out.stats[(w, name)] = summarize(vals)
            if keep_samples:
                out.samples[(w, name)] = vals
    return out


def oracle_spot_check(config: EnsembleConfig, params: ModelParams, n_per_w: int = 5,
                      n_c: int = 4, n_max: int = 4, n_cap: int | None = None) -> list[dict]:
    """Re-solve the first ``n_per_w`` realizations of every W with the oracle.

    Returns one row per (W, realization, observable) with both values and
    their relative deviation; a failed solve is reported in ``status``.
    """
    from . import hierarchy, liouville
    rows = []
    for wi, w in enumerate(config.w_grid):
        for index in range(min(n_per_w, config.n_realizations)):
            lattice = resolve(params, sample_realization(config, wi, index))
            try:
                h = hierarchy.observables(hierarchy.solve(lattice, n_c))
                o = liouville.observables(liouville.oracle_steady_state(
                    lattice, n_max, n_max if n_cap is None else n_cap))
                status = "ok" if o["max_level_population"] <= 1e-4 else "cutoff_saturated"
            except Exception as exc:
                log.warning("spot check (%d, %d) failed: %s", wi, index, exc)
                h = o = {k: float("nan") for k in OBSERVABLES}
                status = "failed"
            for name in OBSERVABLES:
                ref = float(o[name])
                rows.append({"w": w, "index": index, "observable": name,
                             "hierarchy": float(h[name]), "oracle": ref,
                             "rel_dev": abs(float(h[name]) - ref) / abs(ref) if ref else float("nan"),
                             "status": status})
    return rows
