"""Parameter sweeps, engine comparison, spectrum tables and CSV/manifest output.

Every table written by this module goes to a CSV file with a fixed column
order and 17 significant digits per float, next to a JSON manifest holding
everything needed to recompute it (`replay`).
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import __version__
from .model import SITES, ModelParams, params_to_config, resolve

log = logging.getLogger(__name__)

ENGINES = ("hierarchy", "oracle", "meanfield")
SWEEPABLE = ("delta", "f", "j", "u")

# Defaults cover the figure ranges; the step sizes are our choice.
DEFAULT_GRIDS = {
    "delta": tuple(np.round(np.arange(-8.0, 8.0 + 1e-9, 0.25), 10)),
    "f": tuple(np.round(np.arange(0.1, 2.0 + 1e-9, 0.1), 10)),
    "j": tuple(np.round(np.arange(0.5, 6.0 + 1e-9, 0.25), 10)),
    "u": tuple(np.round(np.arange(0.0, 1.0 + 1e-9, 0.05), 10)),
}

SWEEP_COLUMNS = ("parameter", "value", "engine", "n_tot", "n_b", "n_b1", "n_b2",
                 "g2_11", "g2_22", "g2_12", "residual", "cutoff",
                 "convergence_delta", "max_level_population", "status", "error")

COMPARE_OBSERVABLES = ("n_tot", "n_b", "n_b1", "n_b2", "g2_11", "g2_22", "g2_12")
COMPARE_COLUMNS = ("observable", "hierarchy", "oracle", "meanfield",
                   "rel_dev_hierarchy", "rel_dev_meanfield", "reliable")

SATURATION_LIMIT = 1e-4


@dataclass(frozen=True)
class EngineSettings:
    """Truncation settings shared by all engines.

    ``convergence`` selects the hierarchy diagnostic: ``"next"`` re-solves at
    ``n_c + 1``, ``"previous"`` at ``n_c - 1`` (cheaper, pessimistic), and
    ``"none"`` skips it. The oracle works in the frame displaced by the
    mean-field amplitude with at most ``n_cap`` displaced photons in total
    (``None`` means ``n_max``).
    """

    n_c: int = 4
    n_max: int = 4
    n_cap: int | None = None
    convergence: str = "next"
    displacement: str = "meanfield"

    def __post_init__(self):
        if self.convergence not in ("next", "previous", "none"):
            raise ValueError(f"unknown convergence mode {self.convergence!r}")
        if self.n_c < 2:
            raise ValueError("n_c must be >= 2 for g2")

    @property
    def total_cap(self) -> int:
        return self.n_max if self.n_cap is None else self.n_cap


@dataclass(frozen=True)
class SweepSpec:
    swept_parameter: str
    grid: tuple[float, ...]
    fixed: ModelParams = field(default_factory=ModelParams)
    engines: tuple[str, ...] = ("hierarchy",)
    output_path: str | None = None

    def __post_init__(self):
        if self.swept_parameter not in SWEEPABLE:
            raise ValueError(f"swept parameter must be one of {SWEEPABLE}")
        grid = tuple(float(x) for x in self.grid)
        if not grid:
            raise ValueError("empty sweep grid")
        steps = np.diff(grid)
        if len(grid) > 1 and not (np.all(steps > 0) or np.all(steps < 0)):
            raise ValueError("sweep grid must be strictly monotone")
        bad = set(self.engines) - set(ENGINES)
        if bad or not self.engines:
            raise ValueError(f"engines must be a non-empty subset of {ENGINES}")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "engines", tuple(self.engines))

    def params_at(self, value: float) -> ModelParams:
        return self.fixed.replace(**{self.swept_parameter: value})


# ---------------------------------------------------------------- engines

def _blank_row() -> dict:
    row = {c: float("nan") for c in SWEEP_COLUMNS}
    row.update(status="ok", error="")
    return row


def _hierarchy_row(params: ModelParams, settings: EngineSettings) -> dict:
    from . import hierarchy
    lattice = resolve(params)
    obs = hierarchy.observables(hierarchy.solve(lattice, settings.n_c))
    row = {k: obs[k] for k in ("n_tot", "n_b", "n_b1", "n_b2", "g2_11", "g2_22", "g2_12",
                                "residual")}
    row["cutoff"] = settings.n_c
    if settings.convergence != "none":
        other = settings.n_c + (1 if settings.convergence == "next" else -1)
        ref = hierarchy.observables(hierarchy.solve(lattice, other))
        row["convergence_delta"] = max(_rel(obs[k], ref[k]) for k in ("n_b", "g2_11", "g2_12"))
    if obs["g2_flag"]:
        row["status"] = "g2_undefined"
    return row


def _oracle_row(params: ModelParams, settings: EngineSettings) -> dict:
    from . import liouville
    state = liouville.oracle_steady_state(resolve(params), settings.n_max,
                                          settings.total_cap, settings.displacement)
    obs = liouville.observables(state)
    row = {k: obs[k] for k in ("n_tot", "n_b", "n_b1", "n_b2", "g2_11", "g2_22", "g2_12",
                                "residual", "max_level_population")}
    row["cutoff"] = settings.n_max
    if obs["max_level_population"] > SATURATION_LIMIT:
        row["status"] = "cutoff_saturated"
    elif obs["g2_flag"]:
        row["status"] = "g2_undefined"
    return row


def _meanfield_row(params: ModelParams, settings: EngineSettings) -> dict:
    from . import meanfield
    cf = meanfield.gp_steady_state(resolve(params))
    dens = cf.densities
    row = {"n_tot": float(dens.sum()), "n_b": cf.n_b,
           "n_b1": float(dens[1]), "n_b2": float(dens[4]),
           "g2_11": 1.0, "g2_22": 1.0, "g2_12": 1.0, "residual": float(cf.residual)}
    if not cf.converged:
        row["status"] = "not_converged"
    elif cf.bistable:
        row["status"] = "bistable"
    return row


_ENGINE_FUNCS = {"hierarchy": _hierarchy_row, "oracle": _oracle_row,
                 "meanfield": _meanfield_row}


def engine_row(engine: str, params: ModelParams, settings: EngineSettings) -> dict:
    """Observables of one engine at one parameter point.

    Exceptions are caught and reported in the ``status``/``error`` columns.
    """
    row = _blank_row()
    row["engine"] = engine
    try:
        row.update(_ENGINE_FUNCS[engine](params, settings))
    except Exception as exc:  # recorded in-row, the sweep goes on
        log.warning("%s failed at %s: %s", engine, params, exc)
        row["status"] = "failed"
        row["error"] = f"{type(exc).__name__}: {exc}"
    return row


def _rel(a: float, b: float) -> float:
    if b == 0:
        return 0.0 if a == 0 else float("inf")
    return abs(a - b) / abs(b)


def _sweep_job(args):
    spec, settings, value, engine = args
    row = engine_row(engine, spec.params_at(value), settings)
    row["parameter"] = spec.swept_parameter
    row["value"] = value
    return row


def run_sweep(spec: SweepSpec, settings: EngineSettings = EngineSettings(),
              threads: int = 1) -> list[dict]:
    """One row per grid point and engine, in grid order."""
    jobs = [(spec, settings, v, e) for v in spec.grid for e in spec.engines]
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(_sweep_job, jobs))
    else:
        rows = [_sweep_job(j) for j in jobs]
    return rows


def column(rows: Sequence[dict], name: str, engine: str | None = None) -> np.ndarray:
    """Column ``name`` of sweep rows, optionally restricted to one engine."""
    return np.array([r[name] for r in rows if engine is None or r["engine"] == engine],
                    dtype=float)


def local_maxima(x: Sequence[float], y: Sequence[float]) -> list[float]:
    """Abscissae of strict interior local maxima of ``y(x)``."""
    y = np.asarray(y, dtype=float)
    idx = np.flatnonzero((y[1:-1] > y[:-2]) & (y[1:-1] > y[2:])) + 1
    return [float(x[i]) for i in idx]


ORACLE_COLUMNS = ("delta", "n_tot", "n_b", "g2_local", "g2_nonlocal",
                  "max_level_population", "residual", "status", "error")
HIERARCHY_COLUMNS = ("delta", "u", "j", "f", "n_tot", "n_b1", "n_b2", "g2_11", "g2_22",
                     "g2_12", "nc", "convergence_delta", "residual", "status", "error")
MEANFIELD_COLUMNS = ("delta",) + tuple(f"n_{s}" for s in SITES) + (
    "n_b", "residual", "branch_flag")


def engine_table(engine: str, params: ModelParams, deltas: Sequence[float],
                 settings: EngineSettings = EngineSettings(), threads: int = 1) -> list[dict]:
    """Per-engine detuning table with that engine's own column set.

    The mean-field table is a continuation sweep; the other two engines
    solve every detuning independently.
    """
    deltas = tuple(float(d) for d in deltas)
    if engine == "meanfield":
        from . import meanfield
        return meanfield.gp_density_sweep(params, deltas)
    spec = SweepSpec("delta", deltas, params, (engine,))
    rows = run_sweep(spec, settings, threads)
    out = []
    for r in rows:
        row = dict(r, delta=r["value"])
        if engine == "oracle":
            row.update(g2_local=r["g2_11"], g2_nonlocal=r["g2_12"])
        elif engine == "hierarchy":
            row.update(u=params.u, j=params.j, f=params.f.real, nc=settings.n_c)
        out.append(row)
    return out


# ---------------------------------------------------------------- compare

def compare(params: ModelParams, settings: EngineSettings = EngineSettings()) -> dict:
    """Hierarchy, oracle and mean-field side by side.

    Relative deviations are taken with respect to the oracle. The report is
    marked unreliable when the oracle's top-level population exceeds
    ``SATURATION_LIMIT`` or any engine failed.
    """
    rows = {e: engine_row(e, params, settings) for e in ENGINES}
    oracle = rows["oracle"]
    reliable = (oracle["status"] == "ok"
                and oracle["max_level_population"] <= SATURATION_LIMIT
                and rows["hierarchy"]["status"] == "ok")
    table = []
    for name in COMPARE_OBSERVABLES:
        ref = oracle[name]
        table.append({
            "observable": name,
            "hierarchy": rows["hierarchy"][name],
            "oracle": ref,
            "meanfield": rows["meanfield"][name],
            "rel_dev_hierarchy": _rel(rows["hierarchy"][name], ref),
            "rel_dev_meanfield": _rel(rows["meanfield"][name], ref),
            "reliable": int(reliable),
        })
    return {"rows": table, "engines": rows, "reliable": reliable}


# ---------------------------------------------------------------- spectra

SINGLE_COLUMNS = ("index", "energy", "k_label") + tuple(
    f"amp_{site}_{part}" for site in SITES for part in ("re", "im"))
TWO_PHOTON_COLUMNS = ("index", "energy_minus_2wc", "overlap_psi1", "overlap_psi2",
                      "darksite_weight")
CLUSTER_COLUMNS = ("u", "level", "energy_minus_2wc")
CLUSTER_U_GRID = (0.02, 0.05, 0.1, 0.2)


def spectrum_tables(params: ModelParams, u_grid: Iterable[float] = CLUSTER_U_GRID) -> dict:
    """Single-particle, two-photon and resonant-cluster tables.

    Single-particle energies are lab-frame values (``omega_c`` from
    ``params``); two-photon energies are measured from ``2 omega_c``.
    """
    from . import fock, singleparticle
    sp_spec = singleparticle.diagonalize(resolve(params.replace(delta=0.0)), frame="lab")
    single = []
    for i, e in enumerate(sp_spec.energies):
        row = {"index": i, "energy": float(e), "k_label": sp_spec.k_labels[i]}
        for site, amp in zip(SITES, sp_spec.eigenvectors[:, i]):
            row[f"amp_{site}_re"] = float(amp.real)
            row[f"amp_{site}_im"] = float(amp.imag)
        single.append(row)
    two = fock.two_photon_rows(fock.two_photon_spectrum(params))
    u_grid = tuple(float(u) for u in u_grid)
    cluster = fock.resonant_cluster(u_grid, j=params.j)
    crow = [{"u": u, "level": k, "energy_minus_2wc": float(e)}
            for u, levels in zip(u_grid, cluster) for k, e in enumerate(levels)]
    return {"single_particle": single, "two_photon": two, "resonant_cluster": crow}


# ---------------------------------------------------------------- disorder

DISORDER_COLUMNS = ("w", "observable", "mean", "std", "stderr", "n_ok", "n_failed", "valid")
SPOT_COLUMNS = ("w", "index", "observable", "hierarchy", "oracle", "rel_dev", "status")


def disorder_scan(params: ModelParams, kind: str, n_realizations: int = 200,
                  w_grid: Sequence[float] = (0.0, 0.25, 0.5, 0.75, 1.0),
                  master_seed: int = 0, settings: EngineSettings = EngineSettings(),
                  threads: int = 1, spot_checks: int = 0) -> dict:
    """Ensemble statistics of the hierarchy observables versus disorder strength.

    ``spot_checks`` realizations per W are re-solved with the oracle.
    """
    from . import ensemble
    config = ensemble.EnsembleConfig(n_realizations, tuple(w_grid), kind, master_seed)
    stats = ensemble.run_ensemble(config, ensemble.hierarchy_solver(params, settings.n_c),
                                  workers=threads)
    out = {"stats": stats, "rows": stats.rows(), "spot": []}
    if spot_checks:
        out["spot"] = ensemble.oracle_spot_check(
            config, params, n_per_w=spot_checks, n_c=settings.n_c,
            n_max=settings.n_max, n_cap=settings.total_cap)
    return out


# ---------------------------------------------------------------- output

def format_value(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        return format(v, ".17g")
    return str(v)


def rows_to_csv(rows: Sequence[dict], columns: Sequence[str]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([format_value(r.get(c, "")) for c in columns])
    return buf.getvalue()


def write_csv(path, rows: Sequence[dict], columns: Sequence[str]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(rows_to_csv(rows, columns))
    return path


def read_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


@dataclass
class RunManifest:
    command: str
    argv: list[str]
    config: dict
    settings: dict
    seeds: dict
    outputs: list[str]
    version: str = __version__
    started: str = ""
    finished: str = ""
    python: str = field(default_factory=lambda: sys.version.split()[0])
    numpy: str = field(default_factory=lambda: np.__version__)

    def write(self, path) -> Path:
        path = Path(path)
        path.write_text(json.dumps(asdict(self), indent=2, sort_keys=True) + "\n")
        return path

    @classmethod
    def read(cls, path) -> "RunManifest":
        return cls(**json.loads(Path(path).read_text()))


def make_manifest(command: str, argv: Sequence[str], params: ModelParams,
                  settings: EngineSettings, seeds: dict, outputs: Sequence[Path],
                  started: float, **config_extra) -> RunManifest:
    stamp = lambda t: time.strftime("%Y-%m-%dT%H:%M:%S%z", time.localtime(t))  # noqa: E731
    return RunManifest(command=command, argv=list(argv),
                       config=params_to_config(params, **config_extra),
                       settings=asdict(settings), seeds=dict(seeds),
                       outputs=[Path(p).name for p in outputs],
                       started=stamp(started), finished=stamp(time.time()))


def replay(manifest_path, out_dir) -> list[Path]:
    """Re-run the command recorded in a manifest, writing into ``out_dir``."""
    from .cli import main
    manifest = RunManifest.read(manifest_path)
    argv = _replace_out(manifest.argv, str(out_dir))
    code = main(argv)
    if code != 0:
        raise RuntimeError(f"replay exited with status {code}")
    return [Path(out_dir) / name for name in manifest.outputs]


def _replace_out(argv: Sequence[str], out_dir: str) -> list[str]:
    argv = list(argv)
    if "--out" in argv:
        argv[argv.index("--out") + 1] = out_dir
    else:
        argv = ["--out", out_dir] + argv
    return argv
