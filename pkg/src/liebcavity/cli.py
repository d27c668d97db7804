"""Command line entry point.

Every subcommand writes CSV tables into ``--out`` and a ``.manifest.json``
next to each table. Failures print a one-line JSON object on stderr and
return a nonzero status.

Examples
--------
::

    python -m liebcavity sweep --param u --range 0 1 0.05 --engines hierarchy,meanfield
    python -m liebcavity compare --nc 5 --nmax 5
    python -m liebcavity spectrum --two-photon
    python -m liebcavity disorder-scan --kind freq --threads 8
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path
from typing import Sequence

import numpy as np

from . import sweeps
from .model import ModelError, ModelParams, load_config

log = logging.getLogger("liebcavity")

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2


class UsageError(ValueError):
    pass


def _common(parser: argparse.ArgumentParser) -> None:
    g = parser.add_argument_group("global options")
    d = argparse.SUPPRESS  # so flags work before and after the subcommand
    g.add_argument("--config", default=d, help="JSON configuration file")
    g.add_argument("--out", default=d, help="output directory (default: .)")
    g.add_argument("--seed", type=int, default=d, help="master seed for disorder")
    g.add_argument("--nc", type=int, default=d, help="hierarchy cutoff N_c (default 4)")
    g.add_argument("--nmax", type=int, default=d, help="oracle photons per site (default 4)")
    g.add_argument("--ncap", type=int, default=d,
                   help="oracle cap on total displaced photons (default: nmax)")
    g.add_argument("--threads", type=int, default=d, help="worker processes")
    g.add_argument("--convergence", choices=("next", "previous", "none"), default=d,
                   help="hierarchy convergence check (default next)")
    for name in ("delta", "u", "j", "f", "gamma"):
        g.add_argument(f"--{name}", type=float, default=d,
                       help=f"override {name} (units of gamma)")
    g.add_argument("-v", "--verbose", action="store_true", default=d)


GLOBAL_DEFAULTS = {"config": None, "out": ".", "seed": None, "nc": 4, "nmax": 4,
                   "ncap": None, "threads": 1, "convergence": "next", "delta": None,
                   "u": None, "j": None, "f": None, "gamma": None, "verbose": False}


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="liebcavity", description=__doc__.splitlines()[0])
    _common(parser)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sweep", help="sweep one parameter with one or more engines")
    _common(p)
    p.add_argument("--param", required=True, choices=sweeps.SWEEPABLE)
    p.add_argument("--grid", type=_floats, help="comma separated values")
    p.add_argument("--range", nargs=3, type=float, metavar=("START", "STOP", "STEP"),
                   help="inclusive arithmetic grid")
    p.add_argument("--engines", default="hierarchy,meanfield",
                   help="comma separated subset of hierarchy,oracle,meanfield")

    p = sub.add_parser("compare", help="hierarchy vs oracle vs mean field at one point")
    _common(p)

    p = sub.add_parser("spectrum", help="single-particle and two-photon spectra")
    _common(p)
    p.add_argument("--single-particle", action="store_true")
    p.add_argument("--two-photon", action="store_true")
    p.add_argument("--u-grid", type=_floats, default=list(sweeps.CLUSTER_U_GRID),
                   help="U values for the resonant cluster table")

    p = sub.add_parser("disorder-scan", help="ensemble statistics versus disorder")
    _common(p)
    p.add_argument("--kind", required=True, choices=("freq", "hop"))
    p.add_argument("--w-grid", type=_floats, default=[0.0, 0.25, 0.5, 0.75, 1.0])
    p.add_argument("--realizations", type=int, default=None,
                   help="realizations per W (default: config or 200)")
    p.add_argument("--spot-checks", type=int, default=5,
                   help="oracle re-solves per W (0 disables)")

    for name in ("oracle", "meanfield", "hierarchy"):
        p = sub.add_parser(name, help=f"{name} table over detuning (default: configured point)")
        _common(p)
        p.add_argument("--grid", type=_floats, help="comma separated detunings")
        p.add_argument("--range", nargs=3, type=float, metavar=("START", "STOP", "STEP"),
                       help="inclusive detuning grid")
    return parser


def _resolve_args(ns: argparse.Namespace) -> argparse.Namespace:
    for k, v in GLOBAL_DEFAULTS.items():
        if not hasattr(ns, k):
            setattr(ns, k, v)
    return ns


def _load(ns) -> tuple[ModelParams, dict]:
    cfg = load_config(ns.config) if ns.config else load_config({})
    params = cfg["params"]
    overrides = {k: getattr(ns, k) for k in ("delta", "u", "j", "f", "gamma")
                 if getattr(ns, k) is not None}
    if overrides:
        params = params.replace(**overrides)
    if ns.seed is not None:
        cfg["seed"] = ns.seed
    return params, cfg


def _settings(ns) -> sweeps.EngineSettings:
    return sweeps.EngineSettings(n_c=ns.nc, n_max=ns.nmax, n_cap=ns.ncap,
                                 convergence=ns.convergence)


def _grid(ns, default=None) -> tuple[float, ...]:
    if ns.grid and ns.range:
        raise UsageError("give either --grid or --range")
    if ns.grid:
        return tuple(ns.grid)
    if ns.range:
        start, stop, step = ns.range
        if step == 0:
            raise UsageError("--range step must be nonzero")
        n = int(np.floor((stop - start) / step + 1e-9)) + 1
        if n < 1:
            raise UsageError("--range is empty")
        return tuple(float(x) for x in np.round(start + step * np.arange(n), 12))
    return default if default is not None else sweeps.DEFAULT_GRIDS[ns.param]


def run(ns: argparse.Namespace, argv: Sequence[str]) -> list[Path]:
    started = time.time()
    out = Path(ns.out)
    params, cfg = _load(ns)
    settings = _settings(ns)
    seeds = {"master_seed": cfg["seed"]}
    written: list[tuple[Path, dict]] = []

    def emit(name, rows, columns, **extra):
        written.append((sweeps.write_csv(out / name, rows, columns), extra))

    if ns.command == "sweep":
        engines = tuple(e.strip() for e in ns.engines.split(",") if e.strip())
        spec = sweeps.SweepSpec(ns.param, _grid(ns), params, engines)
        rows = sweeps.run_sweep(spec, settings, threads=ns.threads)
        emit(f"sweep_{ns.param}.csv", rows, sweeps.SWEEP_COLUMNS,
             grid=list(spec.grid), engines=list(engines))
    elif ns.command == "compare":
        report = sweeps.compare(params, settings)
        emit("compare.csv", report["rows"], sweeps.COMPARE_COLUMNS)
        if not report["reliable"]:
            log.warning("comparison unreliable: oracle cutoff saturated or engine failure")
    elif ns.command == "spectrum":
        both = not (ns.single_particle or ns.two_photon)
        tables = sweeps.spectrum_tables(params, ns.u_grid)
        if ns.single_particle or both:
            emit("spectrum_single_particle.csv", tables["single_particle"],
                 sweeps.SINGLE_COLUMNS)
        if ns.two_photon or both:
            emit("spectrum_two_photon.csv", tables["two_photon"], sweeps.TWO_PHOTON_COLUMNS)
            emit("spectrum_resonant_cluster.csv", tables["resonant_cluster"],
                 sweeps.CLUSTER_COLUMNS, u_grid=list(ns.u_grid))
    elif ns.command == "disorder-scan":
        n_real = ns.realizations if ns.realizations is not None else cfg["n_realizations"]
        result = sweeps.disorder_scan(params, ns.kind, n_real, ns.w_grid, cfg["seed"],
                                      settings, threads=ns.threads,
                                      spot_checks=ns.spot_checks)
        kind = {"freq": "frequency", "hop": "hopping"}[ns.kind]
        emit(f"disorder_{kind}.csv", result["rows"], sweeps.DISORDER_COLUMNS,
             kind=kind, w_grid=list(ns.w_grid), n_realizations=n_real)
        if result["spot"]:
            emit(f"disorder_{kind}_spotcheck.csv", result["spot"], sweeps.SPOT_COLUMNS)
    elif ns.command in sweeps.ENGINES:
        deltas = _grid(ns, default=(params.delta,))
        rows = sweeps.engine_table(ns.command, params, deltas, settings, ns.threads)
        columns = {"oracle": sweeps.ORACLE_COLUMNS, "hierarchy": sweeps.HIERARCHY_COLUMNS,
                   "meanfield": sweeps.MEANFIELD_COLUMNS}[ns.command]
        emit(f"{ns.command}.csv", rows, columns, deltas=list(deltas))
        if all(r.get("status") == "failed" for r in rows):
            raise RuntimeError(rows[0]["error"])
    else:  # pragma: no cover - argparse guards this
        raise UsageError(f"unknown command {ns.command}")

    for path, extra in written:
        manifest = sweeps.make_manifest(ns.command, argv, params, settings, seeds,
                                        [path], started, **extra)
        manifest.write(path.with_suffix(".manifest.json"))
    return [p for p, _ in written]


def _canonical_argv(ns: argparse.Namespace) -> list[str]:
    # records every global option explicitly so a replay never depends on defaults
    out = []
    for k in ("config", "seed", "nc", "nmax", "ncap", "convergence",
              "delta", "u", "j", "f", "gamma"):
        v = getattr(ns, k)
        if v is not None:
            out += [f"--{k}", str(v)]
    return out


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        ns = _resolve_args(parser.parse_args(argv))
    except SystemExit as exc:
        return int(exc.code) if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if ns.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if ns.config:
            ns.config = str(Path(ns.config).resolve())
        recorded = [a for a in argv if a not in ("-v", "--verbose")] + _canonical_argv(ns)
        paths = run(ns, recorded)
    except (UsageError, ModelError, ValueError) as exc:
        _error(ns, exc)
        return EXIT_USAGE
    except Exception as exc:
        _error(ns, exc)
        return EXIT_FAILURE
    for p in paths:
        print(p)
    return EXIT_OK


def _error(ns, exc: Exception) -> None:
    log.debug("failure", exc_info=exc)
    print(json.dumps({"status": "error", "command": getattr(ns, "command", None),
                      "error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
