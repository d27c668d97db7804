"""Lattice geometry, physical parameters and disorder for the two-cell Lieb ring.

All energies are measured in units of the loss rate ``gamma``. Sites are
always ordered ``(a1, b1, c1, a2, b2, c2)``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

import numpy as np

SITES: tuple[str, ...] = ("a1", "b1", "c1", "a2", "b2", "c2")
SITE_INDEX: dict[str, int] = {s: i for i, s in enumerate(SITES)}

# undirected hopping pairs of the ring with periodic boundaries
EDGES: tuple[tuple[str, str], ...] = (
    ("a1", "b1"),
    ("b1", "c1"),
    ("a1", "b2"),
    ("a2", "b2"),
    ("b2", "c2"),
    ("a2", "b1"),
)

DRIVE_SITES: frozenset[str] = frozenset({"c1", "c2"})
DARK_SITES: frozenset[str] = frozenset({"b1", "b2"})


class ModelError(ValueError):
    """Invalid physical parameters or disorder settings."""


@dataclass(frozen=True)
class ModelParams:
    """Physical parameters in the frame rotating at the pump frequency.

    Parameters
    ----------
    delta : float
        Pump-cavity detuning ``omega_p - omega_c``.
    u : float
        On-site photon-photon interaction.
    j : float
        Hopping amplitude.
    f : complex
        Coherent drive amplitude on the c-sites.
    gamma : float
        Cavity loss rate; sets the unit of energy.
    omega_c : float
        Bare cavity frequency. Only used for lab-frame spectra.
    allow_negative : bool
        Accept ``u < 0`` or ``j < 0``.
    """

    delta: float = 0.0
    u: float = 0.1
    j: float = 3.0
    f: complex = 0.5
    gamma: float = 1.0
    omega_c: float = 0.0
    allow_negative: bool = False

    def __post_init__(self):
        object.__setattr__(self, "f", complex(self.f))
        for name in ("delta", "u", "j", "gamma", "omega_c"):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise ModelError(f"{name} must be finite, got {value}")
            object.__setattr__(self, name, value)
        if not (math.isfinite(self.f.real) and math.isfinite(self.f.imag)):
            raise ModelError(f"f must be finite, got {self.f}")
        if self.gamma <= 0:
            raise ModelError(f"gamma must be positive, got {self.gamma}")
        if not self.allow_negative and (self.u < 0 or self.j < 0):
            raise ModelError(
                f"negative u={self.u} or j={self.j} requires allow_negative=True")

    def replace(self, **changes) -> "ModelParams":
        values = {k: getattr(self, k) for k in self.__dataclass_fields__}
        values.update(changes)
        return ModelParams(**values)


@dataclass(frozen=True)
class LatticeGraph:
    sites: tuple[str, ...]
    edges: tuple[tuple[str, str], ...]
    drive_sites: frozenset[str]
    dark_sites: frozenset[str]

    def neighbors(self, site: str) -> set[str]:
        out = set()
        for s, r in self.edges:
            if s == site:
                out.add(r)
            elif r == site:
                out.add(s)
        return out

    def degree(self, site: str) -> int:
        return len(self.neighbors(site))

    @property
    def edge_indices(self) -> list[tuple[int, int]]:
        return [(SITE_INDEX[s], SITE_INDEX[r]) for s, r in self.edges]


def build_lattice() -> LatticeGraph:
    """Return the canonical 6-site, 6-edge Lieb ring."""
    return LatticeGraph(SITES, EDGES, DRIVE_SITES, DARK_SITES)


@dataclass(frozen=True)
class DisorderRealization:
    """One draw of frequency and hopping shifts.

    ``site_shifts`` and ``edge_shifts`` hold dimensionless values in
    ``[-1/2, 1/2]``; the physical shift is that value times ``w_freq`` or
    ``w_hop``.
    """

    site_shifts: Mapping[str, float] = field(default_factory=dict)
    edge_shifts: Mapping[tuple[str, str], float] = field(default_factory=dict)
    w_freq: float = 0.0
    w_hop: float = 0.0
    seed: int | None = None

    def __post_init__(self):
        if self.w_freq < 0 or self.w_hop < 0:
            raise ModelError("disorder strengths must be non-negative")
        for key in self.site_shifts:
            if key not in SITE_INDEX:
                raise ModelError(f"unknown site {key!r}")
        for key in self.edge_shifts:
            if _canonical_edge(key) is None:
                raise ModelError(f"unknown edge {key!r}")
        values = list(self.site_shifts.values()) + list(self.edge_shifts.values())
        if any(not (-0.5 <= x <= 0.5) for x in values):
            raise ModelError("disorder shifts must lie in [-1/2, 1/2]")

    @classmethod
    def clean(cls) -> "DisorderRealization":
        return cls()

    def site_shift(self, site: str) -> float:
        return float(self.site_shifts.get(site, 0.0))

    def edge_shift(self, edge: tuple[str, str]) -> float:
        for key, value in self.edge_shifts.items():
            if _canonical_edge(key) == edge:
                return float(value)
        return 0.0


def _canonical_edge(pair) -> tuple[str, str] | None:
    s, r = pair
    if (s, r) in EDGES:
        return (s, r)
    if (r, s) in EDGES:
        return (r, s)
    return None


@dataclass(frozen=True)
class ResolvedLattice:
    """Per-site and per-edge values entering the rotating-frame Hamiltonian.

    Arrays follow the global ordering of `SITES` and `EDGES`.
    """

    detuning: np.ndarray   # (6,) effective detuning per site
    hopping: np.ndarray    # (6,) hopping per edge
    drive: np.ndarray      # (6,) complex drive per site
    u: float
    gamma: float
    delta: float = 0.0
    omega_c: float = 0.0

    def __post_init__(self):
        for name in ("detuning", "hopping", "drive"):
            arr = np.array(getattr(self, name))
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def edges(self) -> list[tuple[int, int]]:
        return [(SITE_INDEX[s], SITE_INDEX[r]) for s, r in EDGES]

    @property
    def per_site_detuning(self) -> dict[str, float]:
        return {s: float(self.detuning[i]) for i, s in enumerate(SITES)}

    @property
    def per_edge_hopping(self) -> dict[tuple[str, str], float]:
        return {e: float(self.hopping[k]) for k, e in enumerate(EDGES)}

    def hopping_matrix(self) -> np.ndarray:
        """Symmetric 6x6 matrix of hopping amplitudes (positive entries)."""
        h = np.zeros((6, 6))
        for k, (i, r) in enumerate(self.edges):
            h[i, r] = h[r, i] = self.hopping[k]
        return h


def resolve(params: ModelParams,
            disorder: DisorderRealization | None = None) -> ResolvedLattice:
    """Combine parameters and a disorder draw into per-site/per-edge values.

    A cavity shifted up by ``w_freq * xi`` sees its detuning reduced by the
    same amount. Resolved hopping below zero is rejected.
    """
    disorder = disorder or DisorderRealization.clean()
    detuning = np.array([params.delta - disorder.w_freq * disorder.site_shift(s)
                         for s in SITES])
    hopping = np.array([params.j + disorder.w_hop * disorder.edge_shift(e)
                        for e in EDGES])
    if not params.allow_negative and np.any(hopping < 0):
        bad = [EDGES[k] for k in np.flatnonzero(hopping < 0)]
        raise ModelError(f"disorder drives hopping negative on edges {bad}")
    drive = np.array([params.f if s in DRIVE_SITES else 0.0 for s in SITES],
                     dtype=complex)
    return ResolvedLattice(detuning, hopping, drive, params.u, params.gamma,
                           params.delta, params.omega_c)


CONFIG_KEYS = ("delta", "u", "j", "f_re", "f_im", "gamma",
               "w_freq", "w_hop", "seed", "n_realizations")


def load_config(source) -> dict:
    """Read a JSON configuration (path, JSON string or mapping).

    Returns a dict with ``params`` (`ModelParams`) and the disorder/ensemble
    keys ``w_freq``, ``w_hop``, ``seed``, ``n_realizations``.
    """
    if isinstance(source, Mapping):
        raw = dict(source)
    else:
        path = Path(source)
        text = path.read_text() if path.exists() else str(source)
        raw = json.loads(text)
    unknown = set(raw) - set(CONFIG_KEYS)
    if unknown:
        raise ModelError(f"unknown configuration keys: {sorted(unknown)}")
    defaults = ModelParams()
    params = ModelParams(
        delta=raw.get("delta", defaults.delta),
        u=raw.get("u", defaults.u),
        j=raw.get("j", defaults.j),
        f=complex(raw.get("f_re", defaults.f.real), raw.get("f_im", defaults.f.imag)),
        gamma=raw.get("gamma", defaults.gamma),
    )
    return {
        "params": params,
        "w_freq": float(raw.get("w_freq", 0.0)),
        "w_hop": float(raw.get("w_hop", 0.0)),
        "seed": int(raw.get("seed", 0)),
        "n_realizations": int(raw.get("n_realizations", 200)),
    }


def params_to_config(params: ModelParams, **extra) -> dict:
    cfg = {"delta": params.delta, "u": params.u, "j": params.j,
           "f_re": params.f.real, "f_im": params.f.imag, "gamma": params.gamma}
    cfg.update(extra)
    return cfg
