"""Driven-dissipative Bose-Hubbard model on a six-site Lieb ring.

Engines for the steady state:

- `liebcavity.hierarchy`: truncated equations of motion for normally ordered
  correlation functions (global hard cutoff ``N_c``).
- `liebcavity.liouville`: brute-force Lindblad steady state in a truncated,
  optionally displaced, Fock space (the reference oracle).
- `liebcavity.meanfield`: classical coherent-field (Gross-Pitaevskii) fixed
  points.

Supporting modules cover the lattice model, the single-particle and
two-photon spectra, disorder ensembles and CSV sweeps.
"""

__version__ = "0.1.0"

from .model import ModelParams, DisorderRealization, resolve  # noqa: E402

__all__ = ["ModelParams", "DisorderRealization", "resolve", "__version__"]
