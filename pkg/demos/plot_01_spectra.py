"""
Single-particle and two-photon spectra
======================================

The six-site ring has a two-fold degenerate flat band at the bare cavity
frequency whose eigenstates vanish on the b sites. Adding a second photon
gives 21 levels, five of which collapse onto twice the cavity frequency as
the interaction goes to zero.
"""

import numpy as np

from liebcavity.fock import resonant_cluster, two_photon_rows, two_photon_spectrum
from liebcavity.model import ModelParams, resolve
from liebcavity.singleparticle import diagonalize, flat_band_check

params = ModelParams(j=3.0, omega_c=0.0)

# %%
# One photon
# ----------
# Energies come out as ``omega_c + J * {-sqrt5, -1, 0, 0, 1, sqrt5}``.
spec = diagonalize(resolve(params))
for e, k in zip(spec.energies, spec.k_labels):
    print(f"E = {e:+8.4f}   k = {k}")

report = flat_band_check(spec)
print("flat band degeneracy:", report.degeneracy,
      " largest b amplitude:", f"{report.max_dark_amplitude:.1e}")

# %%
# Two photons
# -----------
# The states with the largest overlap on the two reference configurations
# sit at ``2 omega_c + U`` and ``2 omega_c``.
rows = two_photon_rows(two_photon_spectrum(params))
for r in rows:
    if max(r["overlap_psi1"], r["overlap_psi2"]) > 0.5:
        print(f"E - 2wc = {r['energy_minus_2wc']:+.6f}  "
              f"overlaps {r['overlap_psi1']:.4f} / {r['overlap_psi2']:.4f}")

# %%
# The resonant cluster shrinks linearly with U.
u_grid = [0.2, 0.1, 0.05, 0.02]
for u, levels in zip(u_grid, resonant_cluster(u_grid)):
    print(f"U = {u:5.2f}:", np.array2string(levels, precision=4))
