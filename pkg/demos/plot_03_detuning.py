"""
Populations versus detuning
===========================

Sweeping the pump frequency across the band structure shows the three
single-photon resonances in the total density. Near zero detuning the b-site
density from the hierarchy rises above the mean-field value, a signature of
correlated photon pairs.
"""

import numpy as np

from liebcavity import sweeps
from liebcavity.model import ModelParams

grid = np.round(np.arange(-8.0, 8.0001, 0.5), 10)
spec = sweeps.SweepSpec("delta", grid, ModelParams(), ("hierarchy", "meanfield"))
rows = sweeps.run_sweep(spec, sweeps.EngineSettings(n_c=3, convergence="none"))

n_tot = sweeps.column(rows, "n_tot", "hierarchy")
nb_h = sweeps.column(rows, "n_b", "hierarchy")
nb_m = sweeps.column(rows, "n_b", "meanfield")

print("n_tot maxima at", sweeps.local_maxima(grid, n_tot))
print(" delta     n_tot      n_b hier   n_b GP")
for d, a, b, c in zip(grid, n_tot, nb_h, nb_m):
    print(f"{d:+6.2f} {a:10.5f} {b:10.3e} {c:10.3e}")
