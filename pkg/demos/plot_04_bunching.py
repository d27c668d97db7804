"""
Dark-site bunching across parameters
====================================

The on-site and inter-cell second-order coherences of the b sites, from the
hierarchy at ``N_c = 4``, as functions of hopping and interaction. Larger
hopping pushes the dispersive bands away and leaves the correlated pair
states to dominate, while the interaction dependence shows a maximum at
weak nonlinearity.
"""

import numpy as np

from liebcavity import hierarchy
from liebcavity.model import ModelParams, resolve

base = ModelParams()


def g2(**change):
    obs = hierarchy.observables(hierarchy.solve(resolve(base.replace(**change)), 4))
    return obs["g2_11"], obs["g2_12"]


print("   J    g2_11    g2_12")
for j in np.arange(1.0, 6.01, 1.0):
    a, b = g2(j=j)
    print(f"{j:4.1f} {a:8.2f} {b:8.2f}")

print("\n   U    g2_11    g2_12")
for u in np.arange(0.0, 0.41, 0.05):
    a, b = g2(u=u)
    print(f"{u:4.2f} {a:8.2f} {b:8.2f}")
