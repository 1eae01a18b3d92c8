"""
One function, many targets along a sequence of translations
===========================================================

Given targets g_1, ..., g_m on the closed unit disk K and translations
phi_n(z) = z + 8n, we build one locally univalent entire-style F with
F(phi_n(z)) ~ g_n(z) on K.  Repeating this with finer tolerances and more
targets is the finite shadow of a universal function.
"""

import math

import numpy as np

from univalent import ClosedDisk, EUCLIDEAN, Polynomial, RationalFunction, Translations
from univalent import build_finite_universal, covering_map_special, diagnose_sequence, metric_orbit_experiment
from univalent.universality import PuncturedUnitDisk

K = ClosedDisk(0, 1)
seq = Translations(8)

# %%
# Translations run away from every compact set and are injective, which is
# what lets the stages be glued independently.
diag = diagnose_sequence(Translations(1), [K, ClosedDisk(0, 3)], 12)
print("run-away indices for stride 1:", diag.runaway_indices)

exp12 = RationalFunction.from_polynomial(Polynomial([1 / math.factorial(k) for k in range(13)]))
targets = [
    RationalFunction.from_polynomial(Polynomial([0, 1])),
    exp12,
    RationalFunction(Polynomial([1]), Polynomial([1, -0.1])),
]
orbit = build_finite_universal(targets, K, seq, 1e-3)
print("stages:", orbit.stages)
print("orbit errors:", [f"{e:.1e}" for e in orbit.errors])
print("zeros of F' on each stage image:", orbit.certificate_counts)

# %%
# Pulling the flat metric back by F gives |F'| |dz|; along the same stages it
# reproduces the densities |g_n'|.
metric = metric_orbit_experiment(targets[:2], EUCLIDEAN, K, seq, 1e-3)
print("density errors:", [f"{e:.1e}" for e in metric.errors])

# %%
# The punctured disk is covered by the disk through exp((z+1)/(z-1)).
psi = covering_map_special(PuncturedUnitDisk())
w = psi(np.array([0, 0.5, 0.9j, -0.99]))
print("covering values:", np.round(w, 6), " moduli:", np.round(np.abs(w), 6))
