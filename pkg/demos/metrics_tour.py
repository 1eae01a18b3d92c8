"""
Curvature of conformal densities
================================

A density lam(z) |dz| has Gauss curvature -Laplacian(log lam) / lam^2.  The
finite-difference curvature on a grid of spacing h converges like h^2.
"""

import numpy as np

from univalent import EUCLIDEAN, HYPERBOLIC, SPHERICAL, ClosedDisk, GridSpec, MoebiusMap
from univalent import curvature, harmonic_glue, pullback, sample_density
from univalent.metrics import scale_density

for geom, radius in ((HYPERBOLIC, 0.8), (EUCLIDEAN, 1.0), (SPHERICAL, 1.0)):
    for h in (0.02, 0.01, 0.005):
        lam = sample_density(geom.density, GridSpec(0, radius, h))
        rep = curvature(lam, geom.curvature)
        print(f"{geom.name:10s} h={h:<6} cells={rep.cells_evaluated:6d} "
              f"max|kappa - ({geom.curvature})| = {rep.max_abs_deviation_from_c:.2e}")

# %%
# Disk automorphisms are isometries of the hyperbolic density, so pulling
# back changes nothing.  Rescaling by s divides the curvature by s^2.
phi = MoebiusMap.disk_automorphism(0.3 + 0.2j, 1.0)
z = 0.9 * np.exp(1j * np.linspace(0, 6, 7)) * np.linspace(0.1, 1, 7)
print("pullback / density:", np.round(pullback(HYPERBOLIC, phi)(z) / HYPERBOLIC.density(z), 14))
base = sample_density(HYPERBOLIC.density, GridSpec(0, 0.7, 0.005))
for s in (0.5, 2, 3):
    print(f"scale {s}: median curvature {curvature(scale_density(base, s)).expected:.5f}"
          f" (expected {-1 / s**2:.5f})")

# %%
# Flat densities e^u with u harmonic: one entire u can look like log of two
# different targets on two far-apart disks.
glue = harmonic_glue(lambda z: np.exp(np.real(z)), lambda z: np.ones(np.shape(z)), 8,
                     ClosedDisk(0, 1), 1e-3, degree_cap=40)
print(f"harmonic glue: degree {glue.degree}, errors {glue.e1:.1e} and {glue.e2:.1e}")
