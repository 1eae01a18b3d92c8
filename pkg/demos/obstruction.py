"""
Why z^2 on an annulus resists entire Schwarzians
================================================

The map f(z) = z^2 is locally univalent on the annulus 1/2 <= |z| <= 2, and
its Schwarzian is -3/(2 z^2).  A locally univalent meromorphic function on
the whole plane has an entire Schwarzian, so approximating f on the annulus
by such functions would force polynomials p with p ~ -3/(2 z^2) on the unit
circle.  A single contour integral rules this out.
"""

import math

import numpy as np

from univalent import Contour, Polynomial, RationalFunction, schwarzian
from univalent.runge import LaurentBasis, fit_analytic_ls
from univalent.schwarzian_ode import obstruction_residue

f = RationalFunction.from_polynomial(Polynomial([0, 0, 1]))
S = schwarzian(f)
print("S_f numerator:", S.num.coef, " denominator:", S.den.coef)

# %%
# Integrating S(z) z around |z| = 1 only sees the 1/z^2 term.  Any
# polynomial added to S integrates to zero, so this number is an invariant.
circle = Contour(0, 1)
res = obstruction_residue(S, circle)
print(f"oint S(z) z dz = {res:.12f}   (expected {-3j * math.pi:.12f})")

rng = np.random.default_rng(7)
q = RationalFunction.from_polynomial(Polynomial(rng.normal(size=30)))
print(f"after subtracting a random degree-29 polynomial: {obstruction_residue(S - q, circle):.12f}")

# %%
# Estimating the integral by its length times the sup of the integrand gives
# sup |S - p| >= |res| / (2 pi) = 1.5 on the circle for every polynomial p.
bound = abs(res) / (2 * math.pi)
print(f"lower bound on sup|S - p|: {bound:.12f}")

# %%
# Least squares cannot beat the bound; the best fits sit right on it.
pts, vpts = circle.nodes(1024), circle.nodes(2048, 0.5)
for d in (0, 8, 20, 50):
    fit = fit_analytic_ls(pts, S(pts), LaurentBasis(d), (vpts, S(vpts)))
    print(f"degree {d:2d}: sup error {fit.certified_sup_error:.12f}")
