"""
A locally univalent approximant with zero-free derivative
=========================================================

Target: f(z) = z^2/2 + 0.1 z on the annulus 1/2 <= |z| <= 2 inside the
punctured plane.  Its derivative z + 0.1 has a zero at -0.1, which lies in
the hole.  We look for G with G' = z exp(q(z)), where q is a Laurent
polynomial in z and 1/z.  Such a G' never vanishes on the punctured plane.
"""

import numpy as np

from univalent import Annulus, Contour, PuncturedPlane, Polynomial, RationalFunction
from univalent import argument_count, boundary_samples, lu_holomorphic_runge, zero_free_runge

K = Annulus(0, 0.5, 2)
omega = PuncturedPlane((0,))
f = RationalFunction.from_polynomial(Polynomial([0, 0.1, 0.5]))

# %%
# Step one fits the derivative by B exp(q).  The branch factor B = z
# carries the winding number of z + 0.1 around the hole.
g = RationalFunction.from_polynomial(Polynomial([0.1, 1]))
h, rep = zero_free_runge(g, K, omega, 1e-8)
print("branch factor:", h.branch_points, " Laurent degree:", rep.degree_used,
      f" certified error: {rep.certified_sup_error:.2e}")

# %%
# Step two corrects the period around the hole to zero so the
# antiderivative is single valued, then integrates.
G = lu_holomorphic_runge(f, K, omega, 1e-6)
z = boundary_samples(K, 2000, 0.37).points
print(f"sup |G - f| on the boundary: {np.max(np.abs(G(z) - f(z))):.2e}")
print("Newton iterations for the period:", G.report.newton_iterations,
      f" residual {G.report.final_residual_norm:.1e}")

# %%
# G' has one zero inside each circle (the factor z), hence none in K.
outer = argument_count(G.deriv, Contour(0, 2, 1, 512))
inner = argument_count(G.deriv, Contour(0, 0.5, 1, 512))
print("zeros of G' in the annulus:", outer - inner)
print("smallest |G'| on a fine grid:",
      np.min(np.abs(G.deriv(np.linspace(0.5, 2, 200)[:, None] * np.exp(1j * np.linspace(0, 6.28, 200))))))
