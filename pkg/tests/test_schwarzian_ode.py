import math

import numpy as np
import pytest

from univalent.errors import ComplementNotConnected, DegenerateFrame, PathMismatch
from univalent.foundation import Annulus, ClosedDisk, Contour, boundary_samples, chordal_distance
from univalent.rational import MoebiusMap, Polynomial, RationalFunction, schwarzian
from univalent.runge import LaurentBasis, fit_analytic_ls
from univalent.schwarzian_ode import (
    ReconstructionFrame,
    SchwarzianODE,
    meromorphic_lu_runge,
    numerical_schwarzian,
    obstruction_residue,
    reconstruct_from_schwarzian,
    solve_ivp_along,
    wronskian_drift,
)

ZERO = SchwarzianODE(Polynomial([0]))
HALF = SchwarzianODE(Polynomial([-0.5]))   # w'' = w/4
TWO = SchwarzianODE(Polynomial([2]))       # w'' = -w
S_EX = RationalFunction(Polynomial([-1.5]), Polynomial([0, 0, 1]))


class TestIVP:
    def test_linear(self):
        sol = solve_ivp_along(ZERO, [0, 1], (0, 1))
        np.testing.assert_allclose(sol.path_values[-1], [1, 1], atol=1e-12)

    def test_exponential(self):
        sol = solve_ivp_along(HALF, [0, 2], (1, 0.5))
        assert abs(sol.path_values[-1, 0] - math.e) <= 1e-8

    def test_sine(self):
        sol = solve_ivp_along(TWO, [0, math.pi / 2], (0, 1))
        assert abs(sol.path_values[-1, 0] - 1) <= 1e-8

    def test_complex_polyline_vs_closed_form(self):
        path = [0, 1 + 1j, 2j, -1 + 0.5j]
        sol = solve_ivp_along(TWO, path, (0, 1))
        np.testing.assert_allclose(sol.path_values[:, 0], np.sin(np.array(path)), atol=1e-8)
        np.testing.assert_allclose(sol.path_values[:, 1], np.cos(np.array(path)), atol=1e-8)

    def test_airy_like_vs_taylor(self):
        # w'' = -z w / 2 (p = z); compare with its power series at z = 1
        ode = SchwarzianODE(Polynomial([0, 1]))
        a = np.zeros(60, dtype=complex)
        a[1] = 1
        for n in range(60 - 3):
            a[n + 3] = -0.5 * a[n] / ((n + 3) * (n + 2))
        ref = np.polyval(a[::-1], 1.0)
        sol = solve_ivp_along(ode, [0, 1], (0, 1))
        assert abs(sol.path_values[-1, 0] - ref) <= 1e-9


class TestWronskian:
    def test_linear_pair(self):
        s1 = solve_ivp_along(ZERO, [0, 1], (0, 1))
        s2 = solve_ivp_along(ZERO, [0, 1], (1, 0))
        assert wronskian_drift(s1, s2) <= 1e-10

    def test_sin_cos(self):
        s1 = solve_ivp_along(TWO, [0, 2], (0, 1), tol=1e-10)
        s2 = solve_ivp_along(TWO, [0, 2], (1, 0), tol=1e-10)
        assert wronskian_drift(s1, s2) <= 1e-8

    @pytest.mark.parametrize("tol", [1e-8, 1e-10, 1e-12])
    def test_drift_within_ten_tol(self, tol):
        path = [0, 1 + 0.5j, 2]
        ode = SchwarzianODE(Polynomial([1, 0.3j]))
        s1 = solve_ivp_along(ode, path, (0, 1), tol=tol)
        s2 = solve_ivp_along(ode, path, (1, 0), tol=tol)
        assert wronskian_drift(s1, s2) <= 10 * tol

    def test_degenerate(self):
        s1 = solve_ivp_along(TWO, [0, 2], (0, 1))
        with pytest.raises(DegenerateFrame):
            wronskian_drift(s1, s1)

    def test_path_mismatch(self):
        s1 = solve_ivp_along(TWO, [0, 2], (0, 1))
        s2 = solve_ivp_along(TWO, [0, 1], (1, 0))
        with pytest.raises(PathMismatch):
            wronskian_drift(s1, s2)


def frames():
    e_frame = ReconstructionFrame(0, (0, 1), (1, -0.5))  # u1 = e^{z/2} - e^{-z/2}, u2 = e^{-z/2}
    return [
        (ZERO, ReconstructionFrame(0, (0, 1), (1, 0)), lambda z: z),
        (TWO, ReconstructionFrame(0, (0, 1), (1, 0)), np.tan),
        (HALF, e_frame, lambda z: np.exp(z) - 1),
    ]


class TestReconstruction:
    def test_examples(self):
        (o1, f1, _), (o2, f2, _), (o3, f3, _) = frames()
        assert abs(reconstruct_from_schwarzian(o1, f1)(np.array([0.7]))[0] - 0.7) <= 1e-10
        assert abs(reconstruct_from_schwarzian(o2, f2)(np.array([math.pi / 4]))[0] - 1) <= 1e-8
        assert abs(reconstruct_from_schwarzian(o3, f3)(np.array([1.0]))[0] - (math.e - 1)) <= 1e-8

    def test_closed_forms_on_grid(self, rng):
        z = 0.8 * (rng.random(30) - 0.5 + 1j * (rng.random(30) - 0.5))
        for ode, frame, ref in frames():
            np.testing.assert_allclose(reconstruct_from_schwarzian(ode, frame)(z), ref(z), atol=1e-8)

    def test_schwarzian_round_trip(self, rng):
        z = 0.4 * (rng.random(10) - 0.5 + 1j * (rng.random(10) - 0.5))
        for ode, frame, _ in frames():
            g = reconstruct_from_schwarzian(ode, frame)
            np.testing.assert_allclose(numerical_schwarzian(g, z), ode.p(z), atol=1e-5)

    def test_moebius_ambiguity(self, rng):
        ode = SchwarzianODE(Polynomial([1, 0.5j, 0.2]))
        g1 = reconstruct_from_schwarzian(ode, ReconstructionFrame(0, (0, 1), (1, 0)))
        g2 = reconstruct_from_schwarzian(ode, ReconstructionFrame(0, (1, 2), (0.5 + 1j, -1)))
        pts = np.array([0.3, -0.2 + 0.4j, 0.1 - 0.5j])
        T = MoebiusMap.from_three_points(tuple(g1(pts)), tuple(g2(pts)))
        z = 0.8 * (rng.random(20) - 0.5 + 1j * (rng.random(20) - 0.5))
        np.testing.assert_allclose(T(g1(z)), g2(z), atol=1e-7, rtol=1e-7)


class TestMeromorphicRunge:
    def test_moebius_exact(self):
        f = RationalFunction(Polynomial([1]), Polynomial([0, 1]))
        g = meromorphic_lu_runge(f, ClosedDisk(2, 1), 1e-10)
        assert g.report.certified_sup_error <= 1e-10

    def test_simple_pole(self):
        f = RationalFunction(Polynomial([1, 0, 1]), Polynomial([0, 1]))
        K = ClosedDisk(0, 0.5)
        g = meromorphic_lu_runge(f, K, 1e-6)
        assert g.report.certified_sup_error <= 1e-6
        z = boundary_samples(K, 128, 0.5).points * 0.9
        assert np.max(chordal_distance(g(z), f(z))) <= 1e-6
        errs = [e for _, e in g.errors_by_degree]
        assert all(b <= a for a, b in zip(errs, errs[1:]))

    def test_annulus_rejected(self):
        f = RationalFunction(Polynomial([-1]), Polynomial([0, 0, 1]))
        with pytest.raises(ComplementNotConnected):
            meromorphic_lu_runge(f, Annulus(0, 0.5, 2), 1e-6)


class TestObstruction:
    def test_schwarzian_of_example(self):
        f = RationalFunction(Polynomial([-1]), Polynomial([0, 0, 1]))
        assert schwarzian(f).allclose(S_EX)

    def test_residue(self):
        # coefficient of 1/z in S(z) z is -3/2
        assert abs(obstruction_residue(S_EX, Contour(0, 1)) - (-3j * math.pi)) <= 1e-12

    def test_polynomial_zero(self, rng):
        p = RationalFunction.from_polynomial(Polynomial(rng.normal(size=8)))
        assert abs(obstruction_residue(p, Contour(0.3, 1.7))) <= 1e-10

    def test_polynomial_perturbation(self, rng):
        q = Polynomial(rng.normal(size=51) / np.arange(1, 52) ** 2)
        S = S_EX - RationalFunction.from_polynomial(q)
        assert abs(obstruction_residue(S, Contour(0, 1)) - (-3j * math.pi)) <= 1e-9

    def test_fit_lower_bound(self):
        pts = boundary_samples(ClosedDisk(0, 1), 512).points
        val = boundary_samples(ClosedDisk(0, 1), 1024, 0.5).points
        bound = abs(obstruction_residue(S_EX, Contour(0, 1))) / (2 * math.pi)
        for d in (4, 16, 50):
            fit = fit_analytic_ls(pts, S_EX(pts), LaurentBasis(d), (val, S_EX(val)))
            assert fit.certified_sup_error >= bound - 1e-6
