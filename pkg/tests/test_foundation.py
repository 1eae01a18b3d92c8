import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from univalent.errors import (
    EmptyRegion,
    NonFiniteValue,
    PointOnContour,
    PreconditionError,
    QuadratureInconclusive,
)
from univalent.foundation import (
    INF,
    Annulus,
    ClosedDisk,
    Contour,
    DiskUnion,
    HoledDisk,
    PuncturedPlane,
    argument_count,
    boundary_samples,
    chordal_distance,
    chordal_sup_distance,
    contour_integral,
    interior_grid,
    path_integral,
    sup_distance,
    winding_number,
)

finite = st.complex_numbers(max_magnitude=1e6, allow_nan=False, allow_infinity=False)


def chordal_oracle(a, b):
    # stereographic projection onto the unit sphere, half the Euclidean chord
    def lift(z):
        if z == INF:
            return np.array([0.0, 0.0, 1.0])
        d = 1 + abs(z) ** 2
        return np.array([2 * z.real / d, 2 * z.imag / d, (abs(z) ** 2 - 1) / d])

    return float(np.linalg.norm(lift(a) - lift(b)) / 2)


class TestChordal:
    def test_examples(self):
        assert chordal_distance(0, INF) == pytest.approx(1)
        assert chordal_distance(1, 1) == 0
        assert chordal_distance(0, 1) == pytest.approx(1 / math.sqrt(2), abs=1e-15)
        assert chordal_distance(INF, INF) == 0

    @given(finite, finite)
    def test_matches_sphere_chord(self, a, b):
        assert chordal_distance(a, b) == pytest.approx(chordal_oracle(a, b), abs=1e-12)

    @given(finite, finite, finite)
    def test_metric_axioms(self, a, b, c):
        ab, bc, ac = chordal_distance(a, b), chordal_distance(b, c), chordal_distance(a, c)
        assert ab == chordal_distance(b, a)
        assert 0 <= ab <= 1
        assert ac <= ab + bc + 1e-14

    def test_vectorized(self):
        a = np.array([0, 1, INF])
        np.testing.assert_allclose(chordal_distance(a, 0), [0, 1 / math.sqrt(2), 1])


class TestSupDistances:
    def test_sup_examples(self):
        s = boundary_samples(ClosedDisk(0, 1), 64)
        assert sup_distance(lambda z: z, lambda z: z, s) == 0
        assert sup_distance(lambda z: z, lambda z: z + 1, s) == pytest.approx(1)
        assert sup_distance(lambda z: z ** 2, lambda z: 0 * z, s) == pytest.approx(1)

    def test_sup_rejects_infinity(self):
        s = boundary_samples(ClosedDisk(0, 1), 64)
        with pytest.raises(NonFiniteValue):
            sup_distance(lambda z: np.full(z.shape, INF), lambda z: z, s)

    def test_chordal_sup(self):
        s = boundary_samples(ClosedDisk(0, 1), 64)
        assert chordal_sup_distance(lambda z: 1 / z, lambda z: 1 / z, s) == 0
        assert chordal_sup_distance(lambda z: 0 * z, lambda z: np.full(z.shape, INF), s) == pytest.approx(1)
        assert chordal_sup_distance(lambda z: 1 / z, lambda z: 0 * z, np.array([1.0 + 0j])) == \
            pytest.approx(1 / math.sqrt(2))


class TestQuadrature:
    def test_residues(self):
        c = Contour(0, 1, 1, 64)
        assert abs(contour_integral(lambda z: 1 / z, c) - 2j * math.pi) < 1e-12
        assert abs(contour_integral(lambda z: z, c)) < 1e-12
        assert abs(contour_integral(lambda z: 1 / z ** 2, c)) < 1e-12

    @settings(max_examples=40, deadline=None)
    @given(st.dictionaries(st.integers(-12, 12), st.complex_numbers(max_magnitude=10, allow_nan=False,
                                                                    allow_infinity=False), min_size=1),
           st.complex_numbers(max_magnitude=3, allow_nan=False, allow_infinity=False),
           st.floats(0.2, 3), st.sampled_from([1, -1]))
    def test_laurent_exactness(self, coef, center, radius, orient):
        kmax = max(abs(k) for k in coef)
        c = Contour(center, radius, orient, 2 * kmax + 16)

        def f(z):
            return sum(a * (z - center) ** k for k, a in coef.items())

        expected = 2j * math.pi * orient * coef.get(-1, 0)
        scale = max(1.0, max(abs(a) * radius ** k for k, a in coef.items()) * radius)
        assert abs(contour_integral(f, c) - expected) <= 1e-12 * scale

    def test_non_finite_node(self):
        with pytest.raises(NonFiniteValue):
            contour_integral(lambda z: 1 / (z - 1), Contour(0, 1, 1, 64))

    def test_winding(self):
        assert winding_number(Contour(0, 1, 1, 64), 0) == 1
        assert winding_number(Contour(0, 1, 1, 64), 3) == 0
        assert winding_number(Contour(0, 1, -1, 64), 0) == -1
        with pytest.raises(PointOnContour):
            winding_number(Contour(0, 1, 1, 64), 1)

    def test_winding_inconclusive_then_stable(self):
        p = 0.99
        with pytest.raises(QuadratureInconclusive):
            winding_number(Contour(0, 1, 1, 16), p)
        counts = [winding_number(Contour(0, 1, 1, n), p) for n in (8192, 16384, 32768)]
        assert counts == [1, 1, 1]

    def test_contour_validation(self):
        with pytest.raises(PreconditionError):
            Contour(0, 1, 1, 8)
        with pytest.raises(PreconditionError):
            Contour(0, -1)

    def test_argument_count_zeros_minus_poles(self):
        # (z - 0.2)^2 (z + 0.5) / (z - 0.1): 3 zeros, 1 pole inside
        def logd(z):
            return 2 / (z - 0.2) + 1 / (z + 0.5) - 1 / (z - 0.1)

        assert argument_count(logd, Contour(0, 1)) == 2

    def test_path_integral(self):
        val = path_integral(lambda z: np.exp(z), [0, 1, 1 + 1j])
        assert abs(val - (np.exp(1 + 1j) - 1)) < 1e-13


class TestSampling:
    def test_boundary_counts(self):
        s = boundary_samples(ClosedDisk(0, 1), 64)
        assert s.points.size == 64
        np.testing.assert_allclose(np.abs(s.points), 1)
        s = boundary_samples(Annulus(0, 0.5, 2), 64)
        assert s.points.size == 128
        assert np.sum(np.isclose(np.abs(s.points), 0.5)) == 64

    def test_grid_count_lattice_oracle(self):
        brute = sum(1 for j, k in itertools.product(range(-4, 5), repeat=2)
                    if math.hypot(0.5 * j, 0.5 * k) <= 1)
        g = interior_grid(ClosedDisk(0, 1), 0.5)
        assert g.points.size == brute == 13

    def test_grid_inside_region(self):
        K = Annulus(1 + 1j, 0.5, 2)
        g = interior_grid(K, 0.1)
        assert np.all(K.contains(g.points, tol=1e-12))

    def test_empty_grid(self):
        with pytest.raises(EmptyRegion):
            interior_grid(Annulus(0, 0.9, 1), 5)

    def test_deterministic(self):
        a = boundary_samples(HoledDisk(ClosedDisk(0, 2), ((0.5, 0.2), (-0.5, 0.2))), 32).points
        b = boundary_samples(HoledDisk(ClosedDisk(0, 2), ((0.5, 0.2), (-0.5, 0.2))), 32).points
        assert np.array_equal(a, b)


class TestRegions:
    def test_invariants(self):
        with pytest.raises(PreconditionError):
            Annulus(0, 2, 1)
        with pytest.raises(PreconditionError):
            DiskUnion((ClosedDisk(0, 1), ClosedDisk(1.5, 1)))
        with pytest.raises(PreconditionError):
            HoledDisk(ClosedDisk(0, 1), ((0.8, 0.5),))

    def test_contains(self):
        K = Annulus(0, 0.5, 2)
        assert K.contains(1) and not K.contains(0.2) and not K.contains(3)
        U = DiskUnion((ClosedDisk(0, 1), ClosedDisk(4, 1)))
        assert U.contains(4.5) and not U.contains(2)

    def test_domain_spec(self):
        omega = PuncturedPlane((0,))
        assert omega.contains_region(Annulus(0, 0.5, 2))
        assert not omega.contains_region(ClosedDisk(0, 1))
