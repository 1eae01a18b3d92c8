import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from univalent.errors import (
    CriticalPoint,
    InsufficientInterior,
    NonPositiveTarget,
    OutsideDisk,
    Overlap,
    RangeEscape,
)
from univalent.foundation import ClosedDisk
from univalent.metrics import (
    EUCLIDEAN,
    HYPERBOLIC,
    SPHERICAL,
    GridSpec,
    MetricDensity,
    canonical_density,
    curvature,
    harmonic_glue,
    liouville_construct,
    pullback,
    sample_density,
    scale_density,
)
from univalent.rational import MoebiusMap, Polynomial, RationalFunction

H = 0.005


class Exp:
    def __call__(self, z):
        return np.exp(z)

    deriv = __call__


def one(z):
    return np.ones(np.shape(z))


def exp_re(z):
    return np.exp(np.real(z))


class TestCanonical:
    def test_table(self):
        assert canonical_density(HYPERBOLIC, 0) == 2
        assert canonical_density(EUCLIDEAN, 3 + 4j) == 1
        assert canonical_density(SPHERICAL, 1) == 1

    def test_outside(self):
        with pytest.raises(OutsideDisk):
            canonical_density(HYPERBOLIC, 1.0)

    @given(st.floats(0, 0.99), st.floats(0, 6.3))
    def test_radial(self, r, t):
        z = r * np.exp(1j * t)
        assert canonical_density(HYPERBOLIC, z) == pytest.approx(2 / (1 - r * r))
        assert canonical_density(SPHERICAL, z) == pytest.approx(2 / (1 + r * r))


class TestCurvature:
    def test_flat_exact(self):
        lam = sample_density(one, GridSpec(0, 1, 0.05))
        rep = curvature(lam, 0)
        assert rep.max_abs_deviation_from_c == 0

    def test_hyperbolic(self):
        lam = sample_density(HYPERBOLIC.density, GridSpec(0, 0.8, H))
        assert curvature(lam, -1).max_abs_deviation_from_c <= 1e-3

    def test_spherical(self):
        lam = sample_density(SPHERICAL.density, GridSpec(0, 1, H))
        assert curvature(lam, 1).max_abs_deviation_from_c <= 1e-3

    def test_second_order_convergence(self):
        devs = [curvature(sample_density(SPHERICAL.density, GridSpec(0, 1, h)), 1).max_abs_deviation_from_c
                for h in (0.04, 0.02)]
        assert 3 < devs[0] / devs[1] < 5

    def test_insufficient(self):
        with pytest.raises(InsufficientInterior):
            curvature(sample_density(one, GridSpec(0, 0.1, 0.05)))

    def test_never_logs_masked(self):
        g = np.ones((5, 5))
        g[0, 0] = -1.0   # masked bad cell
        mask = np.ones((5, 5), dtype=bool)
        mask[0, 0] = False
        with np.errstate(all="raise"):
            rep = curvature(MetricDensity(g, 0j, 0.1, mask), 0)
        assert rep.cells_evaluated == 9

    def test_rejects_nonpositive(self):
        with pytest.raises(NonPositiveTarget):
            MetricDensity(-np.ones((3, 3)), 0j, 0.1, np.ones((3, 3), dtype=bool))


class TestScaling:
    def test_identity(self):
        lam = sample_density(HYPERBOLIC.density, GridSpec(0, 0.5, 0.05))
        np.testing.assert_array_equal(scale_density(lam, 1).grid, lam.grid)

    def test_factor_two(self):
        lam = scale_density(sample_density(HYPERBOLIC.density, GridSpec(0, 0.8, H)), 2)
        assert curvature(lam, -0.25).max_abs_deviation_from_c <= 1e-3

    def test_flat(self):
        assert curvature(scale_density(sample_density(one, GridSpec(0, 1, 0.05)), 5), 0).max_abs_deviation_from_c == 0

    @pytest.mark.parametrize("s", [0.5, 2, 3])
    def test_cellwise(self, s):
        lam = sample_density(HYPERBOLIC.density, GridSpec(0, 0.7, H))
        k1 = curvature(lam).curvature_grid
        k2 = curvature(scale_density(lam, s)).curvature_grid
        ok = ~np.isnan(k1)
        assert np.max(np.abs(k2[ok] - k1[ok] / s ** 2)) <= 5e-3


class TestPullback:
    def test_rotation(self, rng):
        z = 0.9 * np.sqrt(rng.random(100)) * np.exp(2j * np.pi * rng.random(100))
        rot = MoebiusMap(np.exp(0.7j), 0, 0, 1)
        np.testing.assert_allclose(pullback(HYPERBOLIC, rot)(z), HYPERBOLIC.density(z), rtol=1e-14)

    def test_automorphism_invariance(self, rng):
        z = 0.9 * np.sqrt(rng.random(1000)) * np.exp(2j * np.pi * rng.random(1000))
        phi = MoebiusMap.disk_automorphism(0.3, 0.0)
        np.testing.assert_allclose(pullback(HYPERBOLIC, phi)(z), HYPERBOLIC.density(z), rtol=1e-12)

    def test_exp(self, rng):
        z = rng.normal(size=50) + 1j * rng.normal(size=50)
        np.testing.assert_allclose(pullback(one, Exp())(z), np.exp(z.real), rtol=1e-14)

    def test_range_escape(self):
        with pytest.raises(RangeEscape):
            pullback(HYPERBOLIC, MoebiusMap(2, 0, 0, 1))(np.array([0.6]))

    def test_critical(self):
        sq = RationalFunction(Polynomial([0, 0, 1]), Polynomial([1]))
        with pytest.raises(CriticalPoint):
            pullback(EUCLIDEAN, sq)(np.array([0j]))

    def test_curvature_identity_random_automorphisms(self, rng):
        for _ in range(3):
            a = 0.5 * np.sqrt(rng.random()) * np.exp(2j * np.pi * rng.random())
            phi = MoebiusMap.disk_automorphism(a, float(2 * np.pi * rng.random()))
            lam = sample_density(pullback(HYPERBOLIC, phi), GridSpec(0, 0.7, H))
            assert curvature(lam, -1).max_abs_deviation_from_c <= 5e-3

    def test_spherical_through_pole(self):
        f = RationalFunction(Polynomial([1]), Polynomial([0, 1]))   # 1/z, Moebius
        z = np.array([0j, 0.5, 2j])
        np.testing.assert_allclose(pullback(SPHERICAL, f)(z), SPHERICAL.density(z), rtol=1e-12)


class TestLiouville:
    def test_identity_hyperbolic(self):
        lam = liouville_construct(MoebiusMap.identity(), HYPERBOLIC, GridSpec(0, 0.8, 0.05))
        pts = lam.points()[lam.mask]
        np.testing.assert_allclose(lam.grid[lam.mask], HYPERBOLIC.density(pts), rtol=1e-14)

    def test_exp_euclidean(self):
        lam = liouville_construct(Exp(), EUCLIDEAN, GridSpec(0, 1, H))
        assert curvature(lam, 0).max_abs_deviation_from_c <= 1e-3

    def test_identity_spherical(self):
        lam = liouville_construct(MoebiusMap.identity(), SPHERICAL, GridSpec(0, 1, H))
        assert curvature(lam, 1).max_abs_deviation_from_c <= 1e-3

    def test_finite_difference_derivative(self):
        lam = liouville_construct(lambda z: 0.5 * np.sin(z), HYPERBOLIC, GridSpec(0, 0.8, H))
        assert curvature(lam, -1).max_abs_deviation_from_c <= 1e-3

    def test_range_escape(self):
        with pytest.raises(RangeEscape):
            liouville_construct(MoebiusMap(2, 0, 0, 1), HYPERBOLIC, GridSpec(0, 0.8, 0.05))


class TestHarmonicGlue:
    K = ClosedDisk(0, 1)

    def test_trivial(self):
        g = harmonic_glue(one, one, 8, self.K, 1e-12)
        assert g.e1 <= 1e-12 and g.e2 <= 1e-12

    def test_exp_re(self):
        g = harmonic_glue(exp_re, one, 8, self.K, 1e-3, degree_cap=40)
        assert g.degree <= 40 and max(g.e1, g.e2) <= 1e-3

    def test_symmetric(self):
        g = harmonic_glue(one, exp_re, 8, self.K, 1e-3, degree_cap=40)
        assert max(g.e1, g.e2) <= 1e-3

    def test_both_bounds_on_fresh_points(self, rng):
        g = harmonic_glue(exp_re, one, 8, self.K, 1e-3, degree_cap=40)
        z = np.sqrt(rng.random(500)) * np.exp(2j * np.pi * rng.random(500))
        assert np.max(np.abs(g.density(z) - exp_re(z))) <= 1e-3
        assert np.max(np.abs(g.density(z + 8) - 1)) <= 1e-3

    def test_overlap(self):
        with pytest.raises(Overlap):
            harmonic_glue(one, one, 2.5, self.K, 1e-3)

    def test_nonpositive(self):
        with pytest.raises(NonPositiveTarget):
            harmonic_glue(lambda z: np.real(z), one, 8, self.K, 1e-3)
