"""Acceptance criteria, one test each.  Every test prints a single
PASS/FAIL line (shown even when pytest captures output) and fails when a
check or its runtime limit is missed."""
import json
import math
import subprocess
import sys
import time

import numpy as np
import pytest

from conftest import exp_taylor, rat
from univalent.errors import SingularJacobian
from univalent.foundation import Annulus, ClosedDisk, Contour, PuncturedPlane, argument_count, \
    boundary_samples, chordal_distance, contour_integral
from univalent.metrics import EUCLIDEAN, HYPERBOLIC, SPHERICAL, GridSpec, curvature, harmonic_glue, \
    pullback, sample_density, scale_density
from univalent.rational import MoebiusMap, Polynomial, RationalFunction, compose_moebius, \
    precompose_moebius, schwarzian
from univalent.runge import ConstantTerm, CorrectionBasis, InversePowerTerm, LaurentBasis, Period, \
    ValueGap, ZeroFreeApproximant, fit_analytic_ls, lu_holomorphic_runge, match_functionals
from univalent.schwarzian_ode import ReconstructionFrame, SchwarzianODE, meromorphic_lu_runge, \
    obstruction_residue, reconstruct_from_schwarzian, solve_ivp_along, wronskian_drift
from univalent.universality import PuncturedUnitDisk, Translations, build_finite_universal, \
    covering_map_special, injectivity_check, metric_orbit_experiment, runaway_index

SEED = 20261018


@pytest.fixture
def verdict(capsys):
    """Run ``checks`` (name -> bool) collected by the test and print one line."""
    def emit(number, title, checks, started, limit):
        elapsed = time.perf_counter() - started
        checks = dict(checks)
        checks[f"runtime < {limit:g} s"] = elapsed < limit
        failed = [k for k, ok in checks.items() if not ok]
        status = "PASS" if not failed else "FAIL"
        line = f"[{status}] criterion {number:2d} {title} ({elapsed:.2f} s)"
        if failed:
            line += " failed: " + "; ".join(failed)
        with capsys.disabled():
            print("\n" + line)
        assert not failed, line
    return emit


def _random_moebius(rng):
    while True:
        a, b, c, d = rng.normal(size=4) + 1j * rng.normal(size=4)
        if abs(a * d - b * c) > 0.1:
            return MoebiusMap(a, b, c, d)


def _random_rational(rng):
    return RationalFunction(Polynomial(rng.normal(size=4) + 1j * rng.normal(size=4)),
                            Polynomial(rng.normal(size=3) + 1j * rng.normal(size=3)))


def test_01_schwarzian_identities(verdict):
    t0 = time.perf_counter()
    rng = np.random.default_rng(SEED)
    moebius_zero = all(schwarzian(_random_moebius(rng).as_rational()).num.degree == -1 for _ in range(100))
    target = RationalFunction(Polynomial([-1.5]), Polynomial([0, 0, 1]))
    inv_sq = schwarzian(RationalFunction(Polynomial([-1]), Polynomial([0, 0, 1])))
    sq = schwarzian(rat(0, 0, 1))
    exact = all(np.array_equal(s.num.coef, target.num.coef) and np.array_equal(s.den.coef, target.den.coef)
                for s in (inv_sq, sq))
    f, phi = _random_rational(rng), _random_moebius(rng)
    z = rng.normal(size=50) + 1j * rng.normal(size=50)
    lhs = schwarzian(precompose_moebius(f, phi))(z)
    rhs = schwarzian(f)(phi(z)) * phi.deriv(z) ** 2
    chain = float(np.max(np.abs(lhs - rhs) / np.maximum(1, np.abs(rhs))))
    post = schwarzian(compose_moebius(phi, f))(z) - schwarzian(f)(z)
    verdict(1, "Schwarzian identities", {
        "S(Moebius) = 0 for 100 maps": moebius_zero,
        "S(-1/z^2) = S(z^2) = -3/(2z^2) exactly": exact,
        f"chain rule {chain:.1e} <= 1e-9": chain <= 1e-9,
        "postcomposition invariance": float(np.max(np.abs(post))) <= 1e-9,
    }, t0, 1)


def test_02_obstruction(verdict):
    t0 = time.perf_counter()
    rng = np.random.default_rng(SEED)
    S = schwarzian(RationalFunction(Polynomial([-1]), Polynomial([0, 0, 1])))
    unit = Contour(0, 1)
    res = obstruction_residue(S, unit)
    q = Polynomial(rng.normal(size=51) / np.arange(1, 52))
    res_q = obstruction_residue(S - RationalFunction.from_polynomial(q), unit)
    bound = abs(res) / (2 * math.pi)
    errs = []
    for d in range(8, 51):
        n = max(1024, 4 * (d + 1))
        pts, vpts = unit.nodes(n), unit.nodes(2 * n, 0.5)
        errs.append(fit_analytic_ls(pts, S(pts), LaurentBasis(d), (vpts, S(vpts))).certified_sup_error)
    verdict(2, "obstruction residue and fit lower bound", {
        f"residue {res:.12g} = -3 pi i": abs(res + 3j * math.pi) <= 1e-9,
        "invariant under degree-50 polynomials": abs(res_q + 3j * math.pi) <= 1e-9,
        "implied bound 1.5": abs(bound - 1.5) <= 1e-12,
        f"fits of degree 8..50 all >= 1.5 - 1e-6 (min {min(errs):.15g})": min(errs) >= 1.5 - 1e-6,
    }, t0, 5)


def test_03_periods(verdict):
    t0 = time.perf_counter()
    c = Contour(0.2 - 0.1j, 1.3, 1, 64)
    worst = 0.0
    for k in range(-6, 7):
        val = contour_integral(lambda z, k=k: (z - c.center) ** k, c)
        worst = max(worst, abs(val - (2j * math.pi if k == -1 else 0)))
    base = ZeroFreeApproximant(branch_points=((0j, -1),))
    F = Period(Contour(0, 1, 1, 128), 2j * math.pi * 1.1)
    _, rep = match_functionals(base, CorrectionBasis((ConstantTerm(),)), [F])
    s_err = abs(rep.correction[0] - math.log(1.1))
    try:
        match_functionals(base, CorrectionBasis((InversePowerTerm(0j),)), [F])
        singular = False
    except SingularJacobian:
        singular = True
    verdict(3, "period machinery", {
        f"Laurent monomial periods {worst:.1e} <= 1e-12": worst <= 1e-12,
        f"s = ln 1.1 to {s_err:.1e}": s_err <= 1e-12,
        "w = 1/z raises SingularJacobian": singular,
    }, t0, 1)


def test_04_lu_runge(verdict):
    t0 = time.perf_counter()
    K = Annulus(0, 0.5, 2)
    f = rat(0, 0.1, 0.5)
    G = lu_holomorphic_runge(f, K, PuncturedPlane((0,)), 1e-6)
    z = boundary_samples(K, 1024, 0.25).points
    err = float(np.max(np.abs(G(z) - f(z))))
    outer = argument_count(G.deriv, Contour(0, 2, 1, 512))
    inner = argument_count(G.deriv, Contour(0, 0.5, 1, 512))
    h = G.derivative

    def integral(path):
        nodes, w = ValueGap(tuple(path), 0, panels=16).nodes_weights()
        return np.sum(h(nodes) * w)

    gap = abs(integral([1.2, 1.2 + 1.2j, -1.2 + 1.2j, -1.2]) - integral([1.2, 1.2 - 1.2j, -1.2 - 1.2j, -1.2]))
    verdict(4, "locally univalent Runge on the annulus", {
        f"certified error {G.report.certified_sup_error:.1e} <= 1e-6": G.report.certified_sup_error <= 1e-6,
        f"fresh boundary error {err:.1e} <= 1e-6": err <= 1e-6,
        f"zeros of G' in K = {outer - inner}": outer - inner == 0,
        f"path independence {gap:.1e} <= 1e-9": gap <= 1e-9,
    }, t0, 10)


def test_05_ode_reconstruction(verdict):
    t0 = time.perf_counter()
    ident = reconstruct_from_schwarzian(SchwarzianODE(Polynomial([0])), ReconstructionFrame(0, (0, 1), (1, 0)))
    tan = reconstruct_from_schwarzian(SchwarzianODE(Polynomial([2])), ReconstructionFrame(0, (0, 1), (1, 0)))
    e1 = abs(ident(np.array([0.7]))[0] - 0.7)
    e2 = abs(tan(np.array([math.pi / 4]))[0] - 1)
    ode = SchwarzianODE(Polynomial([2]))
    drift = wronskian_drift(solve_ivp_along(ode, [0, 2], (0, 1)), solve_ivp_along(ode, [0, 2], (1, 0)))
    f = RationalFunction(Polynomial([1, 0, 1]), Polynomial([0, 1]))
    K = ClosedDisk(0, 0.5)
    g = meromorphic_lu_runge(f, K, 1e-6)
    z = np.concatenate([boundary_samples(K, 256, 0.5).points, np.array([0j, 1e-3, 0.01j])])
    chord = float(np.max(chordal_distance(g(z), f(z))))
    verdict(5, "ODE reconstruction", {
        f"p = 0 gives z ({e1:.1e})": e1 <= 1e-10,
        f"p = 2 gives tan ({e2:.1e})": e2 <= 1e-8,
        f"Wronskian drift {drift:.1e} <= 1e-8": drift <= 1e-8,
        f"z + 1/z chordal error {max(chord, g.report.certified_sup_error):.1e} <= 1e-6":
            max(chord, g.report.certified_sup_error) <= 1e-6,
    }, t0, 10)


def test_06_curvature(verdict):
    t0 = time.perf_counter()
    rng = np.random.default_rng(SEED)
    h = 0.005
    hyp = sample_density(HYPERBOLIC.density, GridSpec(0, 0.8, h))
    d_hyp = curvature(hyp, -1).max_abs_deviation_from_c
    d_euc = curvature(sample_density(EUCLIDEAN.density, GridSpec(0, 1, h)), 0).max_abs_deviation_from_c
    d_sph = curvature(sample_density(SPHERICAL.density, GridSpec(0, 1, h)), 1).max_abs_deviation_from_c
    pull, pointwise = 0.0, 0.0
    z = 0.95 * np.sqrt(rng.random(1000)) * np.exp(2j * np.pi * rng.random(1000))
    for _ in range(10):
        a = 0.5 * np.sqrt(rng.random()) * np.exp(2j * np.pi * rng.random())
        phi = MoebiusMap.disk_automorphism(a, float(2 * np.pi * rng.random()))
        lam = sample_density(pullback(HYPERBOLIC, phi), GridSpec(0, 0.7, h))
        pull = max(pull, curvature(lam, -1).max_abs_deviation_from_c)
        v = pullback(HYPERBOLIC, phi)(z)
        pointwise = max(pointwise, float(np.max(np.abs(v / HYPERBOLIC.density(z) - 1))))
    base = sample_density(HYPERBOLIC.density, GridSpec(0, 0.7, h))
    k0 = curvature(base).curvature_grid
    ok = ~np.isnan(k0)
    scaling = max(float(np.max(np.abs(curvature(scale_density(base, s)).curvature_grid[ok] - k0[ok] / s ** 2)))
                  for s in (0.5, 2, 3))
    verdict(6, "curvature suite", {
        f"hyperbolic {d_hyp:.1e} <= 1e-3": d_hyp <= 1e-3,
        f"euclidean {d_euc:.1e} <= 1e-6": d_euc <= 1e-6,
        f"spherical {d_sph:.1e} <= 1e-3": d_sph <= 1e-3,
        f"pullback curvature {pull:.1e} <= 5e-3": pull <= 5e-3,
        f"scaling identity {scaling:.1e} <= 5e-3": scaling <= 5e-3,
        f"automorphism invariance {pointwise:.1e} <= 1e-12": pointwise <= 1e-12,
    }, t0, 30)


def test_07_harmonic_glue(verdict):
    t0 = time.perf_counter()
    g = harmonic_glue(lambda z: np.exp(np.real(z)), lambda z: np.ones(np.shape(z)), 8, ClosedDisk(0, 1),
                      1e-3, degree_cap=40)
    verdict(7, "harmonic glue", {
        f"e1 {g.e1:.1e}, e2 {g.e2:.1e} <= 1e-3": max(g.e1, g.e2) <= 1e-3,
        f"degree {g.degree} <= 40": g.degree <= 40,
    }, t0, 10)


def test_08_finite_universality(verdict):
    t0 = time.perf_counter()
    K = ClosedDisk(0, 1)
    targets = [rat(0, 1), exp_taylor(12), RationalFunction(Polynomial([1]), Polynomial([1, -0.1]))]
    orbit = build_finite_universal(targets, K, Translations(8), 1e-3)
    metric = metric_orbit_experiment(targets[:2], EUCLIDEAN, K, Translations(8), 1e-3)
    verdict(8, "finite-stage universality", {
        "orbit errors " + ", ".join(f"{e:.1e}" for e in orbit.errors) + " <= 1e-3":
            all(e <= 1e-3 for e in orbit.errors),
        f"critical-point certificate {orbit.certificate_counts}": orbit.verdict,
        "metric errors " + ", ".join(f"{e:.1e}" for e in metric.errors) + " <= 2e-3":
            all(e <= 2e-3 for e in metric.errors),
    }, t0, 60)


class _Square:
    def __call__(self, z):
        return np.asarray(z, dtype=complex) ** 2

    def deriv(self, z):
        return 2 * np.asarray(z, dtype=complex)


def test_09_diagnostics(verdict):
    t0 = time.perf_counter()
    from univalent.universality import Explicit
    rotations = Explicit(tuple(MoebiusMap(np.exp(1j * n), 0, 0, 1) for n in range(1, 101)))
    verdict(9, "sequence diagnostics", {
        "runaway index of Translations(1) is 3": runaway_index(Translations(1), ClosedDisk(0, 1), 10) == 3,
        "rotations never run away": runaway_index(rotations, ClosedDisk(0, 0.5), 100) is None,
        "z^2 not injective on the unit disk": not injectivity_check(_Square(), ClosedDisk(0, 1)),
        "z^2 injective on D(2, 1/2)": injectivity_check(_Square(), ClosedDisk(2, 0.5)),
    }, t0, 1)


def test_10_covering(verdict):
    t0 = time.perf_counter()
    rng = np.random.default_rng(SEED)
    psi = covering_map_special(PuncturedUnitDisk())
    z = 0.999 * np.sqrt(rng.random(1000)) * np.exp(2j * np.pi * rng.random(1000))
    w = psi(z)
    verdict(10, "punctured disk covering", {
        "psi(0) = 1/e": abs(psi(np.array([0j]))[0] - math.exp(-1)) <= 1e-14,
        "1000 points land in the punctured disk": bool(np.all((np.abs(w) > 0) & (np.abs(w) < 1))),
        "derivative never vanishes": bool(np.all(psi.deriv(z) != 0)),
    }, t0, 1)


def test_11_determinism(verdict, tmp_path):
    t0 = time.perf_counter()
    prints = {}
    for kind in ("counterexample", "orbit"):
        for run in ("first", "second"):
            out = tmp_path / f"{kind}-{run}"
            proc = subprocess.run([sys.executable, "-m", "univalent", kind, "--out", str(out)],
                                  capture_output=True, text=True, timeout=300)
            rec = json.loads((out / f"{kind}.json").read_text()) if proc.returncode == 0 else {}
            prints[(kind, run)] = rec.get("fingerprint")
    verdict(11, "deterministic fingerprints", {
        f"{kind} fingerprints agree": prints[(kind, "first")] is not None
        and prints[(kind, "first")] == prints[(kind, "second")]
        for kind in ("counterexample", "orbit")
    }, t0, math.inf)
