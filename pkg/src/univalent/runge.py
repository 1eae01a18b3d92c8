"""Zero-free Runge approximation, functional matching by Newton's method and
locally univalent approximants built as antiderivatives.

The approximants have the form ``B(z) exp(q(z))`` where
``B = prod (z - p_k)^{m_k}`` only has branch points at punctures of the
ambient domain (or outside it), so they cannot vanish there.  ``q`` is a
sum of *terms*: least-squares fitted series plus Newton corrections.  Every
term is a callable with a ``deriv`` method.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .arnoldi import ArnoldiSeries, arnoldi
from .errors import (
    DegreeCapExceeded,
    IllConditioned,
    InsufficientSamples,
    NoConvergence,
    NotLocallyUnivalent,
    OverlappingPieces,
    PoleOnCompact,
    PreconditionError,
    SingularJacobian,
    TargetNonFinite,
    UnsupportedDomain,
    WindingMismatch,
    ZeroOnCompact,
)
from .foundation import (
    INF,
    Annulus,
    ClosedDisk,
    CompactRegion,
    Contour,
    DiskUnion,
    DomainSpec,
    HoledDisk,
    SampleSet,
    argument_count,
    boundary_samples,
    gauss_legendre,
    interior_grid,
    segment_integrals,
)
from .rational import Polynomial, RationalFunction, certify_local_univalence, differentiate

DEGREE_START = 8
DEGREE_CAP = 256
NEWTON_TOL = 1e-10
NEWTON_MAX_ITER = 25
JACOBIAN_COND_MAX = 1e8
LS_COND_MAX = 1e10

# exp(q) is clamped at this magnitude instead of underflowing to zero
_TINY = 1e-300
_LOG_TINY = math.log(_TINY)


# ---------------------------------------------------------------------------
# Terms of the exponent
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ConstantTerm:
    value: complex = 1.0

    def __call__(self, z):
        return np.full(np.shape(z), self.value, dtype=complex)

    def deriv(self, z):
        return np.zeros(np.shape(z), dtype=complex)

    def scaled(self, c):
        return ConstantTerm(self.value * c)


@dataclass(frozen=True)
class InversePowerTerm:
    """``coef / (z - pole)^power``."""

    pole: complex
    power: int = 1
    coef: complex = 1.0

    def __call__(self, z):
        with np.errstate(all="ignore"):
            return self.coef / (np.asarray(z, dtype=complex) - self.pole) ** self.power

    def deriv(self, z):
        with np.errstate(all="ignore"):
            return -self.power * self.coef / (np.asarray(z, dtype=complex) - self.pole) ** (self.power + 1)

    def scaled(self, c):
        return InversePowerTerm(self.pole, self.power, self.coef * c)


@dataclass(frozen=True)
class MonomialTerm:
    """``coef ((z - center) / scale)^power``."""

    center: complex
    scale: float
    power: int
    coef: complex = 1.0

    def __call__(self, z):
        return self.coef * ((np.asarray(z, dtype=complex) - self.center) / self.scale) ** self.power

    def deriv(self, z):
        if self.power == 0:
            return np.zeros(np.shape(z), dtype=complex)
        t = (np.asarray(z, dtype=complex) - self.center) / self.scale
        return self.coef * self.power * t ** (self.power - 1) / self.scale

    def scaled(self, c):
        return MonomialTerm(self.center, self.scale, self.power, self.coef * c)


@dataclass(frozen=True)
class BranchInverseTerm:
    """``coef / ((z - pole) B(z))`` with ``B`` the branch factor."""

    pole: complex
    branch_points: tuple
    coef: complex = 1.0

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        with np.errstate(all="ignore"):
            return self.coef / ((z - self.pole) * branch_factor(self.branch_points, z))

    def deriv(self, z):
        z = np.asarray(z, dtype=complex)
        with np.errstate(all="ignore"):
            ld = 1 / (z - self.pole) + branch_log_derivative(self.branch_points, z)
        return -self(z) * ld

    def scaled(self, c):
        return BranchInverseTerm(self.pole, self.branch_points, self.coef * c)


def branch_factor(branch_points, z):
    z = np.asarray(z, dtype=complex)
    out = np.ones(z.shape, dtype=complex)
    with np.errstate(all="ignore"):
        for p, m in branch_points:
            out = out * (z - p) ** m
    return out


def branch_log_derivative(branch_points, z):
    z = np.asarray(z, dtype=complex)
    out = np.zeros(z.shape, dtype=complex)
    with np.errstate(all="ignore"):
        for p, m in branch_points:
            out = out + m / (z - p)
    return out


def _safe_exp(q):
    """``exp(q)`` with underflow clamped to a tiny nonzero modulus and
    overflow (or a non-finite exponent) mapped to :data:`INF`."""
    q = np.asarray(q, dtype=complex)
    re = np.maximum(q.real, _LOG_TINY)
    with np.errstate(over="ignore", invalid="ignore"):
        out = np.exp(re + 1j * q.imag)
    bad = ~np.isfinite(out)
    if np.any(bad):
        out = np.where(bad, INF, out)
    return out


# ---------------------------------------------------------------------------
# Zero-free approximants
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ZeroFreeApproximant:
    """``B(z) exp(q(z))`` with ``B = prod (z - p)^m`` and ``q = sum(terms)``."""

    branch_points: tuple = ()
    terms: tuple = ()
    degree: int = 0

    def exponent(self, z):
        z = np.asarray(z, dtype=complex)
        out = np.zeros(z.shape, dtype=complex)
        for t in self.terms:
            out = out + t(z)
        return out

    def exponent_deriv(self, z):
        z = np.asarray(z, dtype=complex)
        out = np.zeros(z.shape, dtype=complex)
        for t in self.terms:
            out = out + t.deriv(z)
        return out

    def branch(self, z):
        return branch_factor(self.branch_points, z)

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        e = _safe_exp(self.exponent(z))
        with np.errstate(all="ignore"):
            out = self.branch(z) * e
        return np.where(np.isfinite(out), out, INF)

    def log_derivative(self, z):
        return branch_log_derivative(self.branch_points, z) + self.exponent_deriv(z)

    def deriv(self, z):
        return self(z) * self.log_derivative(z)

    def with_terms(self, extra):
        return replace(self, terms=self.terms + tuple(extra))

    def exp_part(self):
        """Laurent data of the exponent: ``(polynomial in z, {puncture:
        polynomial in 1/(z - puncture)})``.  Corrections that are not Laurent
        polynomials are skipped."""
        poly = Polynomial([0])
        laurent = {}
        for t in self.terms:
            if isinstance(t, ArnoldiSeries) and t.pole is None:
                shift = Polynomial([-t.center / t.scale, 1 / t.scale])
                poly = poly + t.to_polynomial().compose(shift)
            elif isinstance(t, ArnoldiSeries):
                lp = t.laurent()
                poly = poly + lp.coef[0]
                laurent[t.pole] = laurent.get(t.pole, Polynomial([0])) + Polynomial(
                    np.concatenate([[0], lp.coef[1:]]))
            elif isinstance(t, ConstantTerm):
                poly = poly + t.value
            elif isinstance(t, InversePowerTerm):
                laurent[t.pole] = laurent.get(t.pole, Polynomial([0])) + Polynomial.monomial(t.power, t.coef)
            elif isinstance(t, MonomialTerm):
                shift = Polynomial([-t.center / t.scale, 1 / t.scale])
                poly = poly + (shift ** t.power) * t.coef
        return poly, laurent


@dataclass(frozen=True)
class ApproximationReport:
    degree_used: int
    certified_sup_error: float
    newton_iterations: int = 0
    final_residual_norm: float = 0.0
    samples_used: int = 0
    correction: tuple = ()


# ---------------------------------------------------------------------------
# Least squares
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LaurentBasis:
    """Polynomial part of ``degree`` in ``(z - center)/scale`` plus, per
    puncture ``(p, d)`` or ``(p, d, rho)``, powers ``1..d`` of
    ``rho/(z - p)``.  ``rho`` defaults to the distance from ``p`` to the
    samples."""

    degree: int
    center: complex = 0j
    scale: float = 1.0
    poles: tuple = ()

    @property
    def size(self):
        return self.degree + 1 + sum(int(p[1]) for p in self.poles)


@dataclass(frozen=True)
class LSFit:
    series: tuple
    certified_sup_error: float
    condition: float
    samples_used: int

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        out = np.zeros(z.shape, dtype=complex)
        for s in self.series:
            out = out + s(z)
        return out

    def deriv(self, z):
        z = np.asarray(z, dtype=complex)
        out = np.zeros(z.shape, dtype=complex)
        for s in self.series:
            out = out + s.deriv(z)
        return out


def _points_of(samples):
    if isinstance(samples, SampleSet):
        return samples.points
    return np.asarray(samples, dtype=complex).ravel()


def fit_analytic_ls(samples, values, basis: LaurentBasis, validation=None, weights=None) -> LSFit:
    """Least-squares fit of ``values`` at ``samples`` in an Arnoldi-orthogonalized
    Laurent basis.

    Columns are scaled to unit norm before a QR factorization.  The error is
    certified on ``validation = (points, values)`` when given (it should be
    a denser set disjoint from the fit set), else on the fit set itself.
    Optional positive ``weights`` scale the rows of the fit.
    """
    z = _points_of(samples)
    f = np.asarray(values, dtype=complex).ravel()
    if f.shape != z.shape:
        raise PreconditionError("values and samples differ in length")
    if not np.all(np.isfinite(f)):
        raise TargetNonFinite("target values are not finite")
    if z.size < 4 * basis.size:
        raise InsufficientSamples(f"{z.size} samples for a basis of size {basis.size}")

    blocks, parts = [], []
    Q, H = arnoldi((z - basis.center) / basis.scale, basis.degree)
    blocks.append(Q)
    parts.append((H, basis.center, basis.scale, None, 0))
    for entry in basis.poles:
        p, d = complex(entry[0]), int(entry[1])
        rho = float(entry[2]) if len(entry) > 2 else float(np.min(np.abs(z - p)))
        if d < 1:
            continue
        Qp, Hp = arnoldi(rho / (z - p), d)
        blocks.append(Qp[:, 1:])
        parts.append((Hp, 0j, rho, p, 1))
    A = np.hstack(blocks)
    if weights is not None:
        wts = np.asarray(weights, dtype=float).ravel()
        A = A * wts[:, None]
        f = f * wts
    norms = np.linalg.norm(A, axis=0)
    norms[norms == 0] = 1
    As = A / norms
    Qr, R = np.linalg.qr(As)
    sv = np.linalg.svd(R, compute_uv=False)
    cond = float(sv[0] / sv[-1]) if sv[-1] > 0 else math.inf
    if cond > LS_COND_MAX:
        raise IllConditioned(f"least-squares matrix condition {cond:.3g} exceeds 1e10")
    c = np.linalg.solve(R, Qr.conj().T @ f) / norms

    series, k = [], 0
    for H_, center, scale, pole, skip in parts:
        n = H_.shape[1] + 1 - skip
        coef = np.zeros(H_.shape[1] + 1, dtype=complex)
        coef[skip:] = c[k:k + n]
        k += n
        series.append(ArnoldiSeries(H_, coef, center, scale, pole))
    fit = LSFit(tuple(series), 0.0, cond, int(z.size))
    if validation is not None:
        vz, vf = _points_of(validation[0]), np.asarray(validation[1], dtype=complex).ravel()
    else:
        vz, vf = z, np.asarray(values, dtype=complex).ravel()
    err = float(np.max(np.abs(fit(vz) - vf)))
    return replace(fit, certified_sup_error=err)


# ---------------------------------------------------------------------------
# Branch-consistent logarithms on region boundaries
# ---------------------------------------------------------------------------

def _unwrap(h: Callable, path: Callable, params: np.ndarray, start_log: complex,
            max_refine=4, jump=np.pi / 2):
    """Continue ``log h`` along ``path(params)`` from ``start_log`` at
    ``path(params[0])``; intermediate parameters are inserted until no
    adjacent phase jump reaches ``jump``."""
    t = np.asarray(params, dtype=float)
    keep = np.arange(t.size)
    for _ in range(max_refine + 1):
        vals = h(path(t))
        if not np.all(np.isfinite(vals)) or np.any(vals == 0):
            raise ZeroOnCompact("target vanishes or is singular on the continuation path")
        ph = np.angle(vals)
        d = np.diff(ph)
        d = (d + np.pi) % (2 * np.pi) - np.pi
        if np.all(np.abs(d) < jump):
            phase = np.concatenate([[0], np.cumsum(d)])
            out = np.log(np.abs(vals)) + 1j * phase
            return (out + (start_log - out[0]))[keep]
        mid = (t[:-1] + t[1:]) / 2
        new = np.empty(2 * t.size - 1)
        new[0::2], new[1::2] = t, mid
        t = new
        keep = keep * 2
    raise NoConvergence("phase unwrapping did not resolve after refinement")


def _arc(center, radius):
    return lambda th: center + radius * np.exp(1j * th)


def _segment(a, b):
    return lambda s: a + (b - a) * s


def _segment_clear(a, b, disks, tol=1e-9):
    """Whether the segment a-b avoids the open disks ``(center, radius)``."""
    d = b - a
    for c, r in disks:
        if d == 0:
            dist = abs(a - c)
        else:
            s = np.clip(((c - a) * np.conj(d)).real / abs(d) ** 2, 0, 1)
            dist = abs(a + s * d - c)
        if dist < r * (1 - tol):
            return False
    return True


def _hole_connector(comp, hole):
    """A straight connector from the outer circle to a hole circle avoiding
    the other holes: returns (outer angle, outer point, hole angle)."""
    c_h, r_h = hole
    others = [h for h in comp.holes if h is not hole]
    base = np.angle(c_h - comp.center) if c_h != comp.center else 0.0
    for k in range(16):
        th = base + (k // 2 + k % 2) * (np.pi / 8) * (1 if k % 2 == 0 else -1)
        u = np.exp(1j * th)
        a = c_h + r_h * u
        # ray a + s u meets the outer circle |z - c| = R
        w = a - comp.center
        bq = (w * np.conj(u)).real
        s = -bq + math.sqrt(bq * bq - (abs(w) ** 2 - comp.radius ** 2))
        p = a + s * u
        if _segment_clear(a, p, others):
            return float(np.angle(p - comp.center)) % (2 * np.pi), p, th
    raise UnsupportedDomain("no straight connector from the outer circle to a hole")


def boundary_log(h: Callable, region: CompactRegion, n: int, offset=0.0):
    """``log h`` on ``boundary_samples(region, n, offset)`` with one branch
    per component, continued from the principal value at angle 0 of the
    outer circle.  ``h`` must be zero-free with zero winding around every
    hole."""
    out = []
    base = 2 * np.pi * (np.arange(n) + offset) / n
    for comp in region.components():
        arc = _arc(comp.center, comp.radius)
        start = complex(np.log(complex(h(np.array([arc(0.0)]))[0])))
        out.append(_unwrap(h, arc, np.concatenate([[0.0], base]), start)[1:])
        for hole in comp.holes:
            phi, p, th = _hole_connector(comp, hole)
            arc_pts = np.linspace(0.0, phi, max(2, int(np.ceil(phi / (2 * np.pi) * n)) + 1))
            at_p = _unwrap(h, arc, arc_pts, start)[-1]
            a = hole[0] + hole[1] * np.exp(1j * th)
            seg = np.linspace(0.0, 1.0, max(2, int(np.ceil(abs(a - p) / (2 * np.pi * hole[1] / n))) + 1))
            at_a = _unwrap(h, _segment(p, a), seg, at_p)[-1]
            rel = (base - th) % (2 * np.pi)
            order = np.argsort(rel)
            harc = _arc(hole[0], hole[1])
            logs = _unwrap(h, lambda s: harc(th + s), np.concatenate([[0.0], rel[order]]), at_a)[1:]
            vals = np.empty(n, dtype=complex)
            vals[order] = logs
            out.append(vals)
    return np.concatenate(out)


# ---------------------------------------------------------------------------
# Zero-free Runge approximation
# ---------------------------------------------------------------------------

def _check_domain(K: CompactRegion, omega: DomainSpec):
    if not omega.contains_region(K):
        raise UnsupportedDomain("compact set is not contained in the domain")


def _hole_punctures(K: CompactRegion, omega: DomainSpec):
    """For every hole, the puncture of the domain closest to its centre (or
    a point outside the domain), or None."""
    out = []
    pts = list(getattr(omega, "punctures", ()))
    for c, r in K.holes():
        inside = [p for p in pts if abs(p - c) < r]
        if not inside and not bool(omega.contains(np.array([c]))[0]):
            inside = [c]
        out.append(min(inside, key=lambda p: abs(p - c)) if inside else None)
    return out


def _geometry(K: CompactRegion):
    xmin, xmax, ymin, ymax = K.bounding_box()
    return complex((xmin + xmax) / 2, (ymin + ymax) / 2), max(xmax - xmin, ymax - ymin) / 2


def _fit_zero_free(target: Callable, K: CompactRegion, branch_points, laurent_poles, eps,
                   degree_start=DEGREE_START, degree_cap=DEGREE_CAP):
    """Escalating-degree fit of ``log(target / B)`` on the boundary of K."""
    center, scale = _geometry(K)
    ncirc = len(K.boundary_contours())

    def h(z):
        with np.errstate(all="ignore"):
            return target(z) / branch_factor(branch_points, z)

    best = math.inf
    d = degree_start
    while True:
        poles = tuple((p, d, rho) for p, rho in laurent_poles)
        basis = LaurentBasis(d, center, scale, poles)
        n = max(64, int(math.ceil(4 * basis.size / ncirc)))
        fit_pts = boundary_samples(K, n).points
        logs = boundary_log(h, K, n)
        val_pts = boundary_samples(K, 2 * n, 0.5).points
        fit = fit_analytic_ls(fit_pts, logs, basis)
        approx = ZeroFreeApproximant(tuple(branch_points), fit.series, d)
        with np.errstate(all="ignore"):
            err = float(np.max(np.abs(approx(val_pts) - target(val_pts))))
        if not np.isfinite(err):
            err = math.inf
        if err < best:
            best, best_pair = err, (approx, fit_pts.size)
        if best <= eps:
            approx, used = best_pair
            return approx, ApproximationReport(approx.degree, best, 0, 0.0, used)
        if d >= degree_cap:
            raise DegreeCapExceeded(
                f"certified error {best:.3g} above {eps:.3g} at degree cap {degree_cap}", best)
        d = min(2 * d, degree_cap)


def zero_free_runge(g: RationalFunction, K: CompactRegion, omega: DomainSpec, eps: float,
                    degree_cap=DEGREE_CAP):
    """Approximate ``g`` on ``K`` by ``B exp(q)``, zero-free on ``omega``."""
    if not eps > 0:
        raise PreconditionError("eps must be positive")
    _check_domain(K, omega)
    for z0 in g.zeros():
        if K.contains(z0, tol=1e-8):
            raise ZeroOnCompact(f"g vanishes at {z0} in K")
    for p in g.poles():
        if K.contains(p, tol=1e-8):
            raise PoleOnCompact(f"g has a pole at {p} in K")
    dg = differentiate(g)
    branch, laurent = [], []
    for (c, r), p in zip(K.holes(), _hole_punctures(K, omega)):
        m = argument_count(lambda z: dg(z) / g(z), Contour(c, r, 1, 256))
        if m != 0:
            if p is None:
                raise WindingMismatch(
                    f"g winds {m} times around the hole at {c} but the domain has no puncture there")
            branch.append((p, m))
        if p is not None:
            laurent.append((p, r - abs(p - c)))
    return _fit_zero_free(g, K, branch, laurent, eps, degree_cap=degree_cap)


# ---------------------------------------------------------------------------
# Functionals and Newton matching
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Period:
    contour: Contour
    target: complex

    def nodes_weights(self):
        return self.contour.nodes(), self.contour.weights()


@dataclass(frozen=True)
class ValueGap:
    """``int_path phi dz`` along a polyline, compared with ``target``."""

    path: tuple
    target: complex
    panels: int = 8
    order: int = 16

    def nodes_weights(self):
        pts = np.asarray(self.path, dtype=complex)
        x, w = gauss_legendre(self.order)
        nodes, weights = [], []
        for a, b in zip(pts[:-1], pts[1:]):
            t = ((np.arange(self.panels)[:, None] + (x[None, :] + 1) / 2) / self.panels).ravel()
            nodes.append(a + (b - a) * t)
            weights.append(np.tile(w / 2 / self.panels, self.panels) * (b - a))
        return np.concatenate(nodes), np.concatenate(weights)


@dataclass(frozen=True)
class CorrectionBasis:
    functions: tuple

    def __len__(self):
        return len(self.functions)


def _jacobian_condition(J, scale):
    sv = np.linalg.svd(J, compute_uv=False)
    if sv[-1] <= 1e-12 * max(scale, 1e-300):
        return math.inf
    return float(sv[0] / sv[-1])


def _newton(evaluate, s, goal, tol, max_iter):
    """Damped Newton for ``F(s) = goal``; returns ``(s, residual, iterations)``."""
    F, J = evaluate(s)
    r = F - goal
    res = float(np.linalg.norm(r))
    it = 0
    polished = False
    while True:
        if res <= tol:
            if polished or it == 0 or it >= max_iter:
                return s, res, it
            polished = True
        elif it >= max_iter:
            raise NoConvergence(f"Newton residual {res:.3g} after {max_iter} iterations")
        try:
            step = np.linalg.solve(J, -r)
        except np.linalg.LinAlgError as exc:
            raise SingularJacobian("Newton Jacobian became singular") from exc
        it += 1
        lam = 1.0
        for _ in range(9):
            s_new = s + lam * step
            F_new, J_new = evaluate(s_new)
            r_new = F_new - goal
            res_new = float(np.linalg.norm(r_new))
            if np.isfinite(res_new) and (res_new <= res or res <= tol):
                break
            lam /= 2
        else:
            raise NoConvergence("damped Newton step failed to reduce the residual")
        s, r, J, res = s_new, r_new, J_new, res_new


def match_functionals(base: ZeroFreeApproximant, basis: CorrectionBasis,
                      functionals: Sequence, tol=NEWTON_TOL, max_iter=NEWTON_MAX_ITER,
                      diagonal_seed=False):
    """Find ``s`` with ``F_k(exp(sum s_j w_j) base) = target_k`` by damped
    Newton iteration; quadrature nodes are fixed up front.  When Newton
    from ``s = 0`` fails, the targets are approached by continuation from
    the values at ``s = 0`` in 8, 32 and then 128 stages.  With
    ``diagonal_seed`` each ``s_k`` is first chosen on a grid as if only the
    ``k``-th correction acted on the ``k``-th functional."""
    n = len(functionals)
    if len(basis) != n:
        raise PreconditionError("basis size must equal the number of functionals")
    if n == 0:
        return base, ApproximationReport(base.degree, math.nan, 0, 0.0, 0)
    nw = [F.nodes_weights() for F in functionals]
    targets = np.array([F.target for F in functionals], dtype=complex)
    b_vals = [base(z) for z, _ in nw]
    w_vals = [np.array([w(z) for w in basis.functions]) for z, _ in nw]  # (n_basis, nodes)
    used = sum(z.size for z, _ in nw)

    def evaluate(s):
        F = np.empty(n, dtype=complex)
        J = np.empty((n, n), dtype=complex)
        with np.errstate(all="ignore"):
            for k, ((z, wt), bv, wv) in enumerate(zip(nw, b_vals, w_vals)):
                phi = bv * np.exp(s @ wv)
                F[k] = np.sum(phi * wt)
                J[k] = wv @ (phi * wt)
        return F, J

    s0 = np.zeros(n, dtype=complex)
    F0, J = evaluate(s0)
    if diagonal_seed:
        grid = (np.arange(-8, 8.25, 0.5)[:, None] + 1j * np.arange(-8, 8.1, 0.25)[None, :]).ravel()
        for k, ((z, wt), bv, wv) in enumerate(zip(nw, b_vals, w_vals)):
            with np.errstate(all="ignore"):
                vals = np.exp(np.outer(grid, wv[k])) @ (bv * wt)
            miss = np.abs(vals - targets[k])
            miss = np.where(np.isfinite(miss), miss, np.inf) + 1e-6 * np.abs(grid)
            s0[k] = grid[int(np.argmin(miss))]
    scale = max(float(np.max([np.sum(np.abs(bv * wt)) * np.max(np.abs(wv))
                              for (z, wt), bv, wv in zip(nw, b_vals, w_vals)])), 1e-300)
    if diagonal_seed:
        F0, J = evaluate(s0)
    if _jacobian_condition(J, scale) > JACOBIAN_COND_MAX:
        raise SingularJacobian("correction Jacobian is singular at the starting point")
    try:
        s, res, it = _newton(evaluate, s0, targets, tol, max_iter)
    except NoConvergence as first:
        for stages in (8, 32, 128):
            s, it = s0, 0
            try:
                for lam in np.arange(1, stages + 1) / stages:
                    goal = F0 + lam * (targets - F0)
                    stage_tol = tol if lam == 1 else max(tol, 1e-6 * float(np.linalg.norm(targets - F0)))
                    s, res, k = _newton(evaluate, s, goal, stage_tol, max_iter)
                    it += k
                break
            except (NoConvergence, SingularJacobian):
                continue
        else:
            raise first
    terms = [w.scaled(sj) for w, sj in zip(basis.functions, s)]
    return base.with_terms(terms), ApproximationReport(base.degree, math.nan, it, res, used, tuple(s))


# ---------------------------------------------------------------------------
# Antiderivatives
# ---------------------------------------------------------------------------

class Antiderivative:
    """``G(z) = G(a) + int_a^z h`` with ``a`` the nearest precomputed anchor
    whose straight segment to ``z`` avoids the forbidden disks."""

    def __init__(self, integrand: ZeroFreeApproximant, anchors, values, forbidden=(), step=0.25,
                 soft_forbidden=()):
        self.integrand = integrand
        self.anchors = np.asarray(anchors, dtype=complex)
        self.values = np.asarray(values, dtype=complex)
        self.forbidden = tuple(forbidden)
        self.soft_forbidden = tuple(soft_forbidden)
        self.step = float(step)

    def _choose(self, z):
        d = np.abs(z[:, None] - self.anchors[None, :])
        order = np.argsort(d, axis=1)[:, :12]
        chosen = order[:, 0].copy()
        for i in range(z.size):
            for disks in (self.soft_forbidden + self.forbidden, self.forbidden):
                hit = next((j for j in order[i]
                            if _segment_clear(self.anchors[j], z[i], disks)), None)
                if hit is not None:
                    chosen[i] = hit
                    break
        return chosen

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        flat = z.ravel()
        idx = self._choose(flat)
        a = self.anchors[idx]
        out = self.values[idx].copy()
        length = np.abs(flat - a)
        panels = np.maximum(1, np.ceil(length / self.step)).astype(int)
        for p in np.unique(panels):
            sel = (panels == p) & (length > 0)
            if np.any(sel):
                out[sel] += segment_integrals(self.integrand, a[sel], flat[sel], panels=int(p))
        return out.reshape(z.shape)

    def deriv(self, z):
        return self.integrand(z)


def _grid_edges(points, spacing):
    """4-neighbour pairs of a square grid (indices)."""
    key = {(int(round(p.real / spacing * 4)), int(round(p.imag / spacing * 4))): i
           for i, p in enumerate(points)}
    edges = []
    for (x, y), i in key.items():
        for dx, dy in ((4, 0), (0, 4)):
            j = key.get((x + dx, y + dy))
            if j is not None:
                edges.append((i, j))
    return edges


def build_anchors(h: Callable, K: CompactRegion, starts, spacing):
    """Antiderivative values on a grid over K, propagated breadth-first from
    ``starts = [(component index, point, value)]`` along segments inside K."""
    holes = K.holes()
    pts_all, vals_all = [], []
    for ci, start, value in starts:
        comp = K.components()[ci]
        sub = comp_region(comp)
        grid = interior_grid(sub, spacing).points
        # grids are anchored at the component centre
        rel = grid - comp.center
        nodes = np.concatenate([[start], grid])
        adj = [[] for _ in range(nodes.size)]
        for i, j in _grid_edges(rel, spacing):
            if _segment_clear(grid[i], grid[j], holes):
                adj[i + 1].append(j + 1)
                adj[j + 1].append(i + 1)
        near = np.argsort(np.abs(grid - start))
        for j in near[:8]:
            if _segment_clear(start, grid[j], holes):
                adj[0].append(j + 1)
                adj[j + 1].append(0)
        G = np.full(nodes.size, np.nan, dtype=complex)
        G[0] = value
        frontier = [0]
        seen = np.zeros(nodes.size, dtype=bool)
        seen[0] = True
        while frontier:
            a_idx, b_idx = [], []
            for i in frontier:
                for j in adj[i]:
                    if not seen[j]:
                        seen[j] = True
                        a_idx.append(i)
                        b_idx.append(j)
            if not b_idx:
                break
            ints = segment_integrals(h, nodes[a_idx], nodes[b_idx], panels=2)
            G[b_idx] = G[a_idx] + ints
            frontier = b_idx
        ok = seen
        pts_all.append(nodes[ok])
        vals_all.append(G[ok])
    return np.concatenate(pts_all), np.concatenate(vals_all)


def comp_region(comp) -> CompactRegion:
    if comp.holes:
        if len(comp.holes) == 1 and comp.holes[0][0] == comp.center:
            return Annulus(comp.center, comp.holes[0][1], comp.radius)
        return HoledDisk(ClosedDisk(comp.center, comp.radius), comp.holes)
    return ClosedDisk(comp.center, comp.radius)


def base_point(K: CompactRegion, spacing=None):
    """Sample point (boundary or grid) nearest the centre of the first
    component's outer circle."""
    comp = K.components()[0]
    spacing = spacing or comp.radius / 4
    cands = np.concatenate([boundary_samples(K, 64).points, interior_grid(K, spacing).points])
    dist = np.round(np.abs(cands - comp.center), 12)
    return complex(cands[np.argmin(dist)])


def _anchor_spacing(K: CompactRegion):
    sizes = [c.radius / 8 for c in K.components()] + [r / 2 for _, r in K.holes()]
    return min(sizes)


@dataclass
class LocallyUnivalentMap:
    """Evaluator ``G`` with ``G' = h`` zero-free; keeps the pieces used to
    build it."""

    derivative: ZeroFreeApproximant
    antiderivative: Antiderivative
    z0: complex
    report: ApproximationReport
    periods: tuple = ()
    value_gaps: tuple = ()
    piece_errors: tuple = field(default=())

    def __call__(self, z):
        return self.antiderivative(z)

    def deriv(self, z):
        return self.derivative(z)

    def log_derivative(self, z):
        return self.derivative.log_derivative(z)


def _puncture_guard(K, omega):
    """Disks around hole punctures that paths must avoid."""
    out = []
    for (c, r), p in zip(K.holes(), _hole_punctures(K, omega)):
        if p is not None:
            out.append((p, 0.5 * (r - abs(p - c))))
    return out


def lu_holomorphic_runge(f: RationalFunction, K: CompactRegion, omega: DomainSpec, eps: float,
                         degree_cap=DEGREE_CAP, retries=3):
    """Approximate a locally univalent rational ``f`` on ``K`` by ``G`` with
    ``G'`` zero-free on ``omega``."""
    if not eps > 0:
        raise PreconditionError("eps must be positive")
    for p in f.poles():
        if K.contains(p, tol=1e-8):
            raise PoleOnCompact(f"f has a pole at {p} in K")
    cert = certify_local_univalence(f, K)
    if not cert.verdict:
        raise NotLocallyUnivalent(
            f"f' has {cert.derivative_zero_count} zero(s) in K")
    g = differentiate(f)
    z0 = base_point(K)
    f0 = complex(f(np.array([z0]))[0])
    spacing = _anchor_spacing(K)
    val = boundary_samples(K, 256, 0.5).points
    eps_g = eps / (math.pi * max(K.diameter, 1e-300))
    best = None
    for _ in range(retries + 1):
        base, rep = zero_free_runge(g, K, omega, eps_g, degree_cap)
        periods, funcs = [], []
        n_nodes = max(256, 8 * base.degree)
        for (c, r), p in zip(K.holes(), _hole_punctures(K, omega)):
            if p is None:
                continue
            periods.append(Period(Contour(c, r, 1, n_nodes), 0.0))
            funcs.append(InversePowerTerm(p))
        basis = CorrectionBasis(tuple(funcs))
        try:
            h, mrep = match_functionals(base, basis, periods)
        except SingularJacobian:
            basis = CorrectionBasis(tuple(BranchInverseTerm(t.pole, base.branch_points) for t in funcs))
            h, mrep = match_functionals(base, basis, periods)
        anchors, values = build_anchors(h, K, [(0, z0, f0)], spacing)
        G = Antiderivative(h, anchors, values, _puncture_guard(K, omega), spacing,
                           soft_forbidden=tuple(K.holes()))
        err = float(np.max(np.abs(G(val) - f(val))))
        report = ApproximationReport(rep.degree_used, err, mrep.newton_iterations,
                                     mrep.final_residual_norm, rep.samples_used + mrep.samples_used)
        best = LocallyUnivalentMap(h, G, z0, report, tuple(periods))
        if err <= eps:
            return best
        eps_g *= 0.1
    raise NoConvergence(f"certified error {best.report.certified_sup_error:.3g} above {eps:.3g}")


# ---------------------------------------------------------------------------
# Gluing local targets on disjoint disks
# ---------------------------------------------------------------------------

def _crosses(p1, p2, q1, q2):
    def orient(a, b, c):
        return ((b - a).conjugate() * (c - a)).imag
    return (orient(p1, p2, q1) * orient(p1, p2, q2) < 0) and (orient(q1, q2, p1) * orient(q1, q2, p2) < 0)


def _corridor_tree(disks):
    """Prim-style tree on the pieces.  An edge joins two centres; its part
    outside the end disks (the corridor) must keep clear of the other disks
    and must not cross earlier corridors.  Returns ``[(parent, child, a, b)]``
    with ``a``, ``b`` the corridor ends on the two circles."""
    n = len(disks)
    inside, edges = [0], []
    while len(inside) < n:
        best = None
        for i in inside:
            for j in range(n):
                if j in inside:
                    continue
                ci, cj = disks[i].center, disks[j].center
                u = (cj - ci) / abs(cj - ci)
                a, b = ci + disks[i].radius * u, cj - disks[j].radius * u
                others = [(d.center, 1.1 * d.radius) for k, d in enumerate(disks) if k not in (i, j)]
                if not _segment_clear(ci, cj, others):
                    continue
                if any(_crosses(a, b, e[2], e[3]) for e in edges):
                    continue
                if best is None or abs(b - a) < abs(best[3] - best[2]):
                    best = (i, j, a, b)
        if best is None:
            raise OverlappingPieces("pieces cannot be joined by clear corridors")
        edges.append(best)
        inside.append(best[1])
    return edges


def _radial_log(dg, center, pts, samples=257):
    """Branch of ``log dg`` continued radially from the centre of a disk
    on which ``dg`` has no zeros."""
    pts = np.atleast_1d(np.asarray(pts, dtype=complex))
    t = np.linspace(0, 1, samples)
    path = center + (pts[:, None] - center) * t[None, :]
    v = dg(path)
    arg = np.unwrap(np.angle(v), axis=1)
    c0 = complex(dg(np.array([center]))[0])
    arg += np.angle(c0) - arg[:, :1]
    return np.log(np.abs(v[:, -1])) + 1j * arg[:, -1]


_HUMP_X, _HUMP_W = gauss_legendre(32)


CORRIDOR_WEIGHT = 1e-6
BUMP_WEIGHT = 1e-4


def _hump(t):
    return 16 * t ** 2 * (1 - t) ** 2


def _hermite(t, la, ma, lb, mb):
    return ((2 * t ** 3 - 3 * t ** 2 + 1) * la + (t ** 3 - 2 * t ** 2 + t) * ma
            + (-2 * t ** 3 + 3 * t ** 2) * lb + (t ** 3 - t ** 2) * mb)


@dataclass(frozen=True)
class Corridor:
    """Segment ``a -> b`` from piece ``parent`` to piece ``child`` with a
    profile for the exponent: cubic Hermite data of the end logarithms plus
    ``alpha`` times a hump, ``alpha`` making the exponential integrate to the
    gap between the end target values.  The profile only steers the fit
    (it enters with a small weight)."""

    parent: int
    child: int
    a: complex
    b: complex
    la: complex
    ma: complex
    lb: complex
    mb: complex
    alpha: complex = 0j

    def points(self, t):
        return self.a + (self.b - self.a) * np.asarray(t, dtype=float)

    def base_log(self, t):
        return _hermite(np.asarray(t, dtype=float), self.la, self.ma, self.lb, self.mb)

    def log_target(self, t):
        return self.base_log(t) + self.alpha * _hump(np.asarray(t, dtype=float))


def _quad_nodes(panels=8):
    t = ((np.arange(panels)[:, None] + (_HUMP_X[None, :] + 1) / 2) / panels).ravel()
    w = np.tile(_HUMP_W / 2 / panels, panels)
    return t, w


def _solve_alpha(cor: Corridor, target: complex):
    """Smallest hump amplitude found: Newton from the best points of a
    coarse grid, keeping the converged root of least modulus."""
    t, w = _quad_nodes()
    base = cor.base_log(t)
    hump = _hump(t)
    L = cor.b - cor.a
    scale = max(1.0, abs(target))

    def residual(alpha):
        with np.errstate(all="ignore"):
            e = np.exp(base[None, :] + np.asarray(alpha)[..., None] * hump[None, :])
            return L * (e @ w) - target, L * ((e * hump) @ w)

    grid = (np.arange(-12, 12.5, 1.0)[:, None] + 1j * np.arange(-30, 30.25, 0.5)[None, :]).ravel()
    r0, _ = residual(grid)
    r0 = np.where(np.isfinite(r0), np.abs(r0), np.inf)
    roots = []
    for start in grid[np.argsort(r0 + 1e-3 * np.abs(grid))[:12]]:
        alpha = complex(start)
        for _ in range(40):
            res, jac = residual(np.array([alpha]))
            res, jac = complex(res[0]), complex(jac[0])
            if not np.isfinite(res) or jac == 0:
                break
            if abs(res) <= 1e-13 * scale:
                roots.append(alpha)
                break
            alpha -= res / jac
    if not roots:
        raise NoConvergence("no corridor profile reaches the required value gap")
    return replace(cor, alpha=min(roots, key=abs))


def _fit_region(disks, corridors, n, offset=0.0):
    """Circle samples per piece and corridor parameters (fit set when
    ``offset`` is 0, interleaved validation set for 0.5)."""
    pts = [boundary_samples(d, n, offset).points for d in disks]
    rmin = min(d.radius for d in disks)
    segs = []
    for c in corridors:
        m = max(16, int(math.ceil(n * abs(c.b - c.a) / (2 * math.pi * rmin))))
        segs.append((np.arange(m) + 0.5 + offset / 2) / (m + 1))
    return pts, segs


def _weighted_fit(disks, corridors, n, circle_values, corridor_values, weight, basis):
    pts, segs = _fit_region(disks, corridors, n)
    z = np.concatenate(pts + [c.points(t) for c, t in zip(corridors, segs)])
    v = np.concatenate([circle_values(k, p) for k, p in enumerate(pts)]
                       + [corridor_values(k, t) for k, t in enumerate(segs)])
    w = np.concatenate([np.ones(p.size) for p in pts] + [np.full(t.size, weight) for t in segs])
    return fit_analytic_ls(z, v, basis, weights=w), int(z.size)


def _corridor_bump(k, disks, corridors, center, scale, tol=1e-10, degree_cap=128):
    """Polynomial close to zero on every piece circle, steered towards the
    hump on corridor ``k`` and towards zero on the other corridors; scaled
    to mean one along corridor ``k``."""
    best, d = None, DEGREE_START
    while True:
        n = max(64, int(math.ceil(4 * (d + 1) / len(disks))))
        fit, _ = _weighted_fit(
            disks, corridors, n, lambda j, p: np.zeros(p.size, dtype=complex),
            lambda j, t: (_hump(t) if j == k else np.zeros(t.size)).astype(complex),
            BUMP_WEIGHT, LaurentBasis(d, center, scale))
        vpts, _ = _fit_region(disks, [], 2 * n, 0.5)
        # normalize to unit mean on the own corridor; what matters is the
        # size left on the pieces relative to that
        t = (np.arange(64) + 0.5) / 64
        mean = complex(np.mean(fit(corridors[k].points(t))))
        if abs(mean) < 1e-3:
            err = math.inf
        else:
            err = max(float(np.max(np.abs(fit(p)))) for p in vpts) / abs(mean)
        if best is None or err < best[1]:
            best = (fit.series[0].scaled(1 / mean) if np.isfinite(err) else fit.series[0], err)
        if best[1] <= tol or d >= degree_cap:
            return best
        d = min(2 * d, degree_cap)


def glue_targets(pieces, omega: DomainSpec, eps: float, degree_cap=DEGREE_CAP, retries=3):
    """Locally univalent ``G`` with ``|G - g_n| <= eps`` on every disk.

    ``G' = exp(q)`` with ``q`` fitted to ``log g_n'`` on the piece circles
    and to a profile on straight corridors joining the pieces; the profile
    is chosen so that the corridor integrals bridge the target values, and
    Newton matching with corridor humps removes the remaining mismatch."""
    if not eps > 0:
        raise PreconditionError("eps must be positive")
    disks = [d for d, _ in pieces]
    targets = [t if isinstance(t, RationalFunction) else RationalFunction.from_polynomial(t)
               for _, t in pieces]
    for i, a in enumerate(disks):
        for b in disks[i + 1:]:
            if abs(a.center - b.center) <= a.radius + b.radius:
                raise OverlappingPieces("piece disks overlap")
    if not omega.simply_connected:
        raise UnsupportedDomain("gluing needs a simply connected domain")
    K = DiskUnion(tuple(disks))
    _check_domain(K, omega)
    derivs, second = [], []
    for d, t in zip(disks, targets):
        for p in t.poles():
            if d.contains(p, tol=1e-8):
                raise PoleOnCompact(f"target has a pole at {p} on its piece")
        if not certify_local_univalence(t, d).verdict:
            raise NotLocallyUnivalent(f"target on the disk at {d.center} has a critical point")
        derivs.append(differentiate(t))
        second.append(differentiate(derivs[-1]))

    def value(k, z):
        return complex(targets[k](np.array([z]))[0])

    corridors = []
    for i, j, a, b in (_corridor_tree(disks) if len(disks) > 1 else []):
        la = complex(_radial_log(derivs[i], disks[i].center, a)[0])
        lb = complex(_radial_log(derivs[j], disks[j].center, b)[0])
        ma = complex((second[i](np.array([a])) / derivs[i](np.array([a])))[0]) * (b - a)
        mb = complex((second[j](np.array([b])) / derivs[j](np.array([b])))[0]) * (b - a)
        cor = Corridor(i, j, a, b, la, ma, lb, mb)
        corridors.append(_solve_alpha(cor, value(j, b) - value(i, a)))

    center, scale = _geometry(K)
    bumps = [_corridor_bump(k, disks, corridors, center, scale)[0] for k in range(len(corridors))]
    functionals = []
    for cor in corridors:
        ca, cb = disks[cor.parent].center, disks[cor.child].center
        panels = max(8, int(math.ceil(abs(cb - ca) / (0.05 * disks[cor.child].radius))))
        functionals.append(ValueGap((ca, cb), value(cor.child, cb) - value(cor.parent, ca), panels=panels))

    val = [boundary_samples(d, 256, 0.5).points for d in disks]
    eps_g = eps / (2 * max(max(d.radius for d in disks), 1e-300))
    step = min(d.radius for d in disks) / 8
    best = None
    for _ in range(retries + 1):
        base, degree, samples = _fit_glue_exponent(disks, derivs, corridors, center, scale, eps_g, degree_cap)
        h, mrep = match_functionals(base, CorrectionBasis(tuple(bumps)), functionals, diagonal_seed=True)
        starts = {0: value(0, disks[0].center)}
        for cor, F in zip(corridors, functionals):
            z, w = F.nodes_weights()
            starts[cor.child] = starts[cor.parent] + complex(np.sum(h(z) * w))
        anchors, values = build_anchors(h, K, [(k, disks[k].center, v) for k, v in sorted(starts.items())],
                                        step)
        G = Antiderivative(h, anchors, values, (), step)
        errs = tuple(float(np.max(np.abs(G(v) - t(v)))) for v, t in zip(val, targets))
        report = ApproximationReport(degree, max(errs), mrep.newton_iterations,
                                     mrep.final_residual_norm, samples + mrep.samples_used,
                                     mrep.correction)
        best = LocallyUnivalentMap(h, G, disks[0].center, report, (), tuple(functionals), errs)
        if max(errs) <= eps:
            return best
        eps_g *= 0.1
    raise NoConvergence(f"piece errors {best.piece_errors} above {eps:.3g}")


def _fit_glue_exponent(disks, derivs, corridors, center, scale, eps, degree_cap):
    """Escalating-degree fit of the exponent; the error is certified on
    offset piece samples against the target derivatives."""
    best, d = None, DEGREE_START
    while True:
        n = max(64, int(math.ceil(4 * (d + 1) / len(disks))))
        fit, used = _weighted_fit(
            disks, corridors, n, lambda k, p: _radial_log(derivs[k], disks[k].center, p),
            lambda k, t: corridors[k].log_target(t), CORRIDOR_WEIGHT, LaurentBasis(d, center, scale))
        approx = ZeroFreeApproximant((), fit.series, d)
        vpts, _ = _fit_region(disks, [], 2 * n, 0.5)
        with np.errstate(all="ignore"):
            err = max(float(np.max(np.abs(approx(p) - g(p)))) for p, g in zip(vpts, derivs))
        if not np.isfinite(err):
            err = math.inf
        if best is None or err < best[1]:
            best = (approx, err, used)
        if best[1] <= eps:
            return best[0], best[0].degree, best[2]
        if d >= degree_cap:
            raise DegreeCapExceeded(
                f"certified error {best[1]:.3g} above {eps:.3g} at degree cap {degree_cap}", best[1])
        d = min(2 * d, degree_cap)
