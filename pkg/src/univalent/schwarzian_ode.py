"""Linear ODE ``w'' + (p/2) w = 0`` along complex paths; meromorphic
functions as quotients of two solutions.

If ``u1, u2`` solve the equation and are independent then ``u1/u2`` has
Schwarzian ``p``.  Conversely the frame ``u2 = f'^(-1/2)``, ``u1 = f u2``
recovers ``f`` itself from ``S_f``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import (
    ComplementNotConnected,
    DegenerateFrame,
    DegreeCapExceeded,
    NotLocallyUnivalent,
    PathMismatch,
    PoleOnContour,
    PreconditionError,
    StepUnderflow,
    UnsupportedDomain,
)
from .foundation import (
    INF,
    ClosedDisk,
    CompactRegion,
    Contour,
    DiskUnion,
    boundary_samples,
    chordal_distance,
    contour_integral,
    default_node_count,
    interior_grid,
)
from .rational import RationalFunction, certify_local_univalence, differentiate, schwarzian
from .runge import DEGREE_CAP, DEGREE_START, ApproximationReport, LaurentBasis, fit_analytic_ls

# Dormand-Prince 5(4)
_C = np.array([0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1, 1])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B5 = np.array([35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0])
_B4 = np.array([5179 / 57600, 0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
_E = _B5 - _B4


@dataclass(frozen=True)
class SchwarzianODE:
    """``w'' + (p/2) w = 0``; ``coefficient`` is any vectorized callable
    (a :class:`Polynomial`, a fitted series, ...)."""

    coefficient: Callable

    def p(self, z):
        return np.asarray(self.coefficient(np.asarray(z, dtype=complex)), dtype=complex)


@dataclass(frozen=True)
class PathSolution:
    path: tuple
    nodes: np.ndarray          # every accepted step point
    values: np.ndarray         # (len(nodes), 2): w, w'
    path_values: np.ndarray    # (len(path), 2)
    tolerance: float
    step_bound: float


@dataclass(frozen=True)
class ReconstructionFrame:
    z0: complex
    init_u1: tuple
    init_u2: tuple

    def __post_init__(self):
        if abs(self.wronskian) < 1e-12:
            raise DegenerateFrame("frame solutions are linearly dependent")

    @property
    def wronskian(self):
        (a, da), (b, db) = self.init_u1, self.init_u2
        return a * db - da * b

    @classmethod
    def from_target(cls, f: RationalFunction, z0):
        """Frame whose solution quotient is ``f`` itself (Wronskian -1)."""
        z0 = complex(z0)
        df = differentiate(f)
        d2f = differentiate(df)
        fv, d1, d2 = (complex(g(np.array([z0]))[0]) for g in (f, df, d2f))
        if not all(np.isfinite([fv, d1, d2])) or d1 == 0:
            raise DegenerateFrame("frame point must avoid poles and critical points")
        u2 = d1 ** -0.5
        du2 = -0.5 * d2 * d1 ** -1.5
        return cls(z0, (fv * u2, d1 * u2 + fv * du2), (u2, du2))


def _step_bound(ode, starts, ends):
    """Gronwall-type a-priori bound on the step length in ``z``: solutions
    grow at most like ``exp(sqrt(max|p|/2) |z|)``."""
    t = np.linspace(0, 1, 33)
    z = starts[:, None] + (ends - starts)[:, None] * t[None, :]
    pmax = float(np.max(np.abs(ode.p(z.ravel())))) if z.size else 0.0
    return 0.5 / math.sqrt(1 + pmax / 2)


def _solve_rays(ode, starts, ends, Y0, tol, record=False):
    """Integrate the system for several solutions along segments
    ``starts[j] -> ends[j]`` simultaneously (parameter t in [0, 1])."""
    if not 1e-13 <= tol <= 1e-6:
        raise PreconditionError("tol must lie in [1e-13, 1e-6]")
    starts = np.asarray(starts, dtype=complex)
    ends = np.asarray(ends, dtype=complex)
    Y = np.array(Y0, dtype=complex).reshape(starts.size, -1)
    L = ends - starts
    absL = np.abs(L)
    active = absL > 0
    if not np.any(active):
        return Y, [], [], _step_bound(ode, starts, ends), None
    bound = _step_bound(ode, starts, ends)
    h_max = bound / absL[active].max()
    nsol = Y.shape[1] // 2

    def rhs(t, Y):
        z = starts + t * L
        pv = ode.p(z)
        out = np.empty_like(Y)
        out[:, 0::2] = Y[:, 1::2] * L[:, None]
        out[:, 1::2] = -0.5 * pv[:, None] * Y[:, 0::2] * L[:, None]
        return out

    t, h = 0.0, min(h_max, 0.05)
    ts, Ys = [0.0], [Y.copy()]
    min_ratio = np.full(starts.size, np.inf)
    while t < 1:
        h = min(h, 1 - t)
        if h < 1e-12:
            raise StepUnderflow("step size fell below 1e-12 of the path length")
        K = [rhs(t, Y)]
        for i in range(1, 7):
            Yi = Y + h * sum(a * k for a, k in zip(_A[i], K))
            K.append(rhs(t + _C[i] * h, Yi))
        Y5 = Y + h * sum(b * k for b, k in zip(_B5, K))
        err = np.abs(h * sum(e * k for e, k in zip(_E, K)))
        scale = np.maximum(1.0, np.max(np.abs(Y5), axis=1))
        per_len = np.zeros(starts.size)
        per_len[active] = np.max(err[active], axis=1) / scale[active] / (h * absL[active])
        e = float(per_len.max())
        if e <= tol:
            t += h
            Y = Y5
            if record:
                ts.append(t)
                Ys.append(Y.copy())
            if nsol >= 2 and t < 1:
                u2, du2 = Y[:, 2], Y[:, 3]
                with np.errstate(all="ignore"):
                    dist = np.abs(u2 / du2)
                min_ratio = np.minimum(min_ratio, np.where(np.isfinite(dist), dist, np.inf))
        fac = 0.9 * (tol / e) ** 0.2 if e > 0 else 5.0
        h = min(h * min(5.0, max(0.2, fac)), h_max)
    return Y, ts, Ys, bound, min_ratio


def solve_ivp_along(ode: SchwarzianODE, path, init, tol=1e-10) -> PathSolution:
    """Adaptive Dormand-Prince integration along a polyline; local error per
    unit length is kept below ``tol``."""
    pts = np.asarray(path, dtype=complex).ravel()
    if pts.size < 2:
        raise PreconditionError("path needs at least two points")
    Y = np.array([init], dtype=complex)
    nodes, vals, pvals = [pts[0]], [Y[0].copy()], [Y[0].copy()]
    bound = math.inf
    for a, b in zip(pts[:-1], pts[1:]):
        Y, ts, Ys, sb, _ = _solve_rays(ode, np.array([a]), np.array([b]), Y, tol, record=True)
        bound = min(bound, sb)
        for t, Yt in zip(ts[1:], Ys[1:]):
            nodes.append(a + t * (b - a))
            vals.append(Yt[0].copy())
        pvals.append(Y[0].copy())
    return PathSolution(tuple(pts), np.array(nodes), np.array(vals), np.array(pvals), tol, bound)


def wronskian_drift(sol1: PathSolution, sol2: PathSolution) -> float:
    """``max |W - W(z0)| / |W(z0)|`` over the path vertices (and over the
    dense nodes when both solutions share them)."""
    if len(sol1.path) != len(sol2.path) or not np.allclose(sol1.path, sol2.path, rtol=0, atol=0):
        raise PathMismatch("solutions live on different paths")
    sets = [(sol1.path_values, sol2.path_values)]
    if sol1.nodes.shape == sol2.nodes.shape and np.array_equal(sol1.nodes, sol2.nodes):
        sets.append((sol1.values, sol2.values))
    W0 = sol1.path_values[0, 0] * sol2.path_values[0, 1] - sol1.path_values[0, 1] * sol2.path_values[0, 0]
    if abs(W0) < 1e-12:
        raise DegenerateFrame("initial Wronskian vanishes")
    drift = 0.0
    for a, b in sets:
        W = a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0]
        drift = max(drift, float(np.max(np.abs(W - W0)) / abs(W0)))
    return drift


class SchwarzianReconstruction:
    """``f = u1 / u2`` for a frame, evaluated by straight ray solves from the
    frame point (vectorized over the query points)."""

    def __init__(self, ode: SchwarzianODE, frame: ReconstructionFrame, tol=1e-11, chunk=4096):
        self.ode, self.frame, self.tol, self.chunk = ode, frame, tol, chunk

    def solutions(self, z):
        """``(u1, u1', u2, u2')`` at the points ``z``."""
        z = np.asarray(z, dtype=complex).ravel()
        out = np.empty((z.size, 4), dtype=complex)
        Y0 = np.array(self.frame.init_u1 + self.frame.init_u2, dtype=complex)
        z0 = self.frame.z0
        for i in range(0, z.size, self.chunk):
            zz = z[i:i + self.chunk]
            starts = np.full(zz.size, z0)
            Y, _, _, _, near = _solve_rays(self.ode, starts, zz, np.tile(Y0, (zz.size, 1)), self.tol)
            if near is not None:
                bad = near < 1e-6
                if np.any(bad):
                    # pass beside the zero of u2 through an offset midpoint
                    zb = zz[bad]
                    mid = (z0 + zb) / 2 + 0.1j * (zb - z0)
                    Ym, *_ = _solve_rays(self.ode, np.full(zb.size, z0), mid,
                                         np.tile(Y0, (zb.size, 1)), self.tol)
                    Y[bad], *_ = _solve_rays(self.ode, mid, zb, Ym, self.tol)
            out[i:i + self.chunk] = Y
        return out

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        S = self.solutions(z)
        u1, u2 = S[:, 0], S[:, 2]
        pole = np.abs(u2) <= 1e-12 * np.abs(u1)
        with np.errstate(all="ignore"):
            out = np.where(pole, INF, u1 / np.where(pole, 1, u2))
        return out.reshape(z.shape)


def reconstruct_from_schwarzian(ode: SchwarzianODE, frame: ReconstructionFrame, tol=1e-11):
    return SchwarzianReconstruction(ode, frame, tol)


def numerical_schwarzian(g: Callable, z, h=1e-2):
    """Schwarzian from fourth-order central differences of an evaluator."""
    z = np.asarray(z, dtype=complex)
    f = {k: g(z + k * h) for k in (-3, -2, -1, 0, 1, 2, 3)}
    d1 = (-f[2] + 8 * f[1] - 8 * f[-1] + f[-2]) / (12 * h)
    d2 = (-f[2] + 16 * f[1] - 30 * f[0] + 16 * f[-1] - f[-2]) / (12 * h ** 2)
    d3 = (-f[3] + 8 * f[2] - 13 * f[1] + 13 * f[-1] - 8 * f[-2] + f[-3]) / (8 * h ** 3)
    return d3 / d1 - 1.5 * (d2 / d1) ** 2


def obstruction_residue(S: RationalFunction, contour: Contour) -> complex:
    """``oint S(z) (z - center) dz``; unchanged by adding anything
    holomorphic inside the contour."""
    for p in S.poles():
        if contour.distance_to(p) <= 1e-10 * max(1.0, contour.radius):
            raise PoleOnContour(f"S has a pole at {p} on the contour")
    n = max(contour.node_count, default_node_count(S.degree + 1))
    c = contour.center
    return contour_integral(lambda z: S(z) * (z - c), contour.with_nodes(n))


def _frame_point(f: RationalFunction, disk: ClosedDisk):
    """Grid point of the disk near its centre but away from poles of f."""
    poles = f.poles()
    grid = interior_grid(disk, disk.radius / 8).points
    cand = grid[np.abs(grid - disk.center) <= disk.radius / 2 + 1e-12]
    if poles.size == 0:
        return complex(cand[np.argmin(np.round(np.abs(cand - disk.center), 12))])
    clearance = np.min(np.abs(cand[:, None] - poles[None, :]), axis=1)
    score = np.round(clearance, 12) - 1e-3 * np.abs(cand - disk.center)
    return complex(cand[np.argmax(score)])


@dataclass
class MeromorphicApproximation:
    evaluator: SchwarzianReconstruction
    coefficient: object
    frame: ReconstructionFrame
    report: ApproximationReport
    errors_by_degree: tuple = ()

    def __call__(self, z):
        return self.evaluator(z)


def meromorphic_lu_runge(f: RationalFunction, K: CompactRegion, eps: float,
                         degree_cap=DEGREE_CAP, tol=1e-11):
    """Approximate ``f`` chordally on ``K`` by a solution quotient whose
    Schwarzian is a polynomial (hence locally univalent on the plane)."""
    if isinstance(K, DiskUnion):
        if len(K.disks) != 1:
            raise UnsupportedDomain("one frame reproduces f on a single component only")
        K = K.disks[0]
    if not isinstance(K, ClosedDisk):
        raise ComplementNotConnected("the complement of K must be connected")
    if not eps > 0:
        raise PreconditionError("eps must be positive")
    cert = certify_local_univalence(f, K)
    if not cert.verdict:
        raise NotLocallyUnivalent("f has a critical point or a multiple pole in K")
    S = schwarzian(f)
    z0 = _frame_point(f, K)
    frame = ReconstructionFrame.from_target(f, z0)
    center, scale = K.center, K.radius
    check = np.concatenate([interior_grid(K, K.radius / 8).points, boundary_samples(K, 64).points])
    f_check = f(check)
    history = []
    best = None
    d = DEGREE_START
    while True:
        n = max(64, 4 * (d + 1))
        pts = boundary_samples(K, n).points
        vpts = boundary_samples(K, 2 * n, 0.5).points
        fit = fit_analytic_ls(pts, S(pts), LaurentBasis(d, center, scale), (vpts, S(vpts)))
        ode = SchwarzianODE(fit.series[0])
        g = reconstruct_from_schwarzian(ode, frame, tol)
        err = float(np.max(chordal_distance(g(check), f_check)))
        history.append((d, err))
        if best is None or err < best[1]:
            best = (g, err, fit, d, n)
        if best[1] <= eps:
            g, err, fit, d_used, n_used = best
            report = ApproximationReport(d_used, err, 0, fit.certified_sup_error, n_used)
            return MeromorphicApproximation(g, fit.series[0], frame, report, tuple(history))
        if d >= degree_cap:
            raise DegreeCapExceeded(f"chordal error {best[1]:.3g} above {eps:.3g}", best[1])
        d = min(2 * d, degree_cap)
