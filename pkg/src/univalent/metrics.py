"""Conformal metrics ``lambda(z)|dz|`` on grids: canonical densities,
curvature ``-Laplace(log lambda) / lambda^2``, pullbacks, Liouville
construction and harmonic gluing of two log-densities."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .arnoldi import ArnoldiSeries, arnoldi
from .errors import (
    CriticalPoint,
    DegreeCapExceeded,
    InsufficientInterior,
    NonPositiveTarget,
    OutsideDisk,
    Overlap,
    PreconditionError,
    RangeEscape,
)
from .foundation import ClosedDisk, boundary_samples, interior_grid, is_infinite
from .rational import MoebiusMap, Polynomial, RationalFunction, differentiate

HYPERBOLIC_CLIP = 0.95


@dataclass(frozen=True)
class CanonicalGeometry:
    name: str
    curvature: int

    def density(self, z):
        return canonical_density(self, z)

    def contains(self, w):
        w = np.asarray(w, dtype=complex)
        if self.curvature < 0:
            return np.abs(w) < 1
        if self.curvature == 0:
            return ~is_infinite(w)
        return np.ones(w.shape, dtype=bool)


HYPERBOLIC = CanonicalGeometry("hyperbolic", -1)
EUCLIDEAN = CanonicalGeometry("euclidean", 0)
SPHERICAL = CanonicalGeometry("spherical", 1)
GEOMETRIES = {g.name: g for g in (HYPERBOLIC, EUCLIDEAN, SPHERICAL)}


def canonical_density(geom: CanonicalGeometry, z):
    """``2/(1-|z|^2)``, ``1`` or ``2/(1+|z|^2)``."""
    z = np.asarray(z, dtype=complex)
    r2 = np.abs(z) ** 2
    if geom.curvature < 0:
        if np.any(r2 >= 1):
            raise OutsideDisk("hyperbolic density needs |z| < 1")
        out = 2 / (1 - r2)
    elif geom.curvature == 0:
        out = np.ones(z.shape)
    else:
        out = 2 / (1 + r2)
    return out if out.ndim else float(out)


# ---------------------------------------------------------------------------
# Gridded densities and curvature
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MetricDensity:
    grid: np.ndarray       # (ny, nx), row i at y = origin.imag + i h
    origin: complex
    spacing: float
    mask: np.ndarray

    def __post_init__(self):
        g = np.asarray(self.grid, dtype=float)
        m = np.asarray(self.mask, dtype=bool)
        if g.shape != m.shape:
            raise PreconditionError("grid and mask shapes differ")
        if not np.all(np.isfinite(g[m]) & (g[m] > 0)):
            raise NonPositiveTarget("unmasked density values must be positive and finite")
        object.__setattr__(self, "grid", g)
        object.__setattr__(self, "mask", m)

    def points(self):
        ny, nx = self.grid.shape
        x = np.arange(nx) * self.spacing
        y = np.arange(ny) * self.spacing
        X, Y = np.meshgrid(x, y)
        return self.origin + X + 1j * Y

    def to_csv(self):
        z = self.points()[self.mask]
        v = self.grid[self.mask]
        lines = ["x,y,value"] + [f"{a.real!r},{a.imag!r},{b!r}" for a, b in zip(z, v)]
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class GridSpec:
    """Square grid of spacing ``h`` clipped to the disk ``|z - center| <= radius``."""

    center: complex
    radius: float
    spacing: float

    def layout(self):
        k = int(math.floor(self.radius / self.spacing + 1e-9))
        j = np.arange(-k, k + 1) * self.spacing
        X, Y = np.meshgrid(j, j)
        z = complex(self.center) + X + 1j * Y
        origin = complex(self.center) - k * self.spacing * (1 + 1j)
        inside = np.abs(z - self.center) <= self.radius * (1 + 1e-12)
        return z, origin, inside


def sample_density(lam: Callable, spec: GridSpec, clip: float | None = None) -> MetricDensity:
    """Evaluate a density on a grid; ``clip`` masks ``|z| > clip``."""
    z, origin, mask = spec.layout()
    if clip is not None:
        mask &= np.abs(z) <= clip
    vals = np.ones(z.shape)
    vals[mask] = np.asarray(lam(z[mask]), dtype=float)
    return MetricDensity(vals, origin, spec.spacing, mask)


@dataclass(frozen=True)
class CurvatureReport:
    curvature_grid: np.ndarray     # NaN outside evaluated cells
    max_abs_deviation_from_c: float
    cells_evaluated: int
    expected: float


def _laplacian_log(L, ok, h, step):
    ny, nx = L.shape
    s = step
    out = np.full(L.shape, np.nan)
    good = np.zeros(L.shape, dtype=bool)
    c = (slice(s, ny - s), slice(s, nx - s))
    good[c] = (ok[c] & ok[s:ny - s, 2 * s:] & ok[s:ny - s, : nx - 2 * s]
               & ok[2 * s:, s:nx - s] & ok[: ny - 2 * s, s:nx - s])
    with np.errstate(invalid="ignore"):
        lap = (L[s:ny - s, 2 * s:] + L[s:ny - s, : nx - 2 * s] + L[2 * s:, s:nx - s]
               + L[: ny - 2 * s, s:nx - s] - 4 * L[c]) / (s * h) ** 2
    out[c] = np.where(good[c], lap, np.nan)
    return out, good


def curvature(lam: MetricDensity, expected: float | None = None, richardson=False) -> CurvatureReport:
    """Gauss curvature on every cell whose 5-point stencil is unmasked.

    The deviation is measured from ``expected`` when given, else from the
    median of the computed values.
    """
    L = np.full(lam.grid.shape, np.nan)
    L[lam.mask] = np.log(lam.grid[lam.mask])   # never on masked cells
    lap, good = _laplacian_log(L, lam.mask, lam.spacing, 1)
    if richardson:
        lap2, good2 = _laplacian_log(L, lam.mask, lam.spacing, 2)
        good = good & good2
        lap = (4 * lap - lap2) / 3
    n = int(good.sum())
    if n < 9:
        raise InsufficientInterior(f"only {n} interior cells; refine the grid")
    kappa = np.full(lam.grid.shape, np.nan)
    kappa[good] = -lap[good] / lam.grid[good] ** 2
    ref = float(np.median(kappa[good])) if expected is None else float(expected)
    dev = float(np.max(np.abs(kappa[good] - ref)))
    return CurvatureReport(kappa, dev, n, ref)


def scale_density(lam: MetricDensity, factor: float) -> MetricDensity:
    if not factor > 0:
        raise PreconditionError("scale factor must be positive")
    return MetricDensity(lam.grid * factor, lam.origin, lam.spacing, lam.mask)


# ---------------------------------------------------------------------------
# Pullbacks
# ---------------------------------------------------------------------------

def _fd_derivative(f, z, h):
    return (-f(z + 2 * h) + 8 * f(z + h) - 8 * f(z - h) + f(z - 2 * h)) / (12 * h)


def derivative_of(phi, h=1e-3) -> Callable:
    """Exact derivative for rational/Moebius maps and objects with
    ``deriv``; fourth-order central differences otherwise."""
    if isinstance(phi, MoebiusMap):
        return phi.deriv
    if isinstance(phi, (RationalFunction, Polynomial)):
        d = differentiate(phi if isinstance(phi, RationalFunction) else RationalFunction.from_polynomial(phi))
        return d
    if hasattr(phi, "deriv"):
        return phi.deriv
    return lambda z: _fd_derivative(phi, np.asarray(z, dtype=complex), h)


def pullback(lam, phi, dphi: Callable | None = None, h=1e-3) -> Callable:
    """Density ``z -> lam(phi(z)) |phi'(z)|``.

    ``lam`` is a :class:`CanonicalGeometry` or a callable density; ``phi``
    must map the evaluation points into the domain of ``lam``.
    """
    dphi = dphi or derivative_of(phi, h)
    geom = lam if isinstance(lam, CanonicalGeometry) else None

    def density(z):
        z = np.asarray(z, dtype=complex)
        w = np.asarray(phi(z), dtype=complex)
        d = np.asarray(dphi(z), dtype=complex)
        if geom is not None:
            if not np.all(geom.contains(w)):
                raise RangeEscape("map leaves the domain of the density")
            if geom.curvature > 0:
                return _spherical_pullback(phi, w, d, z)
            if np.any(np.abs(d) == 0):
                raise CriticalPoint("derivative vanishes at an evaluation point")
            return canonical_density(geom, w) * np.abs(d)
        if np.any(np.abs(d) == 0):
            raise CriticalPoint("derivative vanishes at an evaluation point")
        with np.errstate(all="ignore"):
            v = np.asarray(lam(w), dtype=float)
        if not np.all(np.isfinite(v)):
            raise RangeEscape("map leaves the domain of the density")
        return v * np.abs(d)

    return density


def _spherical_pullback(phi, w, d, z):
    """``2|phi'|/(1+|phi|^2)``, switching to ``1/phi`` where ``|phi| > 1``
    (this also covers poles)."""
    out = np.empty(w.shape)
    small = np.abs(w) <= 1
    with np.errstate(all="ignore"):
        out[small] = 2 * np.abs(d[small]) / (1 + np.abs(w[small]) ** 2)
    big = ~small
    if np.any(big):
        if isinstance(phi, RationalFunction):
            recip = RationalFunction(phi.den, phi.num)
            g = recip(z[big])
            dg = differentiate(recip)(z[big])
        else:
            with np.errstate(all="ignore"):
                g = 1 / w[big]
                dg = -d[big] / w[big] ** 2
        out[big] = 2 * np.abs(dg) / (1 + np.abs(g) ** 2)
    if np.any(out == 0) or not np.all(np.isfinite(out)):
        raise CriticalPoint("spherical derivative vanishes or is undefined")
    return out


def liouville_construct(f, geom: CanonicalGeometry, spec: GridSpec, dfdz: Callable | None = None
                        ) -> MetricDensity:
    """Density ``f* lambda_{D_c}`` on the grid; ``f'`` is exact for rational
    input, else fourth-order differences with step ``h/4``."""
    z, origin, mask = spec.layout()
    pts = z[mask]
    w = np.asarray(f(pts), dtype=complex)
    if not np.all(geom.contains(w)):
        raise RangeEscape("f leaves the canonical domain on the grid")
    d = dfdz or derivative_of(f, spec.spacing / 4)
    vals = np.ones(z.shape)
    if geom.curvature > 0:
        vals[mask] = _spherical_pullback(f, w, np.asarray(d(pts), dtype=complex), pts)
    else:
        dv = np.asarray(d(pts), dtype=complex)
        if np.any(dv == 0):
            raise CriticalPoint("f' vanishes on the grid")
        vals[mask] = canonical_density(geom, w) * np.abs(dv)
    if geom.curvature < 0:
        near_edge = np.zeros(z.shape, dtype=bool)
        near_edge[mask] = np.abs(w) > HYPERBOLIC_CLIP
        mask = mask & ~near_edge
    return MetricDensity(vals, origin, spec.spacing, mask)


# ---------------------------------------------------------------------------
# Harmonic gluing
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HarmonicGlue:
    series: ArnoldiSeries
    degree: int
    e1: float
    e2: float
    stride: complex

    def u(self, z):
        return np.real(self.series(z))

    def density(self, z):
        return np.exp(self.u(z))


def harmonic_glue(lam_target: Callable, mu_target: Callable, T, K: ClosedDisk, eps: float,
                  degree_cap=64) -> HarmonicGlue:
    """Entire harmonic ``u = Re F`` with ``e^u ~ lam`` on K and
    ``e^{u(z+T)} ~ mu(z)`` on K (translation ``phi(z) = z + T``)."""
    T = complex(T)
    if not abs(T) > 2 * K.radius + 1:
        raise Overlap("stride must exceed 2 radius + 1 so that K and K + T are disjoint")
    if not eps > 0:
        raise PreconditionError("eps must be positive")
    check = np.concatenate([boundary_samples(K, 256, 0.5).points, interior_grid(K, K.radius / 8).points])

    def log_target(fn, z):
        v = np.asarray(fn(z), dtype=float)
        if not np.all(np.isfinite(v) & (v > 0)):
            raise NonPositiveTarget("target density must be positive")
        return np.log(v)

    lam_chk, mu_chk = lam_target(check), mu_target(check)
    log_target(lam_target, check)
    log_target(mu_target, check)
    center = K.center + T / 2
    scale = abs(T) / 2 + K.radius
    best = None
    d = 8
    while True:
        n = max(64, 4 * (2 * d + 1))
        zk = boundary_samples(K, n).points
        pts = np.concatenate([zk, zk + T])
        vals = np.concatenate([log_target(lam_target, zk), log_target(mu_target, zk)])
        Q, H = arnoldi((pts - center) / scale, d)
        A = np.hstack([Q.real, -Q.imag[:, 1:]])
        norms = np.linalg.norm(A, axis=0)
        sol, *_ = np.linalg.lstsq(A / norms, vals, rcond=None)
        sol = sol / norms
        coef = sol[: d + 1] + 0j
        coef[1:] += 1j * sol[d + 1:]
        series = ArnoldiSeries(H, coef, center, scale)
        u_k = np.real(series(check))
        u_t = np.real(series(check + T))
        e1 = float(np.max(np.abs(np.exp(u_k) - lam_chk)))
        e2 = float(np.max(np.abs(np.exp(u_t) - mu_chk)))
        cand = HarmonicGlue(series, d, e1, e2, T)
        if best is None or max(e1, e2) < max(best.e1, best.e2):
            best = cand
        if max(best.e1, best.e2) <= eps:
            return best
        if d >= degree_cap:
            raise DegreeCapExceeded(f"glue errors {best.e1:.3g}, {best.e2:.3g} above {eps:.3g}",
                                    max(best.e1, best.e2))
        d = min(2 * d, degree_cap)
