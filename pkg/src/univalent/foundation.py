"""Geometric primitives: compact regions, circular contours, sampling,
chordal/sup distances and contour quadrature.

Evaluators throughout the package are plain callables mapping an array of
complex points to an array of (extended) complex values.  The point at
infinity is represented by :data:`INF`; anything with an infinite real or
imaginary part counts as infinite.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import (
    EmptyRegion,
    NonFiniteValue,
    PointOnContour,
    PreconditionError,
    QuadratureInconclusive,
)

INF = complex(math.inf, 0.0)

Evaluator = Callable[[np.ndarray], np.ndarray]


def is_infinite(z):
    """Elementwise test for the extended value infinity."""
    z = np.asarray(z, dtype=complex)
    return np.isinf(z.real) | np.isinf(z.imag)


def default_node_count(degree=0):
    """Node count that integrates Laurent data of the given degree exactly."""
    return max(64, 8 * int(degree) + 16)


# ---------------------------------------------------------------------------
# Contours
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Contour:
    """Circle ``|z - center| = radius`` traversed with the given orientation,
    discretized by ``node_count`` equally spaced trapezoidal nodes."""

    center: complex
    radius: float
    orientation: int = 1
    node_count: int = 64

    def __post_init__(self):
        if not self.radius > 0:
            raise PreconditionError("contour radius must be positive")
        if self.orientation not in (1, -1):
            raise PreconditionError("orientation must be +1 or -1")
        if self.node_count < 16:
            raise PreconditionError("node_count must be at least 16")
        object.__setattr__(self, "center", complex(self.center))
        object.__setattr__(self, "radius", float(self.radius))

    def nodes(self, n=None, offset=0.0):
        n = self.node_count if n is None else n
        theta = 2 * np.pi * (np.arange(n) + offset) / n
        return self.center + self.radius * np.exp(1j * theta)

    def weights(self, n=None, offset=0.0):
        """Trapezoidal weights so that ``sum(w * f(nodes)) ~ oint f dz``."""
        n = self.node_count if n is None else n
        z = self.nodes(n, offset)
        return self.orientation * 1j * (z - self.center) * (2 * np.pi / n)

    def with_nodes(self, n):
        return Contour(self.center, self.radius, self.orientation, int(n))

    def reversed(self):
        return Contour(self.center, self.radius, -self.orientation, self.node_count)

    def distance_to(self, p):
        return abs(abs(complex(p) - self.center) - self.radius)

    def encloses(self, p):
        return abs(complex(p) - self.center) < self.radius


# ---------------------------------------------------------------------------
# Compact regions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Component:
    """A connected piece of a region: an outer circle minus open hole disks."""

    center: complex
    radius: float
    holes: tuple = ()  # tuple of (center, radius)

    def contains(self, z, tol=0.0):
        z = np.asarray(z, dtype=complex)
        inside = np.abs(z - self.center) <= self.radius + tol
        for c, r in self.holes:
            inside &= np.abs(z - c) >= r - tol
        return inside

    def contours(self, node_count=64):
        out = [Contour(self.center, self.radius, 1, node_count)]
        out += [Contour(c, r, -1, node_count) for c, r in self.holes]
        return out


class CompactRegion:
    """Base class for the supported compact sets (all boundaries circular)."""

    def components(self) -> list[Component]:
        raise NotImplementedError

    # derived helpers -------------------------------------------------------
    def contains(self, z, tol=0.0):
        z = np.asarray(z, dtype=complex)
        out = np.zeros(z.shape, dtype=bool)
        for comp in self.components():
            out |= comp.contains(z, tol)
        return out

    def boundary_contours(self, node_count=64):
        """All boundary circles, outer ones positive, hole ones negative."""
        out = []
        for comp in self.components():
            out += comp.contours(node_count)
        return out

    def holes(self):
        """Bounded components of the complement, as (center, radius) disks."""
        return [h for comp in self.components() for h in comp.holes]

    def distance_to_boundary(self, p):
        p = complex(p)
        return min(c.distance_to(p) for c in self.boundary_contours())

    def outer_disks(self):
        return [(comp.center, comp.radius) for comp in self.components()]

    @property
    def diameter(self):
        disks = self.outer_disks()
        best = 0.0
        for c1, r1 in disks:
            for c2, r2 in disks:
                best = max(best, abs(c1 - c2) + r1 + r2)
        return best

    def bounding_box(self):
        disks = self.outer_disks()
        xmin = min(c.real - r for c, r in disks)
        xmax = max(c.real + r for c, r in disks)
        ymin = min(c.imag - r for c, r in disks)
        ymax = max(c.imag + r for c, r in disks)
        return xmin, xmax, ymin, ymax


@dataclass(frozen=True)
class ClosedDisk(CompactRegion):
    center: complex
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise PreconditionError("disk radius must be positive")
        object.__setattr__(self, "center", complex(self.center))
        object.__setattr__(self, "radius", float(self.radius))

    def components(self):
        return [Component(self.center, self.radius)]


@dataclass(frozen=True)
class Annulus(CompactRegion):
    center: complex
    r_inner: float
    r_outer: float

    def __post_init__(self):
        if not 0 < self.r_inner < self.r_outer:
            raise PreconditionError("annulus needs 0 < r_inner < r_outer")
        object.__setattr__(self, "center", complex(self.center))

    def components(self):
        return [Component(self.center, float(self.r_outer),
                          ((self.center, float(self.r_inner)),))]


@dataclass(frozen=True)
class DiskUnion(CompactRegion):
    disks: tuple

    def __post_init__(self):
        disks = tuple(self.disks)
        if not disks:
            raise PreconditionError("DiskUnion needs at least one disk")
        object.__setattr__(self, "disks", disks)
        for i, a in enumerate(disks):
            for b in disks[i + 1:]:
                if abs(a.center - b.center) <= a.radius + b.radius:
                    raise PreconditionError("DiskUnion members must be disjoint")

    def components(self):
        return [Component(d.center, d.radius) for d in self.disks]


@dataclass(frozen=True)
class HoledDisk(CompactRegion):
    outer: ClosedDisk
    holes_: tuple = field(default=())

    def __post_init__(self):
        holes = tuple((complex(c), float(r)) for c, r in self.holes_)
        object.__setattr__(self, "holes_", holes)
        for i, (c, r) in enumerate(holes):
            if r <= 0 or abs(c - self.outer.center) + r >= self.outer.radius:
                raise PreconditionError("hole closure must lie inside the outer disk")
            for c2, r2 in holes[i + 1:]:
                if abs(c - c2) <= r + r2:
                    raise PreconditionError("holes must be pairwise disjoint")

    def components(self):
        return [Component(self.outer.center, self.outer.radius, self.holes_)]


# ---------------------------------------------------------------------------
# Domains
# ---------------------------------------------------------------------------

class DomainSpec:
    punctures: tuple = ()
    simply_connected = True

    def contains(self, z):
        raise NotImplementedError

    def contains_region(self, region: CompactRegion):
        pts = np.concatenate([c.nodes(256) for c in region.boundary_contours()])
        if not np.all(self.contains(pts)):
            return False
        for p in self.punctures:
            if region.contains(p):
                return False
        return True


@dataclass(frozen=True)
class WholePlane(DomainSpec):
    def contains(self, z):
        return np.isfinite(np.asarray(z, dtype=complex))


@dataclass(frozen=True)
class PuncturedPlane(DomainSpec):
    punctures: tuple = ()
    simply_connected = False

    def __post_init__(self):
        pts = tuple(complex(p) for p in self.punctures)
        if len(set(pts)) != len(pts):
            raise PreconditionError("punctures must be pairwise distinct")
        object.__setattr__(self, "punctures", pts)

    def contains(self, z):
        z = np.asarray(z, dtype=complex)
        out = np.isfinite(z)
        for p in self.punctures:
            out &= z != p
        return out


@dataclass(frozen=True)
class UnitDisk(DomainSpec):
    def contains(self, z):
        return np.abs(np.asarray(z, dtype=complex)) < 1


@dataclass(frozen=True)
class SimplyConnected(DomainSpec):
    """A simply connected domain, represented by an open marker disk."""

    marker: ClosedDisk

    def contains(self, z):
        z = np.asarray(z, dtype=complex)
        return np.abs(z - self.marker.center) < self.marker.radius


# ---------------------------------------------------------------------------
# Sampling
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SampleSet:
    points: np.ndarray
    role: str = "boundary"
    spacing: float = float("nan")
    # index ranges of each boundary circle inside ``points``
    segments: tuple = ()

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=complex).ravel()
        if pts.size == 0:
            raise EmptyRegion("sample set is empty")
        object.__setattr__(self, "points", pts)

    def __len__(self):
        return self.points.size


def boundary_samples(region: CompactRegion, n_per_component=64, offset=0.0):
    """Equal-angle samples on every boundary circle of ``region``.

    ``offset`` shifts the angles by a fraction of the spacing; the validation
    sets used for certification take ``offset=0.5`` so they are disjoint from
    the fit sets.
    """
    if n_per_component < 16:
        raise PreconditionError("need at least 16 samples per boundary circle")
    chunks, segments, start = [], [], 0
    for c in region.boundary_contours():
        pts = c.nodes(n_per_component, offset)
        chunks.append(pts)
        segments.append((start, start + pts.size))
        start += pts.size
    return SampleSet(np.concatenate(chunks), "boundary", segments=tuple(segments))


def interior_grid(region: CompactRegion, spacing):
    """Axis-aligned grid anchored at each component centre, clipped to the
    region."""
    if not spacing > 0:
        raise PreconditionError("spacing must be positive")
    if spacing > region.diameter:
        raise EmptyRegion("grid spacing exceeds region size")
    chunks = []
    for comp in region.components():
        k = int(math.floor(comp.radius / spacing + 1e-9))
        j = np.arange(-k, k + 1)
        X, Y = np.meshgrid(j * spacing, j * spacing)
        pts = comp.center + (X + 1j * Y).ravel()
        chunks.append(pts[comp.contains(pts, tol=1e-12 * comp.radius)])
    pts = np.concatenate(chunks)
    if pts.size == 0:
        raise EmptyRegion("no grid point falls inside the region")
    return SampleSet(pts, "interior-grid", float(spacing))


# ---------------------------------------------------------------------------
# Distances
# ---------------------------------------------------------------------------

def chordal_distance(a, b):
    """Chordal distance on the Riemann sphere; accepts :data:`INF`."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    ia, ib = is_infinite(a), is_infinite(b)
    a0 = np.where(ia, 0, a)
    b0 = np.where(ib, 0, b)
    na = np.hypot(1.0, np.abs(a0))
    nb = np.hypot(1.0, np.abs(b0))
    with np.errstate(over="ignore", invalid="ignore"):
        both = np.abs(a0 - b0) / (na * nb)
    one_inf_a = 1 / nb
    one_inf_b = 1 / na
    out = np.where(ia & ib, 0.0, np.where(ia, one_inf_a, np.where(ib, one_inf_b, both)))
    return out if out.ndim else float(out)


def _points(samples):
    return samples.points if isinstance(samples, SampleSet) else np.asarray(samples, dtype=complex).ravel()


def sup_distance(f: Evaluator, g: Evaluator, samples) -> float:
    """``max |f - g|`` over the samples; both must be finite there."""
    z = _points(samples)
    with np.errstate(all="ignore"):
        fv = np.asarray(f(z), dtype=complex)
        gv = np.asarray(g(z), dtype=complex)
    if not (np.all(np.isfinite(fv)) and np.all(np.isfinite(gv))):
        raise NonFiniteValue("evaluator is not finite on the sample set")
    diff = np.abs(fv - gv)
    if not np.all(np.isfinite(diff)):
        raise NonFiniteValue("difference overflowed")
    return float(diff.max())


def chordal_sup_distance(f: Evaluator, g: Evaluator, samples) -> float:
    z = _points(samples)
    with np.errstate(all="ignore"):
        fv = np.asarray(f(z), dtype=complex)
        gv = np.asarray(g(z), dtype=complex)
    return float(np.max(chordal_distance(fv, gv)))


# ---------------------------------------------------------------------------
# Quadrature
# ---------------------------------------------------------------------------

def contour_integral(f: Evaluator, contour: Contour) -> complex:
    """Trapezoidal rule for ``oint f dz``; spectrally accurate for integrands
    analytic near the circle."""
    z = contour.nodes()
    with np.errstate(all="ignore"):
        vals = np.asarray(f(z), dtype=complex)
    if not np.all(np.isfinite(vals)):
        raise NonFiniteValue("integrand is not finite at a quadrature node")
    return complex(np.sum(vals * contour.weights()))


def winding_number(contour: Contour, p) -> int:
    p = complex(p)
    if contour.distance_to(p) <= 1e-14 * max(1.0, contour.radius):
        raise PointOnContour(f"{p} lies on the contour")
    val = contour_integral(lambda z: 1 / (z - p), contour) / (2j * np.pi)
    k = int(round(val.real))
    if abs(val - k) >= 0.1:
        raise QuadratureInconclusive(
            f"winding estimate {val:.4g} is not near an integer; raise node_count")
    return k


_GL_CACHE = {}


def gauss_legendre(n):
    if n not in _GL_CACHE:
        _GL_CACHE[n] = np.polynomial.legendre.leggauss(n)
    return _GL_CACHE[n]


def segment_integrals(f: Evaluator, a, b, panels=1, order=16):
    """Composite Gauss-Legendre integrals of ``f`` over the straight segments
    ``a[i] -> b[i]`` (vectorized over segments)."""
    a = np.atleast_1d(np.asarray(a, dtype=complex))
    b = np.atleast_1d(np.asarray(b, dtype=complex))
    x, w = gauss_legendre(order)
    t = ((np.arange(panels)[:, None] + (x[None, :] + 1) / 2) / panels).ravel()
    wt = np.tile(w / 2 / panels, panels)
    d = b - a
    z = a[:, None] + d[:, None] * t[None, :]
    with np.errstate(all="ignore"):
        vals = np.asarray(f(z.ravel()), dtype=complex).reshape(z.shape)
    if not np.all(np.isfinite(vals)):
        raise NonFiniteValue("integrand is not finite on the integration path")
    return d * (vals @ wt)


def adaptive_segment_integrals(f: Evaluator, a, b, rtol=1e-13, max_panels=1024):
    """Like :func:`segment_integrals`, doubling the panel count until two
    successive estimates agree."""
    panels = 1
    prev = segment_integrals(f, a, b, panels)
    while panels < max_panels:
        panels *= 2
        cur = segment_integrals(f, a, b, panels)
        scale = 1 + np.abs(cur)
        if np.all(np.abs(cur - prev) <= rtol * scale):
            return cur
        prev = cur
    raise QuadratureInconclusive("segment quadrature did not settle")


def path_integral(f: Evaluator, polyline: Sequence[complex], rtol=1e-13) -> complex:
    """``int f dz`` along a polyline."""
    pts = np.asarray(polyline, dtype=complex)
    if pts.size < 2:
        return 0j
    return complex(np.sum(adaptive_segment_integrals(f, pts[:-1], pts[1:], rtol)))


def argument_count(log_derivative: Evaluator, contour: Contour, max_nodes=2 ** 15) -> int:
    """Argument-principle count ``(1/2 pi i) oint h'/h dz`` with node
    doubling until the estimate is near an integer and stable."""
    n = contour.node_count
    prev = None
    while n <= max_nodes:
        val = contour_integral(log_derivative, contour.with_nodes(n)) / (2j * np.pi)
        k = int(round(val.real))
        if abs(val - k) < 0.1 and prev is not None and abs(val - prev) < 1e-6:
            return k
        prev = val
        n *= 2
    raise QuadratureInconclusive("argument principle count did not settle")
