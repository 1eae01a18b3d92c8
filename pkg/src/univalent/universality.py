"""Sequences of Moebius self-maps: run-away and injectivity diagnostics,
finite-stage universal functions built by gluing, covering maps of the
disk and punctured disk, and orbit experiments for pulled-back metrics."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import (
    NotLocallyUnivalent,
    PoleOnCompact,
    PreconditionError,
    ProbeOnBoundary,
    RangeEscape,
    StagesNotSeparable,
    UnsupportedDomain,
)
from .foundation import (
    ClosedDisk,
    CompactRegion,
    DomainSpec,
    UnitDisk,
    WholePlane,
    argument_count,
    boundary_samples,
    interior_grid,
)
from .metrics import CanonicalGeometry, pullback
from .rational import MoebiusMap, RationalFunction, certify_local_univalence, differentiate, precompose_moebius
from .runge import glue_targets


# ---------------------------------------------------------------------------
# Sequences
# ---------------------------------------------------------------------------

class SelfMapSequence:
    """Sequence ``phi_1, phi_2, ...`` of Moebius self-maps of ``domain``."""

    domain: DomainSpec = WholePlane()

    def member(self, n: int) -> MoebiusMap:
        raise NotImplementedError

    def __len__(self):
        return 10 ** 9


@dataclass(frozen=True)
class Translations(SelfMapSequence):
    stride: complex = 1.0
    domain: DomainSpec = WholePlane()

    def member(self, n):
        return MoebiusMap.translation(n * complex(self.stride))


@dataclass(frozen=True)
class DiskAutomorphisms(SelfMapSequence):
    """``phi_n(z) = e^{i theta_n} (z + a_n) / (1 + conj(a_n) z)``."""

    a: tuple = ()
    theta: tuple = ()
    domain: DomainSpec = UnitDisk()

    def __post_init__(self):
        a = tuple(complex(x) for x in self.a)
        th = tuple(float(x) for x in self.theta) or (0.0,) * len(a)
        if len(th) != len(a):
            raise PreconditionError("a and theta must have equal length")
        if any(abs(x) >= 1 for x in a):
            raise PreconditionError("disk automorphisms need |a_n| < 1")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "theta", th)

    def member(self, n):
        return MoebiusMap.disk_automorphism(self.a[n - 1], self.theta[n - 1])

    def __len__(self):
        return len(self.a)


@dataclass(frozen=True)
class Explicit(SelfMapSequence):
    maps: tuple = ()
    domain: DomainSpec = WholePlane()

    def member(self, n):
        return self.maps[n - 1]

    def __len__(self):
        return len(self.maps)


# ---------------------------------------------------------------------------
# Diagnostics
# ---------------------------------------------------------------------------

def _disks_disjoint(a, b, gap=0.0):
    return abs(a[0] - b[0]) > a[1] + b[1] + gap


def _image_disjoint(phi: MoebiusMap, disk, others) -> bool:
    """Whether ``phi(disk)`` misses every disk in ``others`` (exact circle
    images; when the pole lies inside, the image is a disk complement)."""
    c, r = disk
    if phi.c != 0 and abs(phi.pole - c) < r:
        wc, wr = phi.circle_image(c, r)
        # image is the closed exterior of the circle: others must sit inside
        return all(abs(oc - wc) + orad < wr for oc, orad in others)
    if phi.c != 0 and abs(abs(phi.pole - c) - r) <= 1e-14 * max(1.0, r):
        return False
    wc, wr = phi.circle_image(c, r)
    return all(_disks_disjoint((wc, wr), o) for o in others)


def runaway_index(seq: SelfMapSequence, K: CompactRegion, N: int):
    """Smallest ``n <= N`` with ``phi_n(K)`` disjoint from ``K``, else None.

    Images of the outer disks are computed exactly; for regions with holes
    this is a sufficient test."""
    disks = K.outer_disks()
    for n in range(1, min(N, len(seq)) + 1):
        phi = seq.member(n)
        if all(_image_disjoint(phi, d, disks) for d in disks):
            return n
    return None


def _derivative(phi):
    if isinstance(phi, MoebiusMap):
        return phi.deriv
    if isinstance(phi, RationalFunction):
        return differentiate(phi)
    if hasattr(phi, "deriv"):
        return phi.deriv
    h = 1e-4
    return lambda z: (-phi(z + 2 * h) + 8 * phi(z + h) - 8 * phi(z - h) + phi(z - 2 * h)) / (12 * h)


def _poles_inside(phi, K):
    if isinstance(phi, MoebiusMap):
        return int(phi.c != 0 and bool(K.contains(phi.pole)))
    if isinstance(phi, RationalFunction):
        return int(sum(bool(K.contains(p)) for p in phi.poles()))
    return 0


def probe_points(K: CompactRegion, count=8):
    """Deterministic interior points: per component, points on the circle
    midway between the holes' reach and the outer radius."""
    pts = []
    for comp in K.components():
        inner = max((abs(c - comp.center) + r for c, r in comp.holes), default=0.0)
        rho = (inner + comp.radius) / 2 if comp.holes else 0.5 * comp.radius
        th = 2 * np.pi * (np.arange(count) + 0.3) / count
        cand = comp.center + rho * np.exp(1j * th)
        pts.extend(cand[comp.contains(cand)])
    if not pts:
        raise PreconditionError("no probe point inside the region")
    return np.array(pts[:count])


def injectivity_check(phi, K: CompactRegion) -> bool:
    """Argument-principle injectivity test: every probe value is taken once
    in K, and no two of 64 boundary samples collide."""
    dphi = _derivative(phi)
    extra = _poles_inside(phi, K)
    contours = K.boundary_contours(64)
    scale = max(1.0, float(np.max(np.abs(phi(boundary_samples(K, 64).points)))))
    for z0 in probe_points(K):
        w = complex(np.asarray(phi(np.array([z0])))[0])
        for c in contours:
            if np.min(np.abs(phi(c.nodes(1024)) - w)) <= 1e-10 * scale:
                raise ProbeOnBoundary("probe value is attained on the boundary")
        count = sum(argument_count(lambda z: dphi(z) / (phi(z) - w), c) for c in contours) + extra
        if count != 1:
            return False
    pts = phi(boundary_samples(K, 16 if len(contours) > 4 else max(16, 64 // len(contours))).points)
    pts = np.asarray(pts)[:64]
    d = np.abs(pts[:, None] - pts[None, :])
    np.fill_diagonal(d, np.inf)
    return bool(np.min(d) > 1e-10)


@dataclass(frozen=True)
class SequenceDiagnostics:
    runaway_indices: tuple              # per region
    injectivity_verdicts: dict          # (n, region index) -> bool
    eventually_injective: tuple         # per region: injective for all n >= some n0 up to N


def diagnose_sequence(seq: SelfMapSequence, regions: Sequence[CompactRegion], N: int):
    run = tuple(runaway_index(seq, K, N) for K in regions)
    verdicts, summary = {}, []
    top = min(N, len(seq))
    for i, K in enumerate(regions):
        for n in range(1, top + 1):
            verdicts[(n, i)] = injectivity_check(seq.member(n), K)
        summary.append(bool(top) and verdicts[(top, i)])
    return SequenceDiagnostics(run, verdicts, tuple(summary))


# ---------------------------------------------------------------------------
# Finite-stage universal functions
# ---------------------------------------------------------------------------

@dataclass
class OrbitReport:
    errors: tuple
    stages: tuple
    certificate_counts: tuple
    F: Callable = None
    derivative_errors: tuple = ()
    extra: dict = field(default_factory=dict)

    @property
    def verdict(self):
        return all(c == 0 for c in self.certificate_counts)


def select_stages(seq: SelfMapSequence, K: ClosedDisk, count: int, max_index=None):
    """Greedy smallest indices whose images of K are pairwise disjoint with
    gaps of at least half the radius of K, searched up to ``max_index``."""
    max_index = max_index or 2 * count
    chosen, images = [], []
    for n in range(1, min(max_index, len(seq)) + 1):
        phi = seq.member(n)
        if phi.c != 0 and abs(phi.pole - K.center) <= K.radius:
            continue
        wc, wr = phi.circle_image(K.center, K.radius)
        if all(_disks_disjoint((wc, wr), im, 0.5 * K.radius) for im in images):
            if injectivity_check(phi, K):
                chosen.append(n)
                images.append((wc, wr))
        if len(chosen) == count:
            return chosen
    raise StagesNotSeparable(
        f"only {len(chosen)} separable stage(s) among the first {max_index} maps")


def build_finite_universal(targets, K: ClosedDisk, seq: SelfMapSequence, eps: float,
                           max_index=None, degree_cap=256):
    """One locally univalent F with ``|F o phi_{n_i} - g_i| <= eps`` on K."""
    targets = [t if isinstance(t, RationalFunction) else RationalFunction.from_polynomial(t)
               for t in targets]
    if not seq.domain.simply_connected:
        raise UnsupportedDomain("the sequence domain must be simply connected")
    for g in targets:
        for p in g.poles():
            if K.contains(p, tol=1e-8):
                raise PoleOnCompact(f"target has a pole at {p} in K")
        if not certify_local_univalence(g, K).verdict:
            raise NotLocallyUnivalent("every target must be locally univalent on K")
    stages = select_stages(seq, K, len(targets), max_index)
    maps = [seq.member(n) for n in stages]
    pieces = [(phi.disk_image(K), precompose_moebius(g, phi.inverse())) for phi, g in zip(maps, targets)]
    F = glue_targets(pieces, seq.domain, eps, degree_cap=degree_cap)
    zk = boundary_samples(K, 256, 0.5).points
    errors, derrs, counts = [], [], []
    for phi, g in zip(maps, targets):
        errors.append(float(np.max(np.abs(F(phi(zk)) - g(zk)))))
        derrs.append(float(np.max(np.abs(F.deriv(phi(zk)) * phi.deriv(zk) - differentiate(g)(zk)))))
        D = phi.disk_image(K)
        counts.append(sum(argument_count(F.log_derivative, c) for c in D.boundary_contours(256)))
    return OrbitReport(tuple(errors), tuple(stages), tuple(counts), F, tuple(derrs))


# ---------------------------------------------------------------------------
# Covering maps
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PuncturedUnitDisk(DomainSpec):
    punctures: tuple = (0j,)
    simply_connected = False

    def contains(self, z):
        z = np.asarray(z, dtype=complex)
        return (np.abs(z) < 1) & (z != 0)


@dataclass(frozen=True)
class CoveringMap:
    kind: str

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        if self.kind == "disk":
            return z.copy()
        return np.exp((z + 1) / (z - 1))

    def deriv(self, z):
        z = np.asarray(z, dtype=complex)
        if self.kind == "disk":
            return np.ones(z.shape, dtype=complex)
        return self(z) * (-2 / (z - 1) ** 2)


def covering_map_special(domain) -> CoveringMap:
    """Normalized covering of the unit disk (identity) or of the punctured
    unit disk (``exp((z+1)/(z-1))``)."""
    if isinstance(domain, UnitDisk) or domain == "UnitDisk":
        return CoveringMap("disk")
    if isinstance(domain, PuncturedUnitDisk) or domain == "PuncturedUnitDisk":
        return CoveringMap("punctured")
    raise UnsupportedDomain(f"no covering map implemented for {domain!r}")


# ---------------------------------------------------------------------------
# Metric orbits
# ---------------------------------------------------------------------------

def metric_orbit_experiment(maps, geom: CanonicalGeometry, K: ClosedDisk, seq: SelfMapSequence,
                            eps: float, max_index=None) -> OrbitReport:
    """Build F for the maps, then compare ``phi_{n_i}* (F* lambda_c)`` with
    ``f_i* lambda_c`` on K."""
    maps = [m if isinstance(m, RationalFunction) else RationalFunction.from_polynomial(m) for m in maps]
    check = np.concatenate([boundary_samples(K, 256, 0.5).points, interior_grid(K, K.radius / 8).points])
    for f in maps:
        if not np.all(geom.contains(f(check))):
            raise RangeEscape("a target map leaves the canonical domain on K")
    orbit = build_finite_universal(maps, K, seq, eps, max_index)
    F = orbit.F
    Lam = pullback(geom, F, F.deriv)
    errs = []
    for n, f in zip(orbit.stages, maps):
        phi = seq.member(n)
        lhs = Lam(phi(check)) * np.abs(phi.deriv(check))
        rhs = pullback(geom, f)(check)
        errs.append(float(np.max(np.abs(lhs - rhs))))
    return OrbitReport(tuple(errs), orbit.stages, orbit.certificate_counts, F, orbit.derivative_errors,
                       {"map_errors": orbit.errors})
