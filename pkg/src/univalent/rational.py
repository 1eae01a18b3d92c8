"""Floating-point rational calculus: polynomials, rational functions,
Moebius maps, Schwarzian derivatives, roots and local-univalence
certificates."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import (
    BoundaryDegeneracy,
    ConstantFunction,
    NoConvergence,
    PreconditionError,
)
from .foundation import INF, CompactRegion, argument_count, default_node_count, is_infinite

EPS = np.finfo(float).eps

#: distance within which a numerator root and a denominator root are
#: considered the same point; fixed so that exact identities reproduce.
ROOT_MATCH_TOL = 1e-10

# sums whose magnitude is at rounding level relative to the summands are
# flushed to an exact zero
_CANCEL = 64 * EPS


class Polynomial:
    """Polynomial with complex coefficients in ascending degree."""

    __slots__ = ("coef",)

    def __init__(self, coefficients: Sequence[complex] = (0,)):
        c = np.array(coefficients, dtype=complex).ravel()
        if c.size == 0:
            c = np.zeros(1, dtype=complex)
        nz = np.nonzero(c)[0]
        c = c[: nz[-1] + 1] if nz.size else c[:1] * 0
        c.setflags(write=False)
        self.coef = c

    # construction ----------------------------------------------------------
    @classmethod
    def from_roots(cls, roots, lead=1.0):
        c = np.array([1.0 + 0j])
        for r in roots:
            c = np.concatenate([[0], c]) - r * np.concatenate([c, [0]])
        return cls(lead * c)

    @classmethod
    def monomial(cls, k, coef=1.0):
        return cls(np.concatenate([np.zeros(k), [coef]]))

    # inspection ------------------------------------------------------------
    @property
    def degree(self):
        return -1 if self.is_zero() else self.coef.size - 1

    def is_zero(self):
        return self.coef.size == 1 and self.coef[0] == 0

    @property
    def lead(self):
        return self.coef[-1]

    def scale(self):
        return float(np.max(np.abs(self.coef)))

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        out = np.full(z.shape, self.coef[-1], dtype=complex)
        for a in self.coef[-2::-1]:
            out = out * z + a
        return out

    def abs_eval(self, z):
        """``sum |a_k| |z|^k``, the natural scale for rounding errors."""
        r = np.abs(np.asarray(z, dtype=complex))
        out = np.zeros(r.shape)
        for a in np.abs(self.coef)[::-1]:
            out = out * r + a
        return out

    def deriv(self):
        if self.coef.size == 1:
            return Polynomial([0])
        return Polynomial(self.coef[1:] * np.arange(1, self.coef.size))

    # arithmetic ------------------------------------------------------------
    def _add(self, other, sign):
        other = _as_poly(other)
        n = max(self.coef.size, other.coef.size)
        a = np.zeros(n, dtype=complex)
        b = np.zeros(n, dtype=complex)
        a[: self.coef.size] = self.coef
        b[: other.coef.size] = sign * other.coef
        c = a + b
        c[np.abs(c) <= _CANCEL * (np.abs(a) + np.abs(b))] = 0
        return Polynomial(c)

    def __add__(self, other):
        return self._add(other, 1)

    __radd__ = __add__

    def __sub__(self, other):
        return self._add(other, -1)

    def __rsub__(self, other):
        return _as_poly(other)._add(self, -1)

    def __neg__(self):
        return Polynomial(-self.coef)

    def __mul__(self, other):
        if np.isscalar(other):
            return Polynomial(self.coef * other)
        other = _as_poly(other)
        return Polynomial(np.convolve(self.coef, other.coef))

    __rmul__ = __mul__

    def __pow__(self, k):
        out = Polynomial([1])
        for _ in range(k):
            out = out * self
        return out

    def divide_linear(self, r):
        """Quotient of synthetic division by ``(z - r)``; remainder dropped."""
        c = self.coef
        if c.size == 1:
            return Polynomial([0])
        q = np.zeros(c.size - 1, dtype=complex)
        acc = 0j
        for k in range(c.size - 1, 0, -1):
            acc = acc * r + c[k]
            q[k - 1] = acc
        return Polynomial(q)

    def compose(self, other):
        other = _as_poly(other)
        out = Polynomial([self.coef[-1]])
        for a in self.coef[-2::-1]:
            out = out * other + a
        return out

    def __eq__(self, other):
        other = _as_poly(other)
        return self.coef.size == other.coef.size and np.array_equal(self.coef, other.coef)

    def __hash__(self):
        return hash(self.coef.tobytes())

    def allclose(self, other, rtol=1e-12, atol=0.0):
        other = _as_poly(other)
        n = max(self.coef.size, other.coef.size)
        a = np.zeros(n, dtype=complex)
        b = np.zeros(n, dtype=complex)
        a[: self.coef.size] = self.coef
        b[: other.coef.size] = other.coef
        scale = max(np.max(np.abs(a)), np.max(np.abs(b)), 1e-300)
        return bool(np.all(np.abs(a - b) <= atol + rtol * scale))

    def __repr__(self):
        return f"Polynomial({np.round(self.coef, 14).tolist()})"

    # text form "re,im;re,im;..." ------------------------------------------
    def to_text(self):
        return ";".join(f"{float(a.real)!r},{float(a.imag)!r}" for a in self.coef)

    @classmethod
    def from_text(cls, text):
        coef = []
        for item in text.strip().split(";"):
            re_s, im_s = item.split(",")
            coef.append(complex(float(re_s), float(im_s)))
        return cls(coef)


def _as_poly(x):
    return x if isinstance(x, Polynomial) else Polynomial([x])


# ---------------------------------------------------------------------------
# Roots
# ---------------------------------------------------------------------------

def roots(p: Polynomial, max_iter=200, tol=1e-12) -> np.ndarray:
    """All roots with multiplicity, by Aberth-Ehrlich simultaneous iteration.

    Initial guesses sit equally spaced on the circle of radius
    ``1 + max |a_k / a_n|`` (a Cauchy bound), rotated off the real axis so
    that real polynomials with complex roots do not stall.
    """
    p = _as_poly(p)
    if p.degree < 1:
        raise PreconditionError("roots() needs degree >= 1")
    c = p.coef
    k0 = int(np.argmax(c != 0))  # exact zero roots
    c = c[k0:]
    n = c.size - 1
    found = [np.zeros(k0, dtype=complex)]
    if n > 0:
        a = c / c[-1]
        q = Polynomial(a)
        dq = q.deriv()
        radius = 1 + np.max(np.abs(a[:-1]))
        z = radius * np.exp(1j * (2 * np.pi * np.arange(n) / n + 0.4))
        done = np.zeros(n, dtype=bool)
        for _ in range(max_iter):
            pz, dpz = q(z), dq(z)
            small = np.abs(pz) <= 4 * EPS * q.abs_eval(z)
            done |= small
            if done.all():
                break
            diff = z[:, None] - z[None, :]
            np.fill_diagonal(diff, 1)
            s = np.sum(1 / diff, axis=1) - 1  # remove the diagonal 1/1
            with np.errstate(all="ignore"):
                ratio = pz / dpz
                w = ratio / (1 - ratio * s)
            w = np.where(np.isfinite(w), w, 0)
            w[done] = 0
            z = z - w
            done |= np.abs(w) <= tol * (1 + np.abs(z))
            if done.all():
                break
        resid = np.abs(p(z))
        bound = 1e-10 * p.scale() * (1 + np.abs(z)) ** p.degree
        if not np.all(resid <= bound):
            raise NoConvergence("Aberth iteration did not converge")
        found.append(z)
    return np.concatenate(found)


def cluster_roots(rts, tol=1e-6, poly: Polynomial | None = None):
    """Group numerically coincident roots: list of (centre, multiplicity).

    With ``poly`` given, the centre of a k-fold cluster is polished by
    Newton's method on the (k-1)-th derivative, where it is a simple root.
    """
    out = []
    for r in rts:
        for i, (c, m) in enumerate(out):
            if abs(r - c) <= tol * (1 + abs(c)):
                out[i] = ((c * m + r) / (m + 1), m + 1)
                break
        else:
            out.append((complex(r), 1))
    if poly is not None:
        for i, (c, m) in enumerate(out):
            if m < 2 or c == 0:
                continue
            d = poly
            for _ in range(m - 1):
                d = d.deriv()
            dd = d.deriv()
            for _ in range(3):
                step = complex(d(c)) / complex(dd(c))
                if not np.isfinite(step) or abs(step) > tol * (1 + abs(c)):
                    break
                c -= step
            out[i] = (c, m)
    return out


# ---------------------------------------------------------------------------
# Rational functions
# ---------------------------------------------------------------------------

def _matches_root(num: Polynomial, r) -> bool:
    """Whether ``num`` has a root within ROOT_MATCH_TOL of ``r`` (one Newton
    step estimates the distance)."""
    if num.is_zero():
        return False
    v = complex(num(r))
    scale = float(num.abs_eval(r))
    if abs(v) <= 4 * EPS * scale:
        return True
    dv = complex(num.deriv()(r))
    if dv == 0:
        return False
    return abs(v / dv) <= ROOT_MATCH_TOL * max(1.0, abs(r))


def _reduce(num: Polynomial, lead, den_roots):
    """Cancel numerator factors against the denominator given by its leading
    coefficient and roots; returns a normalized RationalFunction."""
    remaining = []
    for r in den_roots:
        if _matches_root(num, r):
            num = num.divide_linear(r)
        else:
            remaining.append(r)
    den = Polynomial.from_roots(remaining)
    return RationalFunction._raw(num * (1 / lead), den)


class RationalFunction:
    """Quotient of polynomials, normalized to a monic denominator with
    common roots removed."""

    __slots__ = ("num", "den")

    def __init__(self, numerator, denominator=1):
        num = _as_poly(numerator if not isinstance(numerator, (list, tuple, np.ndarray))
                       else Polynomial(numerator))
        den = _as_poly(denominator if not isinstance(denominator, (list, tuple, np.ndarray))
                       else Polynomial(denominator))
        if den.is_zero():
            raise PreconditionError("denominator is the zero polynomial")
        if num.is_zero():
            self.num, self.den = Polynomial([0]), Polynomial([1])
            return
        # exact common powers of z
        k = min(int(np.argmax(num.coef != 0)), int(np.argmax(den.coef != 0)))
        if k:
            num, den = Polynomial(num.coef[k:]), Polynomial(den.coef[k:])
        if den.degree >= 1 and num.degree >= 1:
            den_roots = roots(den)
            if any(_matches_root(num, r) for r in den_roots):
                red = _reduce(num, den.lead, den_roots)
                self.num, self.den = red.num, red.den
                return
        self.num = num * (1 / den.lead)
        self.den = den * (1 / den.lead)

    @classmethod
    def _raw(cls, num, den):
        obj = object.__new__(cls)
        obj.num, obj.den = num, den
        return obj

    @classmethod
    def from_polynomial(cls, p):
        return cls._raw(_as_poly(p), Polynomial([1]))

    @property
    def degree(self):
        return max(self.num.degree, self.den.degree)

    def is_zero(self):
        return self.num.is_zero()

    def is_constant(self):
        return self.num.degree <= 0 and self.den.degree == 0

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        n = self.num(z)
        d = self.den(z)
        with np.errstate(all="ignore"):
            out = n / d
        pole = d == 0
        if np.any(pole):
            out = np.where(pole, INF, out)
        return out

    def poles(self):
        return roots(self.den) if self.den.degree >= 1 else np.zeros(0, dtype=complex)

    def zeros(self):
        return roots(self.num) if self.num.degree >= 1 else np.zeros(0, dtype=complex)

    def deriv(self):
        return differentiate(self)

    # arithmetic ------------------------------------------------------------
    def __add__(self, other):
        other = _as_rational(other)
        return RationalFunction(self.num * other.den + other.num * self.den, self.den * other.den)

    __radd__ = __add__

    def __neg__(self):
        return RationalFunction._raw(-self.num, self.den)

    def __sub__(self, other):
        return self + (-_as_rational(other))

    def __rsub__(self, other):
        return _as_rational(other) - self

    def __mul__(self, other):
        other = _as_rational(other)
        return RationalFunction(self.num * other.num, self.den * other.den)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = _as_rational(other)
        if other.is_zero():
            raise ZeroDivisionError("division by the zero function")
        return RationalFunction(self.num * other.den, self.den * other.num)

    def compose(self, inner):
        """``self o inner`` for a rational ``inner``."""
        inner = _as_rational(inner)
        u, v = inner.num, inner.den
        n = max(self.num.degree, self.den.degree, 0)
        powers_u = [Polynomial([1])]
        powers_v = [Polynomial([1])]
        for _ in range(n):
            powers_u.append(powers_u[-1] * u)
            powers_v.append(powers_v[-1] * v)

        def lift(p):
            out = Polynomial([0])
            for k, a in enumerate(p.coef):
                if a != 0:
                    out = out + powers_u[k] * powers_v[n - k] * a
            return out

        return RationalFunction(lift(self.num), lift(self.den))

    def allclose(self, other, rtol=1e-10):
        other = _as_rational(other)
        return self.num.allclose(other.num, rtol) and self.den.allclose(other.den, rtol)

    def __repr__(self):
        return f"RationalFunction({self.num!r}, {self.den!r})"


def _as_rational(x):
    if isinstance(x, RationalFunction):
        return x
    if isinstance(x, Polynomial):
        return RationalFunction.from_polynomial(x)
    if isinstance(x, MoebiusMap):
        return x.as_rational()
    return RationalFunction.from_polynomial(Polynomial([x]))


def differentiate(f: RationalFunction) -> RationalFunction:
    f = _as_rational(f)
    p, q = f.num, f.den
    if q.degree == 0:
        return RationalFunction.from_polynomial(p.deriv() * (1 / q.coef[0]))
    return RationalFunction(p.deriv() * q - p * q.deriv(), q * q)


def schwarzian(f: RationalFunction) -> RationalFunction:
    """Exact Schwarzian ``(f''/f')' - (f''/f')^2 / 2``.

    With ``f = P/Q`` and ``A = P'Q - PQ'`` (so ``f' = A/Q^2``) one has
    ``A'Q' - AQ'' = Q (P''Q' - P'Q'')``, so the factor ``Q`` drops out
    algebraically::

        S_f = (2 A A'' - 3 A'^2 + 4 A (P''Q' - P'Q'')) / (2 A^2)

    ``S_f`` has exactly a double pole at every distinct zero of ``A``, so
    only repeated zeros of ``A`` need cancelling.
    """
    f = _as_rational(f)
    P, Q = f.num, f.den
    A = P.deriv() * Q - P * Q.deriv()
    if A.is_zero():
        raise ConstantFunction("Schwarzian of a constant function")
    A1 = A.deriv()
    P1, P2 = P.deriv(), P.deriv().deriv()
    Q1, Q2 = Q.deriv(), Q.deriv().deriv()
    N = (A * A.deriv().deriv() * 2 - A1 * A1 * 3) + A * (P2 * Q1 - P1 * Q2) * 4
    if N.is_zero() or A.degree == 0:
        return RationalFunction._raw(N * (1 / (2 * A.lead ** 2)), Polynomial([1]))
    monic = A * (1 / A.lead)
    lead = 2 * A.lead ** 2
    # exact zeros of A: the double pole at 0 survives, the rest cancels
    k0 = int(np.argmax(monic.coef != 0))
    if k0 > 1:
        N = Polynomial(N.coef[2 * k0 - 2:])
    rest = Polynomial(monic.coef[k0:])
    clusters = cluster_roots(roots(rest), poly=rest) if rest.degree >= 1 else []
    if all(k == 1 for _, k in clusters):
        base = rest * Polynomial([0, 1]) if k0 else rest
        return RationalFunction._raw(N * (1 / lead), base * base)
    keep, drop = ([0j, 0j] if k0 else []), []
    for c, k in clusters:
        keep += [c, c]
        drop += [c] * (2 * k - 2)
    for r in sorted(drop, key=abs):
        N = N.divide_linear(r)
    return RationalFunction._raw(N * (1 / lead), Polynomial.from_roots(keep))


# ---------------------------------------------------------------------------
# Moebius maps
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MoebiusMap:
    """``z -> (a z + b) / (c z + d)``, scaled so the largest coefficient has
    modulus one."""

    a: complex
    b: complex
    c: complex
    d: complex

    def __post_init__(self):
        coefs = np.array([self.a, self.b, self.c, self.d], dtype=complex)
        m = np.max(np.abs(coefs))
        if m == 0 or not np.all(np.isfinite(coefs)):
            raise PreconditionError("degenerate Moebius coefficients")
        coefs = coefs / m
        for name, v in zip("abcd", coefs):
            object.__setattr__(self, name, complex(v))
        if abs(self.det) < 1e-14:
            raise PreconditionError("Moebius map is singular (ad - bc ~ 0)")

    @property
    def det(self):
        return self.a * self.d - self.b * self.c

    @classmethod
    def identity(cls):
        return cls(1, 0, 0, 1)

    @classmethod
    def translation(cls, t):
        return cls(1, t, 0, 1)

    @classmethod
    def disk_automorphism(cls, a=0.0, theta=0.0):
        """``z -> e^{i theta} (z + a) / (1 + conj(a) z)`` for ``|a| < 1``."""
        a = complex(a)
        if abs(a) >= 1:
            raise PreconditionError("disk automorphism needs |a| < 1")
        u = np.exp(1j * theta)
        return cls(u, u * a, np.conj(a), 1)

    @classmethod
    def from_three_points(cls, z, w):
        """The map sending ``z[i] -> w[i]`` for three distinct points each."""
        def to_standard(p1, p2, p3):
            # p1 -> 0, p2 -> 1, p3 -> infinity
            if is_infinite(p1):
                return np.array([[0, p2 - p3], [1, -p3]], dtype=complex)
            if is_infinite(p2):
                return np.array([[1, -p1], [1, -p3]], dtype=complex)
            if is_infinite(p3):
                return np.array([[1, -p1], [0, p2 - p1]], dtype=complex)
            return np.array([[p2 - p3, -p1 * (p2 - p3)], [p2 - p1, -p3 * (p2 - p1)]], dtype=complex)

        mz = to_standard(*z)
        mw = to_standard(*w)
        m = np.linalg.solve(mw, mz)
        return cls(m[0, 0], m[0, 1], m[1, 0], m[1, 1])

    def matrix(self):
        return np.array([[self.a, self.b], [self.c, self.d]])

    @property
    def pole(self):
        return INF if self.c == 0 else -self.d / self.c

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        inf = is_infinite(z)
        zz = np.where(inf, 0, z)
        num = self.a * zz + self.b
        den = self.c * zz + self.d
        with np.errstate(all="ignore"):
            out = np.where(den == 0, INF, num / np.where(den == 0, 1, den))
        if np.any(inf):
            at_inf = INF if self.c == 0 else self.a / self.c
            out = np.where(inf, at_inf, out)
        return out

    def deriv(self, z):
        z = np.asarray(z, dtype=complex)
        with np.errstate(all="ignore"):
            return self.det / (self.c * z + self.d) ** 2

    def inverse(self):
        return MoebiusMap(self.d, -self.b, -self.c, self.a)

    def compose(self, other: "MoebiusMap") -> "MoebiusMap":
        """``self o other``."""
        m = self.matrix() @ other.matrix()
        return MoebiusMap(m[0, 0], m[0, 1], m[1, 0], m[1, 1])

    def as_rational(self) -> RationalFunction:
        return RationalFunction(Polynomial([self.b, self.a]), Polynomial([self.d, self.c]))

    def circle_image(self, center, radius):
        """Image of the circle ``|z - center| = radius`` as (center, radius).

        The pole and its reflection in the circle are symmetric points, so
        their images (infinity and the image centre) are symmetric too.
        """
        center = complex(center)
        pole = self.pole
        if self.c == 0:
            return complex(self(center)), abs(self.a / self.d) * radius
        if abs(abs(pole - center) - radius) <= 1e-14 * max(1.0, radius):
            raise PreconditionError("circle passes through the pole: image is a line")
        if pole == center:
            w_center = self.a / self.c
        else:
            w_center = complex(self(center + radius ** 2 / np.conj(pole - center)))
        w_radius = abs(complex(self(center + radius)) - w_center)
        return w_center, w_radius

    def disk_image(self, disk):
        """Image of a closed disk not containing the pole."""
        from .foundation import ClosedDisk

        if self.c != 0 and abs(self.pole - disk.center) <= disk.radius:
            raise PreconditionError("disk contains the pole of the map")
        c, r = self.circle_image(disk.center, disk.radius)
        return ClosedDisk(c, r)


def compose_moebius(T: MoebiusMap, f: RationalFunction) -> RationalFunction:
    """``T o f``."""
    f = _as_rational(f)
    return RationalFunction(f.num * T.a + f.den * T.b, f.num * T.c + f.den * T.d)


def precompose_moebius(f: RationalFunction, T: MoebiusMap) -> RationalFunction:
    """``f o T``."""
    return _as_rational(f).compose(T.as_rational())


# ---------------------------------------------------------------------------
# Local univalence
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class UnivalenceCertificate:
    region: CompactRegion
    derivative_zero_count: int
    double_pole_count: int

    @property
    def verdict(self):
        return self.derivative_zero_count == 0 and self.double_pole_count == 0


def certify_local_univalence(f: RationalFunction, region: CompactRegion) -> UnivalenceCertificate:
    """Count critical points and multiple poles of ``f`` inside ``region``.

    Zeros of ``f'`` are counted with the argument principle on the boundary
    circles; poles of ``f'`` inside (order ``m + 1`` for a pole of order
    ``m``) are added back from the denominator root multiplicities.
    """
    f = _as_rational(f)
    if f.is_constant():
        raise ConstantFunction("constant functions are not locally univalent")
    df = differentiate(f)
    d2f = differentiate(df)
    crit = df.zeros()
    poles = cluster_roots(f.poles(), poly=f.den)
    for p in list(crit) + [c for c, _ in poles]:
        if region.distance_to_boundary(p) < 1e-8:
            raise BoundaryDegeneracy(f"critical point or pole {p} on the region boundary")

    def log_derivative(z):
        return d2f(z) / df(z)

    n0 = default_node_count(f.degree)
    total = 0
    for contour in region.boundary_contours(n0):
        total += argument_count(log_derivative, contour)
    inside = [(c, m) for c, m in poles if region.contains(c)]
    zero_count = total + sum(m + 1 for _, m in inside)
    double = sum(1 for _, m in inside if m >= 2)
    return UnivalenceCertificate(region, int(zero_count), int(double))
