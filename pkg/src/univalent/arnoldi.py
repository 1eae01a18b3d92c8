"""Polynomial bases orthogonalized on a sample set (Vandermonde with Arnoldi).

A degree-``n`` basis is stored through its Hessenberg recurrence
``t q_k = sum_{j<=k+1} H[j, k] q_j``, which evaluates stably at new points
long after the monomial Vandermonde matrix has become numerically singular.
The variable ``t`` is either ``(z - center) / scale`` or, for Laurent parts
around a puncture ``p``, ``scale / (z - p)``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .rational import Polynomial


def arnoldi(t: np.ndarray, degree: int):
    """Orthogonalize ``1, t, ..., t^degree`` on the points ``t``.

    Returns ``(Q, H)``: columns of ``Q`` have root-mean-square one on ``t``.
    Classical Gram-Schmidt is run twice per column.
    """
    t = np.asarray(t, dtype=complex).ravel()
    m = t.size
    Q = np.zeros((m, degree + 1), dtype=complex)
    H = np.zeros((degree + 1, degree), dtype=complex)
    Q[:, 0] = 1
    for k in range(degree):
        v = t * Q[:, k]
        for _ in range(2):
            h = Q[:, : k + 1].conj().T @ v / m
            v = v - Q[:, : k + 1] @ h
            H[: k + 1, k] += h
        H[k + 1, k] = np.linalg.norm(v) / np.sqrt(m)
        Q[:, k + 1] = v / H[k + 1, k]
    return Q, H


def _eval_basis(H, t, with_derivative=False):
    n = H.shape[1]
    W = np.zeros((t.size, n + 1), dtype=complex)
    W[:, 0] = 1
    D = np.zeros_like(W) if with_derivative else None
    for k in range(n):
        v = t * W[:, k] - W[:, : k + 1] @ H[: k + 1, k]
        W[:, k + 1] = v / H[k + 1, k]
        if with_derivative:
            dv = W[:, k] + t * D[:, k] - D[:, : k + 1] @ H[: k + 1, k]
            D[:, k + 1] = dv / H[k + 1, k]
    return W, D


@dataclass(frozen=True, eq=False)
class ArnoldiSeries:
    """``sum_k coef[k] q_k(t(z))``; a polynomial in ``z`` when ``pole`` is
    None, otherwise a polynomial in ``scale / (z - pole)``."""

    H: np.ndarray
    coef: np.ndarray
    center: complex = 0j
    scale: float = 1.0
    pole: complex | None = None

    @property
    def degree(self):
        return self.H.shape[1]

    def variable(self, z):
        z = np.asarray(z, dtype=complex)
        if self.pole is None:
            return (z - self.center) / self.scale
        with np.errstate(all="ignore"):
            return self.scale / (z - self.pole)

    def _dvariable(self, z):
        if self.pole is None:
            return np.full(np.shape(z), 1 / self.scale, dtype=complex)
        with np.errstate(all="ignore"):
            return -self.scale / (z - self.pole) ** 2

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        W, _ = _eval_basis(self.H, self.variable(z).ravel())
        return (W @ self.coef).reshape(z.shape)

    def deriv(self, z):
        z = np.asarray(z, dtype=complex)
        _, D = _eval_basis(self.H, self.variable(z).ravel(), True)
        return ((D @ self.coef) * self._dvariable(z).ravel()).reshape(z.shape)

    def scaled(self, c):
        return ArnoldiSeries(self.H, self.coef * c, self.center, self.scale, self.pole)

    def to_polynomial(self) -> Polynomial:
        """Monomial coefficients in ``t`` (ill-conditioned at high degree;
        meant for reporting)."""
        t = Polynomial([0, 1])
        qs = [Polynomial([1])]
        for k in range(self.degree):
            v = qs[-1] * t
            for j in range(k + 1):
                v = v - qs[j] * self.H[j, k]
            qs.append(v * (1 / self.H[k + 1, k]))
        out = Polynomial([0])
        for c, q in zip(self.coef, qs):
            out = out + q * c
        return out

    def laurent(self) -> Polynomial:
        """Coefficients in ``z - center`` (poly part) or ``1/(z - pole)``."""
        p = self.to_polynomial()
        if self.pole is None:
            k = np.arange(p.coef.size)
            return Polynomial(p.coef / self.scale ** k)
        k = np.arange(p.coef.size)
        return Polynomial(p.coef * self.scale ** k)

