"""Analytic test fields on R^4 with exact derivatives up to third order."""

from __future__ import annotations

import math

import numpy as np

from .field import Jet2

__all__ = [
    "AnalyticField",
    "QuadraticField",
    "Polynomial4",
    "GaussianField",
    "ExpProductField",
    "RadialField",
    "random_quartic",
]


class AnalyticField:
    """Base class: subclasses provide ``value``, ``gradient``, ``hessian``, ``third``."""

    def jet(self, x) -> Jet2:
        x = np.asarray(x, dtype=float)
        return Jet2(float(self.value(x)), self.gradient(x), self.hessian(x), x)

    def __call__(self, x):
        return self.value(x)


class QuadraticField(AnalyticField):
    """``u = x.Qx/2 + b.x + c``."""

    def __init__(self, Q, b=None, c: float = 0.0):
        Q = np.asarray(Q, dtype=float)
        self.Q = 0.5 * (Q + Q.T)
        self.b = np.zeros(4) if b is None else np.asarray(b, dtype=float)
        self.c = float(c)

    def value(self, x):
        x = np.asarray(x, dtype=float)
        return 0.5 * np.einsum("...i,ij,...j->...", x, self.Q, x) + x @ self.b + self.c

    def gradient(self, x):
        return np.asarray(x, dtype=float) @ self.Q + self.b

    def hessian(self, x):
        return np.broadcast_to(self.Q, np.shape(x)[:-1] + (4, 4)).copy()

    def third(self, x):
        return np.zeros(np.shape(x)[:-1] + (4, 4, 4))


class Polynomial4(AnalyticField):
    """Sum of monomials ``c * x^a`` with exponent rows ``a`` in N^4."""

    def __init__(self, exponents, coeffs):
        self.exponents = np.asarray(exponents, dtype=int).reshape(-1, 4)
        self.coeffs = np.asarray(coeffs, dtype=float).reshape(-1)
        if self.exponents.shape[0] != self.coeffs.size:
            raise ValueError("one coefficient per monomial")

    def deriv(self, i: int) -> "Polynomial4":
        a = self.exponents[:, i]
        keep = a > 0
        exps = self.exponents[keep].copy()
        exps[:, i] -= 1
        return Polynomial4(exps, self.coeffs[keep] * a[keep])

    def value(self, x):
        x = np.asarray(x, dtype=float)
        if self.coeffs.size == 0:
            return np.zeros(x.shape[:-1])
        mono = np.prod(x[..., None, :] ** self.exponents, axis=-1)
        return mono @ self.coeffs

    def gradient(self, x):
        return np.stack([self.deriv(i).value(x) for i in range(4)], axis=-1)

    def hessian(self, x):
        d = [self.deriv(i) for i in range(4)]
        return np.stack([np.stack([d[i].deriv(j).value(x) for j in range(4)], -1) for i in range(4)], -2)

    def third(self, x):
        x = np.asarray(x, dtype=float)
        out = np.empty(x.shape[:-1] + (4, 4, 4))
        for i in range(4):
            di = self.deriv(i)
            for j in range(4):
                dij = di.deriv(j)
                for k in range(4):
                    out[..., i, j, k] = dij.deriv(k).value(x)
        return out


def random_quartic(rng, scale: float = 1.0) -> Polynomial4:
    """All monomials of total degree <= 4 with normal coefficients."""
    exps = [a for a in np.ndindex(5, 5, 5, 5) if sum(a) <= 4]
    return Polynomial4(exps, scale * rng.standard_normal(len(exps)))


class GaussianField(AnalyticField):
    """``u = amplitude * exp(-|x|^2)``."""

    def __init__(self, amplitude: float = 1.0):
        self.amplitude = float(amplitude)

    def _e(self, x):
        return self.amplitude * np.exp(-np.sum(x * x, axis=-1))

    def value(self, x):
        return self._e(np.asarray(x, dtype=float))

    def gradient(self, x):
        x = np.asarray(x, dtype=float)
        return -2 * x * self._e(x)[..., None]

    def hessian(self, x):
        x = np.asarray(x, dtype=float)
        e = self._e(x)[..., None, None]
        return e * (4 * np.einsum("...i,...j->...ij", x, x) - 2 * np.eye(4))

    def third(self, x):
        x = np.asarray(x, dtype=float)
        e = self._e(x)
        eye = np.eye(4)
        xxx = np.einsum("i,j,k->ijk", x, x, x)
        sym = (np.einsum("ij,k->ijk", eye, x) + np.einsum("ik,j->ijk", eye, x)
               + np.einsum("jk,i->ijk", eye, x))
        return e * (-8 * xxx + 4 * sym)


class ExpProductField(AnalyticField):
    """``u = exp(x1 * x2)`` (first two coordinates)."""

    def value(self, x):
        x = np.asarray(x, dtype=float)
        return np.exp(x[..., 0] * x[..., 1])

    def gradient(self, x):
        x = np.asarray(x, dtype=float)
        e = self.value(x)
        g = np.zeros(x.shape)
        g[..., 0] = x[..., 1] * e
        g[..., 1] = x[..., 0] * e
        return g

    def hessian(self, x):
        x = np.asarray(x, dtype=float)
        a, b = x[0], x[1]
        e = math.exp(a * b)
        h = np.zeros((4, 4))
        h[0, 0] = b * b * e
        h[1, 1] = a * a * e
        h[0, 1] = h[1, 0] = (1 + a * b) * e
        return h

    def third(self, x):
        x = np.asarray(x, dtype=float)
        a, b = x[0], x[1]
        e = math.exp(a * b)
        t = np.zeros((4, 4, 4))
        t[0, 0, 0] = b**3 * e
        t[1, 1, 1] = a**3 * e
        v001 = (2 * b + a * b * b) * e
        v011 = (2 * a + a * a * b) * e
        for i, j, k in ((0, 0, 1), (0, 1, 0), (1, 0, 0)):
            t[i, j, k] = v001
        for i, j, k in ((0, 1, 1), (1, 0, 1), (1, 1, 0)):
            t[i, j, k] = v011
        return t


class RadialField(AnalyticField):
    """``u(x) = U(ln|x|)`` for a solved :class:`~sigma2lab.radial.RadialProfile`.

    Derivatives use ``u_s`` and the ODE value of ``u_ss``; no third derivatives.
    """

    def __init__(self, profile):
        self.profile = profile

    def _radial(self, x):
        x = np.asarray(x, dtype=float)
        r = np.sqrt(np.sum(x * x, axis=-1))
        s = np.log(r)
        u, us = self.profile.evaluate(np.atleast_1d(s).ravel())
        u = u.reshape(np.shape(r))
        us = us.reshape(np.shape(r))
        return x, r, s, u, us

    def value(self, x):
        return self._radial(x)[3]

    def gradient(self, x):
        x, r, _, _, us = self._radial(x)
        return (us / (r * r))[..., None] * x

    def hessian(self, x):
        x, r, s, u, us = self._radial(x)
        uss = self.profile.ode_u_ss(s, u, us)
        r2 = (r * r)[..., None, None]
        xx = np.einsum("...i,...j->...ij", x, x) / r2
        d1 = (us / (r * r))[..., None, None]  # U'/r
        d2 = ((uss - us) / (r * r))[..., None, None]  # U''
        return d2 * xx + d1 * (np.eye(4) - xx)

    def third(self, x):
        raise NotImplementedError("radial profiles carry derivatives up to order two")
