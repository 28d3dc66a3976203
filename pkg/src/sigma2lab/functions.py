"""Right-hand sides ``f(u) = exp(4u) p(u)`` and weights ``K(x)``."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import polynomial as npoly

#: Area of the unit 3-sphere.
S3_AREA = 2.0 * np.pi**2

BETA = 4.0


@dataclass(frozen=True)
class FSpec:
    """``f(u) = exp(4u) * p(u)`` with ``p`` given by ascending coefficients.

    The anti-derivative is ``F(u) = exp(4u) * g(u)`` with the polynomial ``g``
    solving ``g' + 4 g = p``; it is exact, so ``F(t) - F(u)`` carries no
    quadrature error.
    """

    coeffs: tuple[float, ...] = (1.5,)

    def __post_init__(self):
        c = tuple(float(a) for a in np.atleast_1d(self.coeffs))
        if not c:
            raise ValueError("p needs at least one coefficient")
        object.__setattr__(self, "coeffs", c)

    @property
    def is_constant(self) -> bool:
        return all(a == 0.0 for a in self.coeffs[1:])

    def p(self, u):
        return npoly.polyval(u, self.coeffs)

    def dp(self, u):
        return npoly.polyval(u, npoly.polyder(self.coeffs)) if len(self.coeffs) > 1 else 0.0 * np.asarray(u)

    def __call__(self, u):
        u = np.asarray(u, dtype=float)
        return np.exp(BETA * u) * self.p(u)

    @property
    def _antideriv_coeffs(self) -> np.ndarray:
        # g = sum_k (-1)^k p^(k) / 4^(k+1)
        g = np.zeros(len(self.coeffs))
        d = np.array(self.coeffs)
        k = 0
        while d.size and np.any(d != 0):
            g[: d.size] += (-1) ** k * d / BETA ** (k + 1)
            d = npoly.polyder(d) if d.size > 1 else np.array([])
            k += 1
        return g

    def F(self, u):
        """Anti-derivative with ``F(u) -> 0`` as ``u -> -inf``."""
        u = np.asarray(u, dtype=float)
        return np.exp(BETA * u) * npoly.polyval(u, self._antideriv_coeffs)

    def scaled(self, c: float) -> "FSpec":
        return FSpec(tuple(c * a for a in self.coeffs))

    def describe(self) -> dict:
        return {"form": "exp(4u)*p(u)", "p_coeffs": list(self.coeffs)}

    @classmethod
    def parse(cls, text: str) -> "FSpec":
        """``"1.5"`` or ``"1.5,0,1"`` (ascending coefficients of p)."""
        return cls(tuple(float(a) for a in text.replace(" ", "").split(",") if a))


@dataclass(frozen=True)
class KSpec:
    """Weight ``K(x) = 1 + amplitude * exp(-width * |x|^2)``.

    ``amplitude = 0`` is the constant weight ``K = 1``. The gradient is analytic.
    """

    amplitude: float = 0.0
    width: float = 1.0
    _kind: str = field(default="gauss", repr=False)

    @property
    def is_constant(self) -> bool:
        return self.amplitude == 0.0

    def radial(self, r):
        r = np.asarray(r, dtype=float)
        return 1.0 + self.amplitude * np.exp(-self.width * r * r)

    def radial_x_dot_grad(self, r):
        """``<x, grad K>`` at ``|x| = r``."""
        r = np.asarray(r, dtype=float)
        return -2.0 * self.width * self.amplitude * r * r * np.exp(-self.width * r * r)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return self.radial(np.sqrt(np.sum(x * x, axis=-1)))

    def grad(self, x):
        x = np.asarray(x, dtype=float)
        r2 = np.sum(x * x, axis=-1, keepdims=True)
        return -2.0 * self.width * self.amplitude * x * np.exp(-self.width * r2)

    def describe(self) -> dict:
        if self.is_constant:
            return {"form": "constant", "value": 1.0}
        return {"form": "1+a*exp(-b|x|^2)", "a": self.amplitude, "b": self.width}

    @classmethod
    def parse(cls, text: str) -> "KSpec":
        """``"1"`` for K = 1, or ``"gauss:a,b"``."""
        text = text.strip()
        if text in ("1", "1.0", "const", "constant"):
            return cls()
        if text.startswith("gauss:"):
            a, b = (float(v) for v in text[6:].split(","))
            return cls(a, b)
        raise ValueError(f"unrecognised K spec {text!r}")
