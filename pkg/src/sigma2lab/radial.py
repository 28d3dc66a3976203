"""Radial solutions of ``sigma_2(A(rho, u)) = K f(u)`` in log-radius ``s = ln r``.

With ``f = (3/2) exp(4u)`` the equation

    3 u_ss (u_s + rho/2 u_s^2) = (3/2) exp(4(u + s))

has the first integral ``u_s^2 q(u_s) = exp(4(u + s)) / 4`` with
``q(x) = rho/4 x^2 + (2 + rho)/3 x + 1``. Eliminating the exponential leaves
the autonomous equation ``u_ss = 2 u_s q(u_s) / (1 + rho/2 u_s)``. It is
integrated in a logistic chart ``z`` for the slope (``u_s = x1 expit(z)`` for
``rho <= 1``), in which both ends ``u_s -> 0`` and ``u_s -> x1`` are reached
at a constant rate and no cancellation occurs near the double root at
``rho = 1``. ``u`` is then read off the first integral.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicHermiteSpline
from scipy.optimize import brentq
from scipy.special import expit

from .functions import FSpec, KSpec

__all__ = [
    "NonexistenceError",
    "GaugeError",
    "UnsupportedFError",
    "DomainError",
    "RootAnalysis",
    "RadialProfile",
    "root_analysis",
    "asymptotic_slope",
    "admissible_epsilon",
    "first_integral_residual",
    "solve_radial",
    "solve_radial_general",
    "concavity_check",
]

YAMABE_F = FSpec((1.5,))


class NonexistenceError(ValueError):
    """No entire radial solution exists for the requested ``rho``."""


class GaugeError(ValueError):
    """The gauge ``u_s(0) = -epsilon`` is inadmissible or the cone was left."""


class UnsupportedFError(ValueError):
    """Operation needs ``p == 3/2`` (and ``K == 1``)."""


class DomainError(ValueError):
    """Requested level or radius outside the data."""


def _check_rho(rho: float) -> float:
    rho = float(rho)
    if not math.isfinite(rho):
        raise ValueError("rho must be finite")
    if rho < 0:
        raise ValueError("rho < 0 is out of scope (flip signs to reduce to rho > 0)")
    if rho >= 2:
        raise NonexistenceError(
            f"rho = {rho:g} >= 2: no entire solution in the positive cone exists"
        )
    return rho


def _q(x, rho):
    return rho / 4 * x * x + (2 + rho) / 3 * x + 1


def _dq(x, rho):
    return rho / 2 * x + (2 + rho) / 3


@dataclass(frozen=True)
class RootAnalysis:
    rho: float
    x0: float
    x1: float
    x2: float
    discriminant: float

    @property
    def real(self) -> bool:
        return self.discriminant >= 0


def root_analysis(rho: float) -> RootAnalysis:
    """Roots of ``x (rho/4 x^2 + (2+rho)/3 x + 1)``.

    ``x1`` is the root closer to -1. Complex pairs (``1 < rho < 4``) are
    reported as NaN.
    """
    rho = float(rho)
    disc = rho * rho - 5 * rho + 4
    if rho == 0:
        return RootAnalysis(rho, 0.0, -1.5, -math.inf, disc)
    if disc < 0:
        return RootAnalysis(rho, 0.0, math.nan, math.nan, disc)
    a, b, c = rho / 4, (2 + rho) / 3, 1.0
    # b > 0: the cancellation-free root is -(b + sqrt)/(2a); the other is c/(a*that)
    big = -(b + math.sqrt(disc) / 3) / (2 * a)
    small = c / (a * big)
    return RootAnalysis(rho, 0.0, small, big, disc)


def asymptotic_slope(rho: float) -> float:
    """Limit of ``u_s`` as ``s -> inf`` for the ``p = 3/2`` radial solution."""
    rho = _check_rho(rho)
    if rho == 0:
        return -1.5
    roots = root_analysis(rho)
    if not roots.real:
        raise NonexistenceError(
            f"rho = {rho:g}: q has no real root, u_s reaches -2/rho at finite radius"
        )
    return roots.x1


def admissible_epsilon(rho: float) -> tuple[float, float]:
    """Open interval of gauges ``epsilon`` with ``u_s(0) = -epsilon``."""
    rho = _check_rho(rho)
    if rho == 0:
        return 0.0, 1.5
    roots = root_analysis(rho)
    return 0.0, (-roots.x1 if roots.real else 2.0 / rho)


@dataclass
class RadialProfile:
    """Radial solution sampled on a log-radius grid.

    ``evaluate`` uses the integrator's dense output when available and a
    cubic Hermite fit of the samples otherwise (e.g. after loading a CSV).
    """

    rho: float
    epsilon: float
    s_grid: np.ndarray
    u: np.ndarray
    u_s: np.ndarray
    alpha: float
    f_spec: FSpec = YAMABE_F
    k_spec: KSpec = field(default_factory=KSpec)
    tolerance: float = 1e-10
    s_break: float | None = None
    consistency: float = 0.0
    method: str = "first_integral"
    _dense: object = field(default=None, repr=False)

    def __post_init__(self):
        self.s_grid = np.asarray(self.s_grid, dtype=float)
        self.u = np.asarray(self.u, dtype=float)
        self.u_s = np.asarray(self.u_s, dtype=float)
        if not (self.s_grid.shape == self.u.shape == self.u_s.shape):
            raise ValueError("s_grid, u and u_s must have equal length")
        if np.any(np.diff(self.s_grid) <= 0):
            raise ValueError("s_grid must be strictly increasing")
        if self._dense is None:
            uss = self.ode_u_ss(self.s_grid, self.u, self.u_s)
            self._u_spline = CubicHermiteSpline(self.s_grid, self.u, self.u_s)
            self._us_spline = CubicHermiteSpline(self.s_grid, self.u_s, uss)

    @property
    def entire(self) -> bool:
        return self.s_break is None

    @property
    def s_min(self) -> float:
        return float(self.s_grid[0])

    @property
    def s_max(self) -> float:
        return float(self.s_grid[-1])

    @property
    def u_max(self) -> float:
        """``lim u`` as ``s -> -inf`` (``u_s`` decays like ``exp(2s)`` there)."""
        return float(self.u[0] - self.u_s[0] / 2)

    @property
    def u_min(self) -> float:
        return float(self.u[-1])

    def ode_u_ss(self, s, u, u_s):
        s, u, x = np.asarray(s), np.asarray(u), np.asarray(u_s)
        rhs = self.k_spec.radial(np.exp(s)) * self.f_spec.p(u) * np.exp(4 * (u + s))
        return rhs / (3 * x * (1 + self.rho / 2 * x))

    def evaluate(self, s):
        """Return ``(u, u_s)`` at log-radii ``s`` (left tail extrapolated)."""
        s = np.asarray(s, dtype=float)
        if np.any(s > self.s_max + 1e-12):
            raise DomainError(f"s beyond the profile end {self.s_max:g}")
        inside = s >= self.s_min
        u = np.empty_like(s)
        us = np.empty_like(s)
        si = np.clip(s[inside], self.s_min, self.s_max)
        if self._dense is not None:
            u[inside], us[inside] = self._dense(si)
        else:
            u[inside], us[inside] = self._u_spline(si), self._us_spline(si)
        left = ~inside
        if np.any(left):
            decay = np.exp(2 * (s[left] - self.s_min))
            us[left] = self.u_s[0] * decay
            u[left] = self.u[0] + self.u_s[0] / 2 * (decay - 1)
        return u, us

    def u_at(self, s):
        return self.evaluate(s)[0]

    def slope_at(self, s):
        return self.evaluate(s)[1]

    def s_of_t(self, t: float) -> float:
        """Unique log-radius where ``u = t``."""
        t = float(t)
        if not (self.u_min <= t < self.u_max):
            raise DomainError(f"t = {t:g} outside ({self.u_min:g}, {self.u_max:g})")
        if t >= self.u[0]:
            # left tail: u = u0 + us0/2 (e^{2(s-s0)} - 1)
            return self.s_min + 0.5 * math.log1p(2 * (t - self.u[0]) / self.u_s[0])
        k = int(np.searchsorted(-self.u, -t))
        lo, hi = self.s_grid[max(k - 1, 0)], self.s_grid[min(k, self.u.size - 1)]
        if lo == hi:
            return float(lo)
        return brentq(lambda s: float(self.u_at(np.array([s]))[0]) - t, lo, hi, xtol=1e-15, rtol=1e-15)

    def describe(self) -> dict:
        return {
            "rho": self.rho,
            "epsilon": self.epsilon,
            "alpha": self.alpha,
            "tolerance": self.tolerance,
            "f_spec": self.f_spec.describe(),
            "K_spec": self.k_spec.describe(),
            "s_break": self.s_break,
            "method": self.method,
        }


def first_integral_residual(profile: RadialProfile) -> float:
    """Max of ``|u_s^2 q(u_s) - exp(4(u+s))/4|`` over the profile grid."""
    if profile.f_spec.coeffs != (1.5,) or not profile.k_spec.is_constant:
        raise UnsupportedFError("the first integral exists only for p = 3/2, K = 1")
    x = profile.u_s
    res = x * x * _q(x, profile.rho) - 0.25 * np.exp(4 * (profile.u + profile.s_grid))
    return float(np.max(np.abs(res)))


def _sample_grid(s_lo, s_hi, n):
    return np.linspace(s_lo, s_hi, n)


def _ivp_tols(tolerance):
    rtol = max(min(tolerance * 1e-3, 1e-10), 2.5e-14)
    return rtol, rtol * 1e-3


def _slope_chart(rho: float):
    """Scalar chart for ``u_s`` and the pieces needed to rebuild ``u``.

    For ``rho <= 1`` the variable is ``z = ln(-u_s / (u_s - x1))``, so that both
    ``u_s`` and ``u_s - x1`` come out of a logistic function at full relative
    precision; ``dz/ds`` is exactly 2 for ``rho`` in {0, 1}. For ``1 < rho < 2``
    (no real root) the variable is ``z = ln(-u_s)``.

    Returns ``(z_of_x, rate, x_of_z, log_q_of_z)``.
    """
    if rho <= 1:
        x1 = root_analysis(rho).x1
        edge_gap = x1 + (2 / rho if rho > 0 else math.inf)
        split = x1 - root_analysis(rho).x2  # x - x2 = (x - x1) + split

        def parts(z):
            x = x1 * expit(z)
            gap = -x1 * expit(-z)  # x - x1
            return x, gap

        def log_q(z):
            x, gap = parts(z)
            if rho == 0:
                return np.log(2 / 3 * gap)
            return np.log(rho / 4 * gap) + np.log(gap + split)

        def rate(z):
            if rho == 0:
                return 2.0
            x, gap = parts(z)
            return -(rho * x1 / 2) * (gap + split) / (rho / 2 * (gap + edge_gap))

        def z_of_x(x):
            return math.log(-x / (x - x1))

        return z_of_x, rate, lambda z: parts(z)[0], log_q

    def x_of(z):
        return -np.exp(z)

    def rate(z):
        x = -math.exp(z)
        return 2 * _q(x, rho) / (1 + rho / 2 * x)

    return (lambda x: math.log(-x)), rate, x_of, (lambda z: np.log(_q(x_of(z), rho)))


def solve_radial(
    rho: float,
    epsilon: float,
    s_range: tuple[float, float] = (-12.0, 12.0),
    tolerance: float = 1e-10,
    n_samples: int = 4801,
    on_breakdown: str = "truncate",
) -> RadialProfile:
    """Solve the ``p = 3/2`` radial problem with gauge ``u_s(0) = -epsilon``.

    For ``1 < rho < 2`` the slope reaches the cone edge ``-2/rho`` at a finite
    ``s``; the profile is then cut just before that point (``s_break`` set,
    ``alpha`` NaN) or a :class:`GaugeError` is raised if
    ``on_breakdown="raise"``.
    """
    rho = _check_rho(rho)
    lo, hi = admissible_epsilon(rho)
    if not (lo < epsilon < hi):
        raise GaugeError(f"epsilon = {epsilon:g} outside admissible ({lo:g}, {hi:g})")
    s_lo, s_hi = map(float, s_range)
    if not (s_lo < 0 < s_hi):
        raise ValueError("s_range must contain 0 (the gauge point)")

    z_of_x, rate, x_of_z, log_q = _slope_chart(rho)

    def rhs(s, state):
        z = state[0]
        return [rate(z), float(x_of_z(z))]

    edge = 1e-7

    def cone_edge(s, state):
        return 1 + rho / 2 * float(x_of_z(state[0])) - edge

    cone_edge.terminal = True
    cone_edge.direction = -1

    z0 = [z_of_x(-epsilon), 0.0]
    rtol, atol = _ivp_tols(tolerance)
    kw = dict(method="DOP853", rtol=rtol, atol=atol, dense_output=True)
    back = solve_ivp(rhs, (0.0, s_lo), z0, **kw)
    fwd = solve_ivp(rhs, (0.0, s_hi), z0, events=cone_edge if rho > 1 else None, **kw)
    if back.status != 0 or fwd.status < 0:
        raise GaugeError(f"integration failed: {back.message} / {fwd.message}")

    s_break = None
    if fwd.status == 1:
        s_break = float(fwd.t_events[0][0])
        if on_breakdown == "raise":
            raise GaugeError(f"cone edge u_s = -2/rho reached at s = {s_break:.6g}")
        warnings.warn(
            f"rho = {rho:g}: u_s reaches -2/rho at s = {s_break:.6g}; profile truncated",
            stacklevel=2,
        )
        s_hi = float(fwd.t[-1])

    def state(s):
        s = np.atleast_1d(np.asarray(s, dtype=float))
        out = np.empty((2, s.size))
        neg = s < 0
        if np.any(neg):
            out[:, neg] = back.sol(s[neg])
        if np.any(~neg):
            out[:, ~neg] = fwd.sol(s[~neg])
        return out

    def dense(s):
        s = np.atleast_1d(np.asarray(s, dtype=float))
        z = state(s)[0]
        x = x_of_z(z)
        # first integral: exp(4(u+s)) = 4 x^2 q(x)
        return 0.25 * (math.log(4) + 2 * np.log(-x) + log_q(z)) - s, x

    n_back = max(int(round(n_samples * (-s_lo) / (s_hi - s_lo))), 2)
    s_grid = np.concatenate(
        [_sample_grid(s_lo, 0.0, n_back + 1)[:-1], _sample_grid(0.0, s_hi, n_samples - n_back)]
    )
    u, us = dense(s_grid)
    w = state(s_grid)[1] + float(dense(0.0)[0][0])
    consistency = float(np.max(np.abs(w - u)))
    if consistency > 10 * tolerance * max(1.0, float(np.max(np.abs(u)))):
        warnings.warn(f"du/ds consistency {consistency:.3e} above tolerance", stacklevel=2)

    alpha = asymptotic_slope(rho) if s_break is None else math.nan
    return RadialProfile(
        rho=rho,
        epsilon=float(epsilon),
        s_grid=s_grid,
        u=u,
        u_s=us,
        alpha=alpha,
        tolerance=tolerance,
        s_break=s_break,
        consistency=consistency,
        method="first_integral",
        _dense=dense,
    )


def _general_rhs(rho, f_spec: FSpec, k_spec: KSpec):
    def rhs(s, z):
        u, y = z
        x = -math.exp(y)
        p = float(f_spec.p(u))
        if p <= 0:
            raise GaugeError(f"p(u) = {p:g} <= 0 at u = {u:g}")
        kk = float(k_spec.radial(math.exp(s)))
        return [x, kk * p * math.exp(4 * (u + s) - 2 * y) / (3 * (1 + rho / 2 * x))]

    return rhs


def _seed(u0, s0, rho, f_spec, k_spec):
    c = math.exp(2 * u0) * math.sqrt(float(k_spec.radial(0.0)) * float(f_spec.p(u0)) / 6)
    e = math.exp(2 * s0)
    return [u0 - c * e / 2, math.log(c) + 2 * s0]


def solve_radial_general(
    rho: float,
    epsilon: float,
    p_coefficients=(1.5,),
    s_range: tuple[float, float] = (-12.0, 12.0),
    tolerance: float = 1e-10,
    k_spec: KSpec | None = None,
    n_samples: int = 4801,
    on_breakdown: str = "truncate",
) -> RadialProfile:
    """Shoot ``3 u_ss (u_s + rho/2 u_s^2) = K p(u) exp(4(u+s))`` from ``s -> -inf``.

    The seed at ``s0 = s_range[0]`` is the small-slope asymptotics
    ``u_s ~ -c exp(2 s)`` with ``c = exp(2 u0) sqrt(K(0) p(u0) / 6)``; the
    maximum value ``u0`` is tuned by root finding so that ``u_s(0) = -epsilon``.
    """
    rho = _check_rho(rho)
    f_spec = p_coefficients if isinstance(p_coefficients, FSpec) else FSpec(tuple(p_coefficients))
    k_spec = k_spec or KSpec()
    if epsilon <= 0:
        raise GaugeError("epsilon must be positive")
    if rho > 0 and epsilon >= 2 / rho:
        raise GaugeError(f"epsilon = {epsilon:g} violates the cone bound 2/rho")
    s_lo, s_hi = map(float, s_range)
    rhs = _general_rhs(rho, f_spec, k_spec)
    rtol, atol = _ivp_tols(tolerance)
    edge = 1e-7

    def cone_edge(s, z):
        return 1 + rho / 2 * (-math.exp(z[1])) - edge

    cone_edge.terminal = True
    cone_edge.direction = -1

    def slope_at_zero(u0):
        try:
            sol = solve_ivp(rhs, (s_lo, 0.0), _seed(u0, s_lo, rho, f_spec, k_spec),
                            method="DOP853", rtol=rtol, atol=atol,
                            events=cone_edge if rho > 0 else None)
        except (GaugeError, OverflowError):
            return -math.inf
        if sol.status != 0:
            return -math.inf
        return -math.exp(sol.y[1, -1])

    def g(u0):
        return slope_at_zero(u0) + epsilon

    a, b = -1.0, 1.0
    for _ in range(60):
        if g(a) > 0:
            break
        a -= 2.0
    for _ in range(60):
        if g(b) < 0:
            break
        b += 2.0
    if not (g(a) > 0 > g(b)):
        raise GaugeError("could not bracket the gauge epsilon by shooting")
    u0 = brentq(g, a, b, xtol=1e-15, rtol=1e-15, maxiter=400)

    sol = solve_ivp(rhs, (s_lo, s_hi), _seed(u0, s_lo, rho, f_spec, k_spec),
                    method="DOP853", rtol=rtol, atol=atol, dense_output=True,
                    events=cone_edge if rho > 0 else None)
    if sol.status < 0:
        raise GaugeError(sol.message)
    s_break = None
    if sol.status == 1:
        s_break = float(sol.t_events[0][0])
        if on_breakdown == "raise":
            raise GaugeError(f"cone edge reached at s = {s_break:.6g}")
        warnings.warn(f"cone edge reached at s = {s_break:.6g}; profile truncated", stacklevel=2)
        s_hi = float(sol.t[-1])

    def dense(s):
        s = np.atleast_1d(np.asarray(s, dtype=float))
        u, y = sol.sol(s)
        return u, -np.exp(y)

    s_grid = _sample_grid(s_lo, s_hi, n_samples)
    u, us = dense(s_grid)
    if s_break is None and f_spec.coeffs == (1.5,) and k_spec.is_constant:
        alpha = asymptotic_slope(rho)
    else:
        alpha = float(us[-1]) if s_break is None else math.nan
    return RadialProfile(
        rho=rho,
        epsilon=float(epsilon),
        s_grid=s_grid,
        u=u,
        u_s=us,
        alpha=alpha,
        f_spec=f_spec,
        k_spec=k_spec,
        tolerance=tolerance,
        s_break=s_break,
        method="shooting",
        _dense=dense,
    )


def concavity_check(profile: RadialProfile) -> float:
    """Largest discrete second difference of ``u`` in ``s`` (<= 0 when concave)."""
    u = profile.u
    if u.size < 3:
        return 0.0
    d2 = u[2:] - 2 * u[1:-1] + u[:-2]
    return float(np.max(d2)) if d2.size else 0.0
