"""Level-set quantities ``N, P, Q, V`` and the quasi-local mass ``M(t)``.

For a level ``t`` with ``Omega_t = {u > t}`` and ``L_t = {u = t}``::

    N = |S3|^-1 int_{Omega_t} sigma_2(A)        Q^3 = |S3|^-1 int_{Omega_t} div(|du|^2 du)
    P = |S3|^-1 int_{Omega_t} (F(t) - F(u))     V   = |Omega_t| / |S3|
    M = 2 N Q + rho/8 Q^4 - 12 P

with ``F' = f``. On a radial profile every quantity reduces to data at the
log-radius ``s(t)``, except ``P`` which is a 1-D quadrature. Grid fields use
the smoothed co-area weights of :mod:`sigma2lab.levelset`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .field import ScalarField4
from .functions import S3_AREA, FSpec
from .levelset import GridSweep, LevelSetBinning, sweep_field
from .radial import DomainError, RadialProfile

__all__ = [
    "MassScan",
    "npqv_radial",
    "mass_radial",
    "mass_scan_radial",
    "mass_scan_grid",
    "dirichlet_boundary_mass",
    "dirichlet_mass_from_samples",
    "total_integral",
    "n_limit",
    "centered_derivative",
]

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(20)


def _gauss(fn, a: float, b: float, panel: float = 0.25) -> float:
    """Composite 20-point Gauss-Legendre rule on ``[a, b]``."""
    if b <= a:
        return 0.0
    n = max(int(math.ceil((b - a) / panel)), 1)
    edges = np.linspace(a, b, n + 1)
    mid = 0.5 * (edges[1:] + edges[:-1])[:, None]
    half = 0.5 * (edges[1:] - edges[:-1])[:, None]
    x = (mid + half * _GL_NODES).ravel()
    w = (half * _GL_WEIGHTS).ravel()
    return math.fsum(w * fn(x))


@dataclass
class MassScan:
    """Per-level mass record; ``t_grid`` is stored in decreasing order."""

    t_grid: np.ndarray
    N: np.ndarray
    P: np.ndarray
    Q: np.ndarray
    V: np.ndarray
    M: np.ndarray
    M_alt: np.ndarray
    dM_estimate: np.ndarray
    source: str
    meta: dict = field(default_factory=dict)
    M_error: np.ndarray | None = None
    area: np.ndarray | None = None

    COLUMNS = ("t", "N", "P", "Q", "V", "M", "M_alt", "dM")

    def __len__(self) -> int:
        return self.t_grid.size

    def table(self) -> np.ndarray:
        return np.column_stack(
            [self.t_grid, self.N, self.P, self.Q, self.V, self.M, self.M_alt, self.dM_estimate]
        )

    def monotonicity_violation(self) -> float:
        """Largest drop of ``M`` as ``t`` increases (0 when monotone)."""
        inc = np.argsort(self.t_grid)
        return float(max(0.0, -np.min(np.diff(self.M[inc])))) if len(self) > 1 else 0.0

    def isoperimetric_ratio(self) -> np.ndarray:
        """``|L_t|^4 / (4^3 |S3| |Omega_t|^3)``, at least 1 by the isoperimetric inequality."""
        if self.area is None:
            raise ValueError("no surface areas recorded (radial scans have exact spheres)")
        vol = self.V * S3_AREA
        return self.area**4 / (4**3 * S3_AREA * vol**3)


def centered_derivative(t, values) -> np.ndarray:
    """Three-point centred difference on a possibly non-uniform grid; NaN at the ends."""
    t = np.asarray(t, dtype=float)
    y = np.asarray(values, dtype=float)
    out = np.full(t.shape, np.nan)
    if t.size >= 3:
        out[1:-1] = np.gradient(y, t)[1:-1]
    return out


def _declared_f(profile: RadialProfile, f_spec: FSpec | None) -> FSpec:
    return profile.f_spec if f_spec is None else f_spec


def npqv_radial(profile: RadialProfile, t: float, f_spec: FSpec | None = None):
    """``(N, P, Q, V)`` at level ``t`` of a radial profile.

    ``f_spec`` overrides the nonlinearity entering ``P`` (e.g. a smaller
    ``f`` to treat the profile as a super-solution).
    """
    f = _declared_f(profile, f_spec)
    if not (profile.u_min <= t < profile.u_max):
        raise DomainError(f"t = {t:g} outside the profile range ({profile.u_min:g}, {profile.u_max:g})")
    s_t = profile.s_of_t(t)
    x = float(profile.slope_at(np.array([s_t]))[0])
    rho = profile.rho
    N = 1.5 * x * x + rho / 2 * x**3
    V = math.exp(4 * s_t) / 4
    Ft = float(f.F(t))

    def integrand(s):
        return (Ft - f.F(profile.u_at(s))) * np.exp(4 * s)

    s_lo = profile.s_min
    P = _gauss(integrand, s_lo, s_t)
    # left of the grid u is within exp(2 s_lo) of its maximum
    P += (Ft - float(f.F(profile.u_max))) * math.exp(4 * s_lo) / 4
    return N, P, x, V


def _sphere_alt(rho: float, x: float) -> float:
    """Boundary-only mass on a sphere, evaluated from its surface integrals."""
    # on the sphere of radius r: |du| = -x/r, <x, du> = x, H = 3/r, area r^3 |S3|
    Q = x
    s1 = (-x) ** 3 * x  # r^3 |du|^3 <x,du>
    s2 = 3 * x * x * (Q - x)  # r^3 H |du|^2 (Q - <x,du>)
    return 9 * rho / 8 * (Q**4 + s1) + s2


def mass_radial(profile: RadialProfile, t: float, f_spec: FSpec | None = None):
    """``(M, M_alt)`` at level ``t``; ``M_alt`` is the boundary-only form."""
    N, P, Q, _ = npqv_radial(profile, t, f_spec)
    M = 2 * N * Q + profile.rho / 8 * Q**4 - 12 * P
    return M, _sphere_alt(profile.rho, Q)


def _decreasing(t_grid) -> np.ndarray:
    t = np.asarray(t_grid, dtype=float).ravel()
    if t.size == 0:
        raise ValueError("empty t_grid")
    return np.sort(t)[::-1]


def mass_scan_radial(profile: RadialProfile, t_grid, f_spec: FSpec | None = None) -> MassScan:
    f = _declared_f(profile, f_spec)
    t = _decreasing(t_grid)
    rows = []
    for ti in t:
        N, P, Q, V = npqv_radial(profile, ti, f)
        M = 2 * N * Q + profile.rho / 8 * Q**4 - 12 * P
        rows.append((N, P, Q, V, M, _sphere_alt(profile.rho, Q)))
    N, P, Q, V, M, M_alt = (np.array(c) for c in zip(*rows))
    meta = {"profile": profile.describe(), "f_spec": f.describe()}
    return MassScan(t, N, P, Q, V, M, M_alt, centered_derivative(t, M), "radial", meta)


# ---------------------------------------------------------------- grid scans


def _check_grid_preconditions(sweep: GridSweep, f_spec: FSpec, t_low: float,
                              supersolution_rtol: float, max_report: int = 10) -> dict:
    region = sweep.u > t_low
    bad_cone = region & ~sweep.in_cone
    if np.any(bad_cone):
        idx = sweep.index[bad_cone][:max_report].tolist()
        raise DomainError(
            f"A(rho,u) outside Gamma_2^+ on {int(bad_cone.sum())} scanned cells, e.g. {idx}"
        )
    f_u = f_spec(sweep.u)
    bad_f = region & (sweep.sigma2 < f_u * (1 - supersolution_rtol))
    if np.any(bad_f):
        idx = sweep.index[bad_f][:max_report].tolist()
        raise DomainError(
            f"sigma_2(A) < f(u) on {int(bad_f.sum())} scanned cells, e.g. {idx}"
        )
    if sweep.shell_max > t_low:
        raise DomainError(
            f"Omega_t reaches the grid boundary (u = {sweep.shell_max:.4g} on the outer "
            f"interior layer exceeds t = {t_low:.4g})"
        )
    n_region = int(region.sum())
    return {
        "scanned_cells": n_region,
        "excluded_cells": int(np.count_nonzero(region & sweep.critical)),
        "excluded_fraction": float(np.count_nonzero(region & sweep.critical) / max(n_region, 1)),
        "interior_cone_fraction": float(np.mean(sweep.in_cone)),
    }


def mass_scan_grid(
    field: ScalarField4 | GridSweep,
    rho: float,
    f_spec: FSpec,
    t_grid,
    smoothing: float = 1.0,
    supersolution_rtol: float = 2e-2,
    min_band_cells: int = 200,
    order: int = 2,
    max_edge_weight: float = 1e-3,
) -> MassScan:
    """Mass scan of a gridded field by smoothed co-area quadrature.

    The field must lie in ``Gamma_2^+`` and satisfy ``sigma_2(A) >= f(u)``
    (up to the relative slack ``supersolution_rtol`` that absorbs stencil
    error) wherever ``u`` exceeds the lowest scanned level, and every scanned
    ``Omega_t`` must stay off the grid boundary. Level integrals are
    extrapolated to zero kernel width (see
    :meth:`~sigma2lab.levelset.LevelSetBinning.quantities`); ``M_error`` is
    the resulting error estimate. Levels whose smoothed indicator still
    exceeds ``max_edge_weight`` on the outermost interior layer are refused,
    because the kernel tail cut off by the grid would bias every integral.
    """
    sweep = field if isinstance(field, GridSweep) else sweep_field(field, rho)
    if not math.isclose(sweep.rho, rho):
        raise ValueError("sweep was computed for a different rho")
    t = _decreasing(t_grid)
    diag = _check_grid_preconditions(sweep, f_spec, float(t[-1]), supersolution_rtol)
    binning = LevelSetBinning(sweep, smoothing=smoothing, min_band_cells=min_band_cells)
    rows = [binning.quantities(ti, f_spec, order=order) for ti in t]
    edge = max(r["edge_weight"] for r in rows)
    if edge > max_edge_weight:
        raise DomainError(
            f"smoothing kernel reaches the grid boundary (indicator {edge:.2e} on the outer "
            f"interior layer > {max_edge_weight:g}); scan higher levels or enlarge the box"
        )
    thin = [float(r["t"]) for r in rows if r["band_cells"] < min_band_cells]
    col = {k: np.array([r[k] for r in rows])
           for k in ("N", "P", "Q", "V", "M", "M_alt", "area", "M_error")}
    meta = {
        "rho": float(rho),
        "f_spec": f_spec.describe(),
        "binning": {
            "kind": "smoothed_heaviside",
            "smoothing_cells": binning.smoothing,
            "kernel_width": binning.length,
            "extrapolation_order": order,
            "min_band_cells": min_band_cells,
            "underfilled_levels": thin,
            "edge_weight": edge,
            "band_cells": [int(r["band_cells"]) for r in rows],
        },
        "critical_threshold": sweep.eps_g,
        **diag,
    }
    return MassScan(t, col["N"], col["P"], col["Q"], col["V"], col["M"], col["M_alt"],
                    centered_derivative(t, col["M"]), "grid", meta, M_error=col["M_error"], area=col["area"])


# ------------------------------------------------------------ boundary mass


def dirichlet_mass_from_samples(grad_norm_scaled, rho: float) -> float:
    """Boundary mass of a Dirichlet problem on a ball from boundary samples.

    ``grad_norm_scaled`` holds ``R |du|`` at equal-area points of the
    boundary sphere. With averages ``a_k`` of its ``k``-th powers and
    ``Q = -a_3^(1/3)``, the mass is
    ``9 rho/8 (Q^4 - a_4) + 3 Q (a_2 - Q^2)``; both brackets have the sign
    fixed by Hoelder's inequality, so the result is ``>= 0`` when ``rho <= 0``.
    """
    g = np.abs(np.asarray(grad_norm_scaled, dtype=float).ravel())
    if g.size == 0:
        raise ValueError("no boundary samples")
    a2, a3, a4 = (float(np.mean(g**k)) for k in (2, 3, 4))
    Q = -np.cbrt(a3)
    return 9 * rho / 8 * (Q**4 - a4) + 3 * Q * (a2 - Q * Q)


def dirichlet_boundary_mass(profile: RadialProfile, R: float, rho: float | None = None) -> float:
    """Boundary mass on ``dB_R`` for radial data (zero up to round-off)."""
    rho = profile.rho if rho is None else float(rho)
    if R <= 0:
        raise DomainError("R must be positive")
    s = math.log(R)
    x = float(profile.slope_at(np.array([s]))[0])
    return dirichlet_mass_from_samples(np.array([abs(x)]), rho)


# ----------------------------------------------------------- total integral


def n_limit(rho: float, alpha: float) -> float:
    """``lim N = 3/2 alpha^2 + rho/2 alpha^3`` as ``t -> -inf``."""
    return 1.5 * alpha**2 + rho / 2 * alpha**3


def total_integral(profile: RadialProfile, include_tail: bool = True) -> float:
    """``int_{R^4} f(u) dx`` by quadrature in ``s`` plus a power-law tail.

    Past the last sample the integrand ``f(u) r^3`` behaves like
    ``exp((4 + 4 alpha) s)``, so the tail is the last integrand value over
    ``-(4 + 4 alpha)``. ``include_tail=False`` truncates at the profile end.
    """
    alpha = profile.alpha
    if include_tail and not (alpha < -1):
        raise DomainError(f"alpha = {alpha!r} is not below -1: the integral diverges or the "
                          "profile is not entire")
    f = profile.f_spec

    def integrand(s):
        return f(profile.u_at(s)) * profile.k_spec.radial(np.exp(s)) * np.exp(4 * s)

    body = _gauss(integrand, profile.s_min, profile.s_max)
    left = float(integrand(np.array([profile.s_min]))[0]) / 4
    total = body + left
    if include_tail:
        # local decay rate from the last slope, which converges to alpha
        x_end = float(profile.u_s[-1])
        total += float(integrand(np.array([profile.s_max]))[0]) / -(4 + 4 * x_end)
    return S3_AREA * total
