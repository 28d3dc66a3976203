"""Pohozaev identity for ``sigma_2(A(rho, u)) = K(x) f(u)`` on sub-level domains.

For a solution on ``Omega`` with ``u = tau`` on the boundary and ``F' = f``
anchored by ``F(tau) = 0``::

    int_Omega 8 (K + <x, grad K>/4) F(u) dx
        = int_{dOmega} (-3/4 rho |du|^4 <x,nu> + 2/3 H |du|^3 <x,nu>) dl

with ``nu`` the outer normal and ``H`` the mean curvature of the boundary.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .field import ScalarField4
from .functions import S3_AREA, FSpec, KSpec
from .levelset import GridSweep, LevelSetBinning, _extrapolate, sweep_field
from .mass import _gauss, npqv_radial
from .radial import DomainError, RadialProfile

__all__ = [
    "PohozaevReport",
    "RefusedError",
    "pohozaev_radial",
    "pohozaev_grid",
    "pde_residual",
    "mass_pohozaev_consistency",
]


class RefusedError(ValueError):
    """The data do not solve the equation well enough for the identity to apply."""


@dataclass(frozen=True)
class PohozaevReport:
    lhs: float
    rhs: float
    domain: dict
    K_spec: dict
    anchor: dict
    error_estimate: float = 0.0
    extra: dict = field(default_factory=dict)

    @property
    def abs_residual(self) -> float:
        return abs(self.lhs - self.rhs)

    @property
    def rel_residual(self) -> float:
        return self.abs_residual / max(abs(self.lhs), abs(self.rhs), 1e-300)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["abs_residual"] = self.abs_residual
        d["rel_residual"] = self.rel_residual
        return d


def _sphere_boundary(rho: float, x: float) -> float:
    """Boundary side on a sphere, where ``<x,nu> = R``, ``H = 3/R``, ``|du| = -u_s/R``."""
    return S3_AREA * (-0.75 * rho * x**4 - 2 * x**3)


def pohozaev_radial(profile: RadialProfile, R: float, k_spec: KSpec | None = None) -> PohozaevReport:
    """Both sides of the identity on the ball ``B_R`` for radial data.

    ``k_spec`` defaults to the weight the profile was solved with; a weight
    different from that one is rejected, since the identity needs a solution
    of the weighted equation.
    """
    k = profile.k_spec if k_spec is None else k_spec
    if k != profile.k_spec:
        raise RefusedError(
            "profile was solved with a different K; solve it with solve_radial_general(k_spec=...)"
        )
    if R <= 0:
        raise DomainError("R must be positive")
    s_R = math.log(R)
    if s_R > profile.s_max:
        raise DomainError(f"R = {R:g} beyond the profile end exp({profile.s_max:g})")
    tau, x = (float(v[0]) for v in profile.evaluate(np.array([s_R])))
    f = profile.f_spec
    F_tau = float(f.F(tau))

    def integrand(s):
        r = np.exp(s)
        weight = k.radial(r) + 0.25 * k.radial_x_dot_grad(r)
        return 8 * weight * (f.F(profile.u_at(s)) - F_tau) * np.exp(4 * s)

    lhs = _gauss(integrand, profile.s_min, s_R)
    lhs += float(integrand(np.array([profile.s_min]))[0]) / 4
    lhs *= S3_AREA
    return PohozaevReport(
        lhs=lhs,
        rhs=_sphere_boundary(profile.rho, x),
        domain={"kind": "ball", "R": float(R), "tau": tau},
        K_spec=k.describe(),
        anchor={"F(tau)": 0.0, "tau": tau},
    )


def pde_residual(sweep: GridSweep, f_spec: FSpec, k_spec: KSpec, t: float) -> float:
    """Max relative residual ``|sigma_2(A) - K f(u)| / (K f(u))`` on ``{u > t}``."""
    region = sweep.u > t
    if not np.any(region):
        raise DomainError(f"empty region u > {t:g}")
    target = k_spec(sweep.points[region]) * f_spec(sweep.u[region])
    return float(np.max(np.abs(sweep.sigma2[region] - target) / target))


def pohozaev_grid(
    field: ScalarField4 | GridSweep,
    rho: float,
    f_spec: FSpec,
    t: float,
    k_spec: KSpec | None = None,
    smoothing: float = 1.0,
    order: int = 2,
    max_pde_residual: float = 0.05,
    max_edge_weight: float = 1e-3,
) -> PohozaevReport:
    """Both sides of the identity on ``Omega_t`` of a gridded solution.

    The volume side is a cell sum and the boundary side a co-area surface
    integral, both extrapolated to zero kernel width. Refuses when the
    stencil residual of the equation on ``Omega_t`` exceeds
    ``max_pde_residual`` (relative).
    """
    k = KSpec() if k_spec is None else k_spec
    sweep = field if isinstance(field, GridSweep) else sweep_field(field, rho)
    if sweep.shell_max > t:
        raise DomainError(f"Omega_t touches the grid boundary at t = {t:g}")
    res = pde_residual(sweep, f_spec, k, t)
    if res > max_pde_residual:
        raise RefusedError(
            f"PDE residual {res:.3e} on Omega_t exceeds {max_pde_residual:g}; "
            "the identity holds for solutions only"
        )
    binning = LevelSetBinning(sweep, smoothing=smoothing)
    edge = binning.edge_weight(t, binning.length * math.sqrt(order + 1))
    if edge > max_edge_weight:
        raise DomainError(
            f"smoothing kernel reaches the grid boundary at t = {t:g} (indicator {edge:.2e})"
        )
    pts = sweep.points
    weight = k(pts) + 0.25 * np.einsum("ij,ij->i", pts, k.grad(pts))
    vol_integrand = 8 * weight * (f_spec.F(sweep.u) - f_spec.F(t))
    gn = sweep.grad_norm
    with np.errstate(invalid="ignore", divide="ignore"):
        x_nu = np.where(sweep.critical, 0.0, sweep.x_dot_nu)
    surf_integrand = (-0.75 * rho * gn**4 + 2.0 / 3.0 * np.nan_to_num(sweep.H) * gn**3) * x_nu

    sides = []
    for kk in range(1, order + 2):
        lv = binning.level(t, binning.length * math.sqrt(kk))
        sides.append({"lhs": lv.volume(vol_integrand), "rhs": lv.surface(surf_integrand)})
    best = _extrapolate(sides, order)
    rough = _extrapolate(sides[:order], order - 1)
    err = max(abs(best["lhs"] - rough["lhs"]), abs(best["rhs"] - rough["rhs"]))
    return PohozaevReport(
        lhs=best["lhs"],
        rhs=best["rhs"],
        domain={"kind": "level_set", "t": float(t), "spacing": sweep.spacing,
                "cells": sweep.n_cells},
        K_spec=k.describe(),
        anchor={"F(tau)": 0.0, "tau": float(t)},
        error_estimate=err,
        extra={"pde_residual": res, "edge_weight": edge, "smoothing_cells": smoothing, "extrapolation_order": order},
    )


def mass_pohozaev_consistency(data, t: float, rho: float | None = None,
                              f_spec: FSpec | None = None, **grid_kw) -> float:
    """``|12 P(t) + (3 / (2|S3|)) B(t)|`` with ``B`` the boundary side on ``L_t``.

    Since ``P`` integrates ``F(t) - F(u)`` the identity reads
    ``-8 |S3| P = B``. Radial profiles use quadrature for ``P`` and the
    closed-form sphere value of ``B``; grids use :func:`pohozaev_grid`.
    For non-solutions the mismatch is returned as is.
    """
    if isinstance(data, RadialProfile):
        _, P, x, _ = npqv_radial(data, t, f_spec)
        return abs(12 * P + 1.5 / S3_AREA * _sphere_boundary(data.rho, x))
    if rho is None or f_spec is None:
        raise ValueError("grid data need rho and f_spec")
    grid_kw.setdefault("max_pde_residual", math.inf)
    rep = pohozaev_grid(data, rho, f_spec, t, **grid_kw)
    P = -rep.lhs / (8 * S3_AREA)
    return abs(12 * P + 1.5 / S3_AREA * rep.rhs)
