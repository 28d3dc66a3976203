"""Blow-down diagnostics: extremal radii of level sets, the asymptotic slope,
and convergence of ``u_i(y) = u(r_min(t_i) y) - t_i`` to ``alpha ln|y|``."""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .field import ScalarField4
from .radial import DomainError, RadialProfile

__all__ = [
    "BlowdownReport",
    "RatioBoundWarning",
    "directions",
    "extremal_radii",
    "level_crossings",
    "envelopes",
    "alpha_fit",
    "blowdown_convergence",
]


class RatioBoundWarning(UserWarning):
    """A rescaled level set left the annulus ``1/R <= |y| <= R``."""


def directions() -> np.ndarray:
    """48 unit vectors: the axes, the 16 diagonals and the 24 face diagonals."""
    out = []
    for k in range(4):
        for sgn in (1.0, -1.0):
            v = np.zeros(4)
            v[k] = sgn
            out.append(v)
    for signs in itertools.product((1.0, -1.0), repeat=4):
        out.append(np.array(signs) / 2)
    for i, j in itertools.combinations(range(4), 2):
        for si, sj in itertools.product((1.0, -1.0), repeat=2):
            v = np.zeros(4)
            v[i], v[j] = si, sj
            out.append(v / math.sqrt(2))
    return np.array(out)


# ------------------------------------------------------------- level crossings


@dataclass
class LevelCrossings:
    """Points of ``{u = t}`` on grid edges, with ``<x, grad u>`` there."""

    points: np.ndarray
    x_dot_grad: np.ndarray

    @property
    def radii(self) -> np.ndarray:
        return np.sqrt(np.einsum("ij,ij->i", self.points, self.points))


def level_crossings(field: ScalarField4, t: float) -> LevelCrossings:
    """Linear sub-cell interpolation of ``{u = t}`` along every grid edge.

    Only edges whose endpoints admit centred gradients are used.
    """
    u = field.samples
    h = field.spacing
    inner = tuple(slice(1, n - 1) for n in u.shape)
    pts, xg = [], []
    for k in range(4):
        a_sl = list(inner)
        b_sl = list(inner)
        a_sl[k] = slice(1, u.shape[k] - 2)
        b_sl[k] = slice(2, u.shape[k] - 1)
        ua, ub = u[tuple(a_sl)] - t, u[tuple(b_sl)] - t
        hit = (ua * ub <= 0) & (ua != ub)
        if not np.any(hit):
            continue
        ia = np.argwhere(hit) + 1
        ia[:, k] += a_sl[k].start - 1
        lam = ua[hit] / (ua[hit] - ub[hit])
        ib = ia.copy()
        ib[:, k] += 1
        xa = field.origin + h * ia
        p = xa + (lam * h[k])[:, None] * np.eye(4)[k]
        ga = _central_gradient(u, ia, h)
        gb = _central_gradient(u, ib, h)
        g = (1 - lam)[:, None] * ga + lam[:, None] * gb
        pts.append(p)
        xg.append(np.einsum("ij,ij->i", p, g))
    if not pts:
        raise DomainError(f"level set u = {t:g} does not meet the grid interior")
    return LevelCrossings(np.concatenate(pts), np.concatenate(xg))


def _central_gradient(u, idx, h):
    g = np.empty(idx.shape, dtype=float)
    for k in range(4):
        plus, minus = idx.copy(), idx.copy()
        plus[:, k] += 1
        minus[:, k] -= 1
        g[:, k] = (u[tuple(plus.T)] - u[tuple(minus.T)]) / (2 * h[k])
    return g


def extremal_radii(data, t: float) -> tuple[float, float]:
    """``(min |x|, max |x|)`` over the level set ``{u = t}``."""
    if isinstance(data, RadialProfile):
        if t >= data.u_max:
            raise DomainError(f"t = {t:g} is not below max u = {data.u_max:g}")
        r = math.exp(data.s_of_t(t))
        return r, r
    if t >= float(data.samples.max()):
        raise DomainError(f"t = {t:g} is not below max u = {float(data.samples.max()):g}")
    r = level_crossings(data, t).radii
    return float(r.min()), float(r.max())


def envelopes(data, radii, dirs: np.ndarray | None = None):
    """Lower and upper envelopes ``min/max_{|x|=r} u`` sampled over ``dirs``."""
    radii = np.asarray(radii, dtype=float)
    if isinstance(data, RadialProfile):
        u = data.u_at(np.log(radii))
        return u, u.copy()
    dirs = directions() if dirs is None else dirs
    pts = radii[:, None, None] * dirs[None, :, :]
    vals = data.interpolate(pts.reshape(-1, 4)).reshape(radii.size, -1)
    return vals.min(axis=1), vals.max(axis=1)


# ------------------------------------------------------------------- slopes


def alpha_fit(data, t_sequence, min_decades: float = 4.0, return_residual: bool = False):
    """Least-squares slope of ``t`` against ``ln r_min(t)`` over the deepest half.

    The sequence must span ``min_decades`` decades of radius, since the
    slope is only approached asymptotically.
    """
    t = np.sort(np.asarray(t_sequence, dtype=float))[::-1]
    if t.size < 4:
        raise DomainError("need at least 4 levels")
    lr = np.log([extremal_radii(data, ti)[0] for ti in t])
    decades = (lr.max() - lr.min()) / math.log(10)
    if decades < min_decades:
        raise DomainError(f"levels span {decades:.2f} decades of radius, need {min_decades:g}")
    half = t.size // 2
    x, y = lr[half:], t[half:]
    A = np.column_stack([x, np.ones_like(x)])
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = float(np.sqrt(np.mean((A @ coef - y) ** 2)))
    return (float(coef[0]), resid) if return_residual else float(coef[0])


# ---------------------------------------------------------------- blow-down


@dataclass
class BlowdownReport:
    t_sequence: np.ndarray
    r_min: np.ndarray
    r_max: np.ndarray
    alpha: float
    alpha_fit: float
    sup_log_radius_error: np.ndarray
    gradient_alignment_error: np.ndarray
    uniform_error: np.ndarray
    annulus: float
    violations: list = field(default_factory=list)

    COLUMNS = ("t", "r_min", "r_max", "sup_err", "grad_err")

    @property
    def ratio_max(self) -> float:
        return float(np.max(self.r_max / self.r_min))

    def table(self) -> np.ndarray:
        return np.column_stack([self.t_sequence, self.r_min, self.r_max,
                                self.sup_log_radius_error, self.gradient_alignment_error])

    def summary(self) -> dict:
        return {
            "alpha": self.alpha,
            "alpha_fit": self.alpha_fit,
            "ratio_max": self.ratio_max,
            "annulus_R": self.annulus,
            "uniform_error": [float(v) for v in self.uniform_error],
            "violations": self.violations,
        }


def _uniform_error_radial(profile, s_t, t, alpha, R, n=201):
    sig = np.linspace(-math.log(R), math.log(R), n)
    s = s_t + sig
    ok = s <= profile.s_max
    return float(np.max(np.abs(profile.u_at(s[ok]) - t - alpha * sig[ok])))


def _uniform_error_grid(field, r_lo, t, alpha, R, n=41):
    rad = np.exp(np.linspace(-math.log(R), math.log(R), n))
    pts = (r_lo * rad)[:, None, None] * directions()[None]
    lo, hi = field.origin, field.origin + field.spacing * (np.array(field.shape) - 1)
    inside = np.all((pts >= lo) & (pts <= hi), axis=-1)
    vals = field.interpolate(pts[inside])
    target = alpha * np.log(np.broadcast_to(rad[:, None], inside.shape)[inside])
    return float(np.max(np.abs(vals - t - target))) if vals.size else math.nan


def blowdown_convergence(data, t_sequence, R: float = 4.0, alpha: float | None = None) -> BlowdownReport:
    """Blow-down errors along a decreasing level sequence.

    ``alpha`` defaults to the profile's slope, or for grids to a fit over the
    sequence itself. A level set whose rescaled image leaves the annulus
    ``1/R <= |y| <= R`` is recorded in ``violations`` and warned about.
    """
    t = np.sort(np.asarray(t_sequence, dtype=float))[::-1]
    radial = isinstance(data, RadialProfile)
    try:
        fit = alpha_fit(data, t, min_decades=0.0) if t.size >= 4 else math.nan
    except DomainError:
        fit = math.nan
    if alpha is None:
        alpha = data.alpha if radial else fit
    if not math.isfinite(alpha):
        raise DomainError("no asymptotic slope available")
    r_lo, r_hi, rad_err, grad_err, uni_err, bad = [], [], [], [], [], []
    for ti in t:
        if radial:
            s_t = data.s_of_t(ti)
            r = math.exp(s_t)
            r_lo.append(r)
            r_hi.append(r)
            rad_err.append(0.0)
            grad_err.append(abs(float(data.slope_at(np.array([s_t]))[0]) - alpha))
            uni_err.append(_uniform_error_radial(data, s_t, ti, alpha, R))
        else:
            cr = level_crossings(data, ti)
            rr = cr.radii
            lo, hi = float(rr.min()), float(rr.max())
            r_lo.append(lo)
            r_hi.append(hi)
            rad_err.append(float(np.max(np.abs(rr / lo - 1))))
            grad_err.append(float(np.max(np.abs(cr.x_dot_grad - alpha))))
            uni_err.append(_uniform_error_grid(data, lo, ti, alpha, R))
        if r_hi[-1] / r_lo[-1] > R:
            bad.append({"t": float(ti), "ratio": r_hi[-1] / r_lo[-1]})
    if bad:
        warnings.warn(f"{len(bad)} rescaled level sets leave the annulus R = {R:g}",
                      RatioBoundWarning, stacklevel=2)
    return BlowdownReport(
        t_sequence=t,
        r_min=np.array(r_lo),
        r_max=np.array(r_hi),
        alpha=float(alpha),
        alpha_fit=fit,
        sup_log_radius_error=np.array(rad_err),
        gradient_alignment_error=np.array(grad_err),
        uniform_error=np.array(uni_err),
        annulus=float(R),
        violations=bad,
    )
