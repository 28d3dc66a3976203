"""Pointwise geometry of ``A(rho, u) = -D^2u + rho du (x) du - rho/2 |du|^2 I``.

Second-order data come either from analytic test fields (exact derivatives up
to third order, see :mod:`sigma2lab.analytic`) or from a :class:`ScalarField4`
sampled on a uniform 4-D grid, differentiated with centred second-order
stencils.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .symm import newton_tensors, sigma_k

__all__ = [
    "CriticalPointError",
    "Jet2",
    "ScalarField4",
    "FrameDecomp",
    "assemble_A",
    "scaling_check",
    "jet_at",
    "iter_grid_jets",
    "div_flux_rhs",
    "divergence_residual",
    "divergence_residual_grid",
    "newton_divergence_residual",
    "frame_decompose",
    "level_geometry",
]

BLOB_MAGIC = b"S2FIELD4"
BLOB_VERSION = 1


class CriticalPointError(ValueError):
    """Gradient too small for a level-set frame."""


@dataclass(frozen=True)
class Jet2:
    value: float
    gradient: np.ndarray
    hessian: np.ndarray
    point: np.ndarray | None = None

    def __post_init__(self):
        g = np.asarray(self.gradient, dtype=float).reshape(4)
        h = np.asarray(self.hessian, dtype=float).reshape(4, 4)
        if not np.allclose(h, h.T, rtol=0, atol=1e-12 * max(1.0, np.abs(h).max())):
            raise ValueError("hessian must be symmetric")
        object.__setattr__(self, "value", float(self.value))
        object.__setattr__(self, "gradient", g)
        object.__setattr__(self, "hessian", 0.5 * (h + h.T))


def assemble_A(jet_or_grad, rho: float, hessian=None) -> np.ndarray:
    """``A(rho, u)`` from a :class:`Jet2`, or from stacked ``(gradient, hessian)``."""
    if isinstance(jet_or_grad, Jet2):
        g, h = jet_or_grad.gradient, jet_or_grad.hessian
    else:
        g, h = np.asarray(jet_or_grad, dtype=float), np.asarray(hessian, dtype=float)
    gg = np.einsum("...i,...j->...ij", g, g)
    n2 = np.einsum("...i,...i->...", g, g)[..., None, None]
    return -h + rho * gg - 0.5 * rho * n2 * np.eye(4)


def scaling_check(jet: Jet2, rho: float, a: float = 1.0, b: float = 0.0) -> float:
    """Max residual of the three scaling identities of ``A``.

    ``A(rho, u(a x) + b) = a^2 A(rho, u)``, ``A(-rho, -u) = -A(rho, u)`` and,
    for ``rho != 0``, ``A(rho, u) = A(1, rho u) / rho``. Each side is rebuilt
    from a transformed jet.
    """
    if a == 0:
        raise ValueError("a must be nonzero")
    base = assemble_A(jet, rho)
    scaled = Jet2(jet.value + b, a * jet.gradient, a * a * jet.hessian)
    res = [np.abs(assemble_A(scaled, rho) - a * a * base).max()]
    flipped = Jet2(-jet.value, -jet.gradient, -jet.hessian)
    res.append(np.abs(assemble_A(flipped, -rho) + base).max())
    if rho != 0:
        mult = Jet2(rho * jet.value, rho * jet.gradient, rho * jet.hessian)
        res.append(np.abs(assemble_A(mult, 1.0) / rho - base).max())
    return float(max(res))


@dataclass
class ScalarField4:
    """Samples of ``u`` on ``origin + spacing * index`` (row-major, last axis fastest)."""

    samples: np.ndarray
    spacing: np.ndarray
    origin: np.ndarray = field(default_factory=lambda: np.zeros(4))

    def __post_init__(self):
        self.samples = np.ascontiguousarray(self.samples, dtype=float)
        if self.samples.ndim != 4 or min(self.samples.shape) < 5:
            raise ValueError("samples must be 4-D with every extent >= 5")
        self.spacing = np.broadcast_to(np.asarray(self.spacing, dtype=float), (4,)).copy()
        self.origin = np.broadcast_to(np.asarray(self.origin, dtype=float), (4,)).copy()
        if np.any(self.spacing <= 0):
            raise ValueError("spacing must be positive")
        self.samples.setflags(write=False)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.samples.shape

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    @classmethod
    def from_function(cls, fn, shape, spacing, origin=None, chunk: int = 4) -> "ScalarField4":
        """Sample ``fn(points[..., 4]) -> values`` slab by slab."""
        shape = tuple(int(n) for n in shape)
        spacing = np.broadcast_to(np.asarray(spacing, dtype=float), (4,))
        if origin is None:
            origin = -0.5 * spacing * (np.array(shape) - 1)
        origin = np.broadcast_to(np.asarray(origin, dtype=float), (4,))
        axes = [origin[k] + spacing[k] * np.arange(shape[k]) for k in range(4)]
        out = np.empty(shape)
        for i0 in range(0, shape[0], chunk):
            sl = slice(i0, min(i0 + chunk, shape[0]))
            pts = np.stack(np.meshgrid(axes[0][sl], *axes[1:], indexing="ij"), axis=-1)
            out[sl] = fn(pts)
        return cls(out, spacing, origin)

    @classmethod
    def centered(cls, fn, n: int, half_width: float) -> "ScalarField4":
        """``n^4`` samples on the box ``[-half_width, half_width]^4``."""
        h = 2 * half_width / (n - 1)
        return cls.from_function(fn, (n,) * 4, h)

    def axis(self, k: int) -> np.ndarray:
        return self.origin[k] + self.spacing[k] * np.arange(self.shape[k])

    def coords(self, idx) -> np.ndarray:
        return self.origin + self.spacing * np.asarray(idx, dtype=float)

    def oscillation(self) -> float:
        return float(self.samples.max() - self.samples.min())

    def critical_threshold(self) -> float:
        """Gradient floor ``1e-8 * oscillation / h`` below which cells are excluded."""
        return 1e-8 * self.oscillation() / float(self.spacing.min())

    def interpolate(self, points) -> np.ndarray:
        from scipy.interpolate import RegularGridInterpolator

        interp = RegularGridInterpolator(
            tuple(self.axis(k) for k in range(4)), self.samples, method="linear"
        )
        return interp(np.asarray(points, dtype=float))

    # binary blob: 16-byte header, 4 int64 extents, 4 f64 spacings, 4 f64 origins, f64 data
    def to_bytes(self) -> bytes:
        head = BLOB_MAGIC + struct.pack("<II", BLOB_VERSION, 0)
        meta = struct.pack("<4q4d4d", *self.shape, *self.spacing, *self.origin)
        return head + meta + self.samples.astype("<f8", copy=False).tobytes(order="C")

    @classmethod
    def from_bytes(cls, blob: bytes) -> "ScalarField4":
        if len(blob) < 112 or blob[:8] != BLOB_MAGIC:
            raise ValueError("not a field blob (bad magic)")
        version, _ = struct.unpack("<II", blob[8:16])
        if version != BLOB_VERSION:
            raise ValueError(f"unsupported field blob version {version}")
        vals = struct.unpack("<4q4d4d", blob[16:112])
        shape, spacing, origin = vals[:4], vals[4:8], vals[8:12]
        n = int(np.prod(shape))
        data = np.frombuffer(blob, dtype="<f8", count=n, offset=112)
        if data.size != n or len(blob) != 112 + 8 * n:
            raise ValueError("field blob length does not match its extents")
        return cls(data.reshape(shape).astype(float), spacing, origin)

    def save(self, path) -> None:
        Path(path).write_bytes(self.to_bytes())

    @classmethod
    def load(cls, path) -> "ScalarField4":
        return cls.from_bytes(Path(path).read_bytes())


_MARGIN = 2


def _check_interior(field: ScalarField4, idx, margin: int = _MARGIN):
    idx = tuple(int(i) for i in idx)
    if len(idx) != 4:
        raise IndexError("need a 4-index")
    for i, n in zip(idx, field.shape):
        if i < margin or i > n - 1 - margin:
            raise IndexError(f"index {idx} closer than {margin} cells to the boundary")
    return idx


def jet_at(field: ScalarField4, idx) -> Jet2:
    """Centred second-order differences at an interior index."""
    idx = _check_interior(field, idx)
    u = field.samples
    h = field.spacing
    grad = np.empty(4)
    hess = np.empty((4, 4))
    c = u[idx]

    def at(offsets):
        return u[tuple(i + o for i, o in zip(idx, offsets))]

    e = np.eye(4, dtype=int)
    for i in range(4):
        grad[i] = (at(e[i]) - at(-e[i])) / (2 * h[i])
        hess[i, i] = (at(e[i]) - 2 * c + at(-e[i])) / h[i] ** 2
        for j in range(i + 1, 4):
            v = (at(e[i] + e[j]) - at(e[i] - e[j]) - at(-e[i] + e[j]) + at(-e[i] - e[j]))
            hess[i, j] = hess[j, i] = v / (4 * h[i] * h[j])
    return Jet2(c, grad, hess, field.coords(idx))


def iter_grid_jets(field: ScalarField4, margin: int = _MARGIN, chunk: int = 2):
    """Yield ``(i0, points, values, gradients, hessians)`` for interior slabs.

    Slabs run along axis 0, ``chunk`` planes at a time, in index order so that
    reductions over them are reproducible.
    """
    u = field.samples
    h = field.spacing
    n = u.shape
    inner = tuple(slice(margin, n[k] - margin) for k in range(4))
    axes = [field.axis(k)[inner[k]] for k in range(4)]

    def shifted(sl0, d):
        return u[(slice(sl0.start + d[0], sl0.stop + d[0]),)
                 + tuple(slice(inner[k].start + d[k], inner[k].stop + d[k]) for k in range(1, 4))]

    e = np.eye(4, dtype=int)
    for i0 in range(margin, n[0] - margin, chunk):
        sl0 = slice(i0, min(i0 + chunk, n[0] - margin))
        c = shifted(sl0, (0, 0, 0, 0))
        grad = np.empty(c.shape + (4,))
        hess = np.empty(c.shape + (4, 4))
        for i in range(4):
            up, dn = shifted(sl0, e[i]), shifted(sl0, -e[i])
            grad[..., i] = (up - dn) / (2 * h[i])
            hess[..., i, i] = (up - 2 * c + dn) / h[i] ** 2
            for j in range(i + 1, 4):
                v = (shifted(sl0, e[i] + e[j]) - shifted(sl0, e[i] - e[j])
                     - shifted(sl0, -e[i] + e[j]) + shifted(sl0, -e[i] - e[j]))
                hess[..., i, j] = hess[..., j, i] = v / (4 * h[i] * h[j])
        pts = np.stack(np.meshgrid(field.axis(0)[sl0], *axes[1:], indexing="ij"), axis=-1)
        yield i0, pts, c, grad, hess


def div_flux_rhs(gradient, hessian, third, rho: float) -> float:
    """``-1/2 d_i[(-Lap u delta_ij + u_ij - rho |du|^2 delta_ij) u_j]`` expanded.

    ``third[i, j, k] = u_ijk``.
    """
    g, h, t = (np.asarray(a, dtype=float) for a in (gradient, hessian, third))
    lap = np.trace(h)
    dlap = np.einsum("kki->i", t)
    n2 = g @ g
    div = (
        -dlap @ g - lap * lap
        + np.einsum("iij,j->", t, g) + np.sum(h * h)
        - 2 * rho * g @ h @ g - rho * n2 * lap
    )
    return -0.5 * float(div)


def divergence_residual(ufield, rho: float, x) -> float:
    """``|sigma_2(A) - div form|`` at ``x`` for an analytic field."""
    x = np.asarray(x, dtype=float)
    g, h, t = ufield.gradient(x), ufield.hessian(x), ufield.third(x)
    lhs = float(sigma_k(assemble_A(g, rho, h), 2))
    return abs(lhs - div_flux_rhs(g, h, t, rho))


def _flux(jet: Jet2, rho: float) -> np.ndarray:
    g, h = jet.gradient, jet.hessian
    return (-np.trace(h) - rho * (g @ g)) * g + h @ g


def divergence_residual_grid(field: ScalarField4, rho: float, idx) -> float:
    """Grid version: nested centred differences of the flux (margin 3)."""
    idx = _check_interior(field, idx, margin=_MARGIN + 1)
    lhs = float(sigma_k(assemble_A(jet_at(field, idx), rho), 2))
    div = 0.0
    for i in range(4):
        up = list(idx)
        dn = list(idx)
        up[i] += 1
        dn[i] -= 1
        div += (_flux(jet_at(field, up), rho)[i] - _flux(jet_at(field, dn), rho)[i]) / (
            2 * field.spacing[i]
        )
    return abs(lhs + 0.5 * div)


def newton_divergence_residual(ufield, x) -> float:
    """``max_i (|d_j T1_ij|, |d_j T2_ij|)`` from exact third derivatives."""
    x = np.asarray(x, dtype=float)
    h, t = ufield.hessian(x), ufield.third(x)
    t1, _ = newton_tensors(h)
    dlap = np.einsum("kki->i", t)
    div_t1 = -dlap + np.einsum("ijj->i", t)
    lap = np.trace(h)
    dsigma2 = lap * dlap - np.einsum("kl,kli->i", h, t)
    div_t2 = np.einsum("ikj,kj->i", t, t1) + h @ div_t1 + dsigma2
    return float(max(np.abs(div_t1).max(), np.abs(div_t2).max()))


@dataclass(frozen=True)
class FrameDecomp:
    """``A`` written in an orthonormal frame with last vector ``nu = -du/|du|``."""

    grad_norm: float
    nu: np.ndarray
    frame: np.ndarray
    second_fundamental: np.ndarray
    A_tilde: np.ndarray
    u44: float
    mixed: np.ndarray
    H: float
    rho: float

    def reassembled(self) -> np.ndarray:
        a = np.empty((4, 4))
        a[:3, :3] = self.A_tilde
        a[:3, 3] = a[3, :3] = -self.mixed
        a[3, 3] = -self.u44 + 0.5 * self.rho * self.grad_norm**2
        return a

    @property
    def sigma1_A_tilde(self) -> float:
        return float(np.trace(self.A_tilde))

    @property
    def div_grad_cubed(self) -> float:
        """``div(|du|^2 du) = 3 |du|^2 (u44 - H |du| / 3)``."""
        g = self.grad_norm
        return 3 * g * g * (self.u44 - self.H * g / 3)


def _tangent_frame(nu: np.ndarray) -> np.ndarray:
    order = sorted(range(4), key=lambda i: (abs(nu[i]), i))[:3]
    vecs = [nu]
    for i in sorted(order, key=lambda i: (abs(nu[i]), i)):
        v = np.zeros(4)
        v[i] = 1.0
        for w in vecs:
            v -= (v @ w) * w
        vecs.append(v / np.linalg.norm(v))
    return np.column_stack(vecs[1:] + [nu])


def frame_decompose(jet: Jet2, rho: float, eps_g: float = 1e-12, rotation=None) -> FrameDecomp:
    """Split ``A`` into tangential/normal blocks along the level set through ``jet``.

    ``rotation`` (3x3 orthogonal) optionally turns the tangent frame; all
    returned invariants are independent of it.
    """
    g = jet.gradient
    gn = float(np.linalg.norm(g))
    if gn <= eps_g:
        raise CriticalPointError(f"|grad u| = {gn:.3e} <= {eps_g:.3e}")
    nu = -g / gn
    e = _tangent_frame(nu)
    if rotation is not None:
        e[:, :3] = e[:, :3] @ np.asarray(rotation, dtype=float)
    hf = e.T @ jet.hessian @ e
    h2 = -hf[:3, :3] / gn
    u44 = float(hf[3, 3])
    a_t = h2 * gn - 0.5 * rho * gn * gn * np.eye(3)
    return FrameDecomp(
        grad_norm=gn,
        nu=nu,
        frame=e,
        second_fundamental=h2,
        A_tilde=a_t,
        u44=u44,
        mixed=hf[:3, 3].copy(),
        H=float(np.trace(h2)),
        rho=rho,
    )


def level_geometry(gradient, hessian):
    """Frame-free ``(|du|, nu, u44, H)`` for stacked jets.

    ``H = (u44 - Lap u) / |du|`` is the mean curvature with respect to ``-nu``.
    """
    g = np.asarray(gradient, dtype=float)
    h = np.asarray(hessian, dtype=float)
    gn = np.sqrt(np.einsum("...i,...i->...", g, g))
    with np.errstate(divide="ignore", invalid="ignore"):
        nu = -g / gn[..., None]
        u44 = np.einsum("...i,...ij,...j->...", nu, h, nu)
        H = (u44 - np.trace(h, axis1=-2, axis2=-1)) / gn
    return gn, nu, u44, H
