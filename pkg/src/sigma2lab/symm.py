"""Elementary symmetric functions, Jacobi eigenvalues, cones and Newton tensors.

Matrices are plain symmetric ``numpy`` arrays of shape ``(n, n)`` with
``n`` in {3, 4}; ``sym4`` builds one from its ten upper-triangle entries.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

__all__ = [
    "ConvergenceError",
    "ConeStatus",
    "sym4",
    "upper_entries",
    "sigma_k",
    "sigma_k_from_eigenvalues",
    "eigenvalues",
    "cone_status",
    "newton_tensors",
]

BOUNDARY_TOL = 1e-12
MAX_SWEEPS = 30

_IU4 = np.triu_indices(4)


class ConvergenceError(RuntimeError):
    pass


def sym4(entries) -> np.ndarray:
    """Symmetric 4x4 matrix from row-major upper-triangle entries (10 values)."""
    entries = np.asarray(entries, dtype=float)
    if entries.shape != (10,):
        raise ValueError("need exactly 10 upper-triangle entries")
    m = np.zeros((4, 4))
    m[_IU4] = entries
    return m + np.triu(m, 1).T


def upper_entries(m) -> np.ndarray:
    return np.asarray(m, dtype=float)[_IU4]


def _check_square(m) -> np.ndarray:
    m = np.asarray(m, dtype=float)
    if m.ndim < 2 or m.shape[-1] != m.shape[-2]:
        raise ValueError("expected square matrices in the last two axes")
    return m


def sigma_k(m, k: int):
    """k-th elementary symmetric function as the sum of k x k principal minors.

    Works on stacks ``(..., n, n)``. ``sigma_2`` uses ``(tr m^2 - tr(m^2)) / 2``.
    """
    m = _check_square(m)
    n = m.shape[-1]
    if not 1 <= k <= n:
        raise ValueError(f"k must be in 1..{n}")
    if k == 1:
        return np.trace(m, axis1=-2, axis2=-1)
    if k == 2:
        tr = np.trace(m, axis1=-2, axis2=-1)
        tr2 = np.einsum("...ij,...ji->...", m, m)
        return 0.5 * (tr * tr - tr2)
    total = 0.0
    # LU pivots of subnormal matrices trip a spurious divide warning; the minors are still right
    with np.errstate(divide="ignore", invalid="ignore"):
        for idx in combinations(range(n), k):
            sub = m[..., idx, :][..., :, idx]
            total = total + np.linalg.det(sub)
    return total


def sigma_k_from_eigenvalues(lam, k: int) -> float:
    """Brute-force sum over all k-subsets of eigenvalues."""
    lam = np.asarray(lam, dtype=float)
    return float(sum(np.prod(lam[list(c)]) for c in combinations(range(lam.size), k)))


def eigenvalues(m, return_vectors: bool = False):
    """Ascending eigenvalues by cyclic Jacobi rotations.

    Stops when the off-diagonal mass falls below ``1e-15 * ||m||``; raises
    :class:`ConvergenceError` after ``MAX_SWEEPS`` sweeps.
    """
    a = np.array(_check_square(m), dtype=float)
    if a.ndim != 2:
        raise ValueError("eigenvalues expects a single matrix")
    n = a.shape[0]
    if not np.allclose(a, a.T, rtol=0, atol=1e-14 * max(1.0, np.abs(a).max())):
        raise ValueError("matrix is not symmetric")
    a = 0.5 * (a + a.T)
    v = np.eye(n)
    scale = np.linalg.norm(a)
    if scale == 0:
        lam = np.zeros(n)
        return (lam, v) if return_vectors else lam
    for _ in range(MAX_SWEEPS):
        off = np.sqrt(np.sum(np.triu(a, 1) ** 2))
        if off <= 1e-15 * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2 * apq)
                t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1)) if theta != 0 else 1.0
                c = 1 / np.sqrt(t * t + 1)
                s = t * c
                rot = np.eye(n)
                rot[p, p] = rot[q, q] = c
                rot[p, q], rot[q, p] = s, -s
                a = rot.T @ a @ rot
                a[p, q] = a[q, p] = 0.0
                v = v @ rot
    else:
        raise ConvergenceError(f"Jacobi did not converge in {MAX_SWEEPS} sweeps")
    lam = np.diag(a).copy()
    order = np.argsort(lam)
    lam = lam[order]
    return (lam, v[:, order]) if return_vectors else lam


@dataclass(frozen=True)
class ConeStatus:
    sigma1: float
    sigma2: float
    in_gamma2_plus: bool
    in_gamma2_minus: bool
    on_boundary: bool


def cone_status(m, tol: float = BOUNDARY_TOL) -> ConeStatus:
    """Classify ``m`` against the Garding cones ``Gamma_2^+`` / ``Gamma_2^-``.

    ``on_boundary`` bands ``sigma_2 = 0`` at ``tol`` after scaling ``m`` to
    unit Frobenius norm.
    """
    m = _check_square(m)
    s1 = float(sigma_k(m, 1))
    s2 = float(sigma_k(m, 2))
    norm = float(np.linalg.norm(m))
    s2n = s2 / norm**2 if norm > 0 else 0.0
    boundary = abs(s2n) <= tol and s1 != 0.0
    return ConeStatus(
        sigma1=s1,
        sigma2=s2,
        in_gamma2_plus=bool(s1 > 0 and s2 > 0 and not boundary),
        in_gamma2_minus=bool(s1 < 0 and s2 > 0 and not boundary),
        on_boundary=bool(boundary),
    )


def newton_tensors(hessian):
    """``T1 = -tr(D) I + D`` and ``T2 = D T1 + sigma_2(-D) I`` for ``D = hessian``.

    Accepts stacks ``(..., n, n)``.
    """
    d = _check_square(hessian)
    n = d.shape[-1]
    eye = np.eye(n)
    lap = np.trace(d, axis1=-2, axis2=-1)[..., None, None]
    t1 = -lap * eye + d
    t2 = d @ t1 + sigma_k(-d, 2)[..., None, None] * eye
    return t1, t2
