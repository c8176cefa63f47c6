"""Algebra on symmetric matrices and the cone of positive-definite matrices.

Matrices are plain ``numpy`` arrays of shape ``(..., r, r)``; every function
broadcasts over leading batch axes unless stated otherwise.  The coordinate
vector of a symmetric matrix (``vech``) lists the upper triangle in row-major
order with off-diagonal entries stored unscaled, so ``tr(xy)`` in vech
coordinates carries weight 2 on off-diagonal products.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import ConvergenceError, InvalidInputError, NotSPDError

#: relative floor for SPD certification: lambda_min > SPD_RTOL * max(1, |x|_F)
SPD_RTOL = 1e-12
_SYM_RTOL = 1e-10


def vech_dim(r: int) -> int:
    return r * (r + 1) // 2


def rank_from_dim(d: int) -> int:
    """Invert ``d = r(r+1)/2``."""
    r = int(round((np.sqrt(8 * d + 1) - 1) / 2))
    if vech_dim(r) != d:
        raise InvalidInputError(f"{d} is not a triangular number")
    return r


def vech(x):
    """Upper-triangle coordinates of symmetric ``x`` (row-major)."""
    x = np.asarray(x, dtype=float)
    r = x.shape[-1]
    i, j = np.triu_indices(r)
    return x[..., i, j]


def unvech(v, r: int | None = None):
    """Symmetric matrix from its vech coordinates."""
    v = np.asarray(v, dtype=float)
    if r is None:
        r = rank_from_dim(v.shape[-1])
    elif v.shape[-1] != vech_dim(r):
        raise InvalidInputError(f"expected {vech_dim(r)} coordinates for r={r}, got {v.shape[-1]}")
    i, j = np.triu_indices(r)
    out = np.zeros(v.shape[:-1] + (r, r))
    out[..., i, j] = v
    out[..., j, i] = v
    return out


def vech_weights(r: int):
    """Weights turning a dot product of vech vectors into ``tr(xy)``."""
    i, j = np.triu_indices(r)
    return np.where(i == j, 1.0, 2.0)


def inner(x, y):
    """Trace inner product ``<x, y> = tr(xy)`` for symmetric matrices."""
    return np.einsum("...ij,...ij->...", np.asarray(x, float), np.asarray(y, float))


def vech_inner(vx, vy):
    vx = np.asarray(vx, float)
    w = vech_weights(rank_from_dim(vx.shape[-1]))
    return np.sum(w * vx * np.asarray(vy, float), axis=-1)


def identity(r: int):
    return np.eye(r)


def symmetrize(x):
    x = np.asarray(x, dtype=float)
    return 0.5 * (x + np.swapaxes(x, -1, -2))


def check_sym(x):
    """Validate a (batch of) symmetric matrices and return it symmetrized."""
    x = np.asarray(x, dtype=float)
    if x.ndim < 2 or x.shape[-1] != x.shape[-2]:
        raise InvalidInputError(f"expected square matrices, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise InvalidInputError("matrix has non-finite entries")
    asym = np.abs(x - np.swapaxes(x, -1, -2)).max(initial=0.0)
    scale = max(1.0, np.abs(x).max(initial=0.0))
    if asym > _SYM_RTOL * scale:
        raise InvalidInputError(f"matrix is not symmetric (max asymmetry {asym:.3g})")
    return symmetrize(x)


def _check_same_rank(x, y):
    if x.shape[-1] != y.shape[-1]:
        raise InvalidInputError(f"rank mismatch: {x.shape[-1]} vs {y.shape[-1]}")


class EigenDecomposition(NamedTuple):
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self):
        q, lam = self.eigenvectors, self.eigenvalues
        return (q * lam[..., None, :]) @ np.swapaxes(q, -1, -2)


def jacobi_eigh(x, tol: float = 1e-14, max_sweeps: int = 100) -> EigenDecomposition:
    """Cyclic Jacobi eigendecomposition of a single symmetric matrix.

    Converges when the off-diagonal Frobenius norm drops below
    ``tol * |x|_F``.  Used as an LAPACK-independent reference.
    """
    a = check_sym(x).copy()
    if a.ndim != 2:
        raise InvalidInputError("jacobi_eigh takes a single matrix")
    r = a.shape[0]
    q = np.eye(r)
    target = tol * max(np.linalg.norm(a), np.finfo(float).tiny)
    for _ in range(max_sweeps):
        off = np.sqrt(np.sum(np.tril(a, -1) ** 2) * 2)
        if off <= target:
            break
        for p in range(r - 1):
            for k in range(p + 1, r):
                if a[p, k] == 0.0:
                    continue
                theta = (a[k, k] - a[p, p]) / (2.0 * a[p, k])
                t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                if theta == 0.0:
                    t = 1.0
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                rot = np.eye(r)
                rot[p, p] = rot[k, k] = c
                rot[p, k] = s
                rot[k, p] = -s
                a = rot.T @ a @ rot
                q = q @ rot
    else:
        off = np.sqrt(np.sum(np.tril(a, -1) ** 2) * 2)
        if off > target:
            raise ConvergenceError(f"Jacobi did not converge in {max_sweeps} sweeps")
    lam = np.diag(a).copy()
    order = np.argsort(lam)
    return EigenDecomposition(lam[order], q[:, order])


def eig(x, method: str = "lapack") -> EigenDecomposition:
    """Eigendecomposition with ascending eigenvalues.

    ``method="lapack"`` uses ``numpy.linalg.eigh`` and broadcasts over
    batches; ``method="jacobi"`` runs :func:`jacobi_eigh` on one matrix.
    """
    x = check_sym(x)
    if method == "jacobi":
        return jacobi_eigh(x)
    if method != "lapack":
        raise InvalidInputError(f"unknown eig method {method!r}")
    lam, q = np.linalg.eigh(x)
    return EigenDecomposition(lam, q)


def min_eigenvalue(x):
    return np.linalg.eigvalsh(check_sym(x))[..., 0]


def certify_spd(x):
    """Return ``x`` (symmetrized) if every matrix in it lies in the open cone.

    The floor is relative: ``lambda_min > 1e-12 * max(1, |x|_F)``.
    """
    x = check_sym(x)
    lam = np.linalg.eigvalsh(x)
    floor = SPD_RTOL * np.maximum(1.0, np.linalg.norm(x, axis=(-2, -1)))
    bad = lam[..., 0] <= floor
    if np.any(bad):
        worst = np.min(lam[..., 0])
        raise NotSPDError(f"matrix is not positive definite (lambda_min = {worst:.3g})")
    return x


def is_spd(x) -> np.ndarray:
    """Element-wise cone membership (same floor as :func:`certify_spd`)."""
    x = symmetrize(x)
    lam = np.linalg.eigvalsh(x)
    floor = SPD_RTOL * np.maximum(1.0, np.linalg.norm(x, axis=(-2, -1)))
    return lam[..., 0] > floor


def spd_power(x, p: float):
    """``x**p`` via the spectral decomposition of an SPD matrix."""
    x = certify_spd(x)
    if x.shape[-1] == 1:
        return x ** p
    lam, q = np.linalg.eigh(x)
    return symmetrize((q * lam[..., None, :] ** p) @ np.swapaxes(q, -1, -2))


def spd_sqrt(x):
    return spd_power(x, 0.5)


def spd_inv_sqrt(x):
    return spd_power(x, -0.5)


def spd_inverse(x):
    return spd_power(x, -1.0)


def logdet(x):
    """Log-determinant from eigenvalues; raises :class:`NotSPDError` off the cone."""
    x = certify_spd(x)
    return np.sum(np.log(np.linalg.eigvalsh(x)), axis=-1)


def det(x):
    return np.exp(logdet(x))


def trace(x):
    return np.trace(np.asarray(x, dtype=float), axis1=-2, axis2=-1)


def quadratic_rep(y, x):
    """``P(y)x = y x y``."""
    y = np.asarray(y, dtype=float)
    x = np.asarray(x, dtype=float)
    _check_same_rank(x, y)
    return symmetrize(y @ x @ y)


@dataclass(frozen=True)
class SymEndomorphism:
    """Linear map on symmetric r x r matrices in vech coordinates."""

    r: int
    mat: np.ndarray

    def __post_init__(self):
        d = vech_dim(self.r)
        if self.mat.shape != (d, d):
            raise InvalidInputError(f"expected {d}x{d} matrix, got {self.mat.shape}")

    def apply(self, x):
        return unvech(vech(x) @ self.mat.T, self.r)

    def det(self) -> float:
        return endo_det(self)


def vech_basis(r: int):
    """Basis {E_ii} and {E_ij + E_ji} of symmetric matrices, in vech order."""
    return unvech(np.eye(vech_dim(r)), r)


def quadratic_rep_endo(y) -> SymEndomorphism:
    y = check_sym(y)
    r = y.shape[-1]
    cols = vech(y @ vech_basis(r) @ y)
    return SymEndomorphism(r, cols.T.copy())


def endo_det(m: SymEndomorphism) -> float:
    # LAPACK getrf: LU with partial pivoting
    return float(np.linalg.det(m.mat))
