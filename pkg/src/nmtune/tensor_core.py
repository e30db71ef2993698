"""Dense float64 matrices, one-sided Jacobi SVD, and sample covariance.

All numerics run in float64. Matrices are immutable after construction and
safe to share; every operation here is a pure function.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InsufficientSamplesError, NumericError, ShapeError, ValidationError

_DEFAULT_MAX_SWEEPS = 64
_DEFAULT_TOL = 1e-14


class Matrix:
    """2-D row-major float64 matrix, validated finite on construction."""

    __slots__ = ("data",)

    def __init__(self, data):
        arr = np.array(data, dtype=np.float64, order="C", copy=True)
        if arr.ndim != 2:
            raise ShapeError(f"matrix must be 2-D, got ndim={arr.ndim}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ShapeError(f"matrix must be nonempty, got shape {arr.shape}")
        if not np.isfinite(arr).all():
            raise ValidationError("matrix entries must be finite (no NaN/Inf)")
        arr.setflags(write=False)
        self.data = arr

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def cols(self) -> int:
        return self.data.shape[1]

    def __repr__(self):
        return f"Matrix({self.rows}x{self.cols})"


def as_matrix(x) -> Matrix:
    return x if isinstance(x, Matrix) else Matrix(x)


@dataclass(frozen=True)
class SvdResult:
    """Thin SVD: f == u @ diag(sigma) @ v.T with r = min(rows, cols)."""

    u: Matrix
    sigma: np.ndarray
    v: Matrix


def matmul(a, b) -> Matrix:
    a, b = as_matrix(a), as_matrix(b)
    if a.cols != b.rows:
        raise ShapeError(
            f"matmul dimension mismatch: ({a.rows}x{a.cols}) @ ({b.rows}x{b.cols})"
        )
    return Matrix(a.data @ b.data)


def _one_sided_jacobi(a: np.ndarray, max_sweeps: int, tol: float):
    """Hestenes one-sided Jacobi on a with rows >= cols.

    Rotates column pairs until every pair is orthogonal relative to the
    column norms; converges quadratically for these problem sizes.
    """
    m, n = a.shape
    u = a.copy()
    v = np.eye(n)
    for sweep in range(1, max_sweeps + 1):
        rotated = False
        for p in range(n - 1):
            for q in range(p + 1, n):
                up = u[:, p]
                uq = u[:, q]
                gamma = float(up @ uq)
                if gamma == 0.0:
                    continue
                alpha = float(up @ up)
                beta = float(uq @ uq)
                if abs(gamma) <= tol * math.sqrt(alpha) * math.sqrt(beta):
                    continue
                zeta = (beta - alpha) / (2.0 * gamma)
                t = math.copysign(1.0, zeta) / (abs(zeta) + math.hypot(1.0, zeta))
                c = 1.0 / math.hypot(1.0, t)
                s = c * t
                new_p = c * up - s * uq
                u[:, q] = s * up + c * uq
                u[:, p] = new_p
                vp = v[:, p].copy()
                v[:, p] = c * vp - s * v[:, q]
                v[:, q] = s * vp + c * v[:, q]
                rotated = True
        if not rotated:
            break
    else:
        raise NumericError(
            f"one-sided Jacobi SVD did not converge after {max_sweeps} sweeps",
            iterations=max_sweeps,
        )
    norms = np.sqrt(np.einsum("ij,ij->j", u, u))
    order = np.argsort(-norms, kind="stable")
    sigma = norms[order]
    u = u[:, order]
    v = v[:, order]
    nonzero = sigma > 0.0
    u[:, nonzero] = u[:, nonzero] / sigma[nonzero]
    for k in np.flatnonzero(~nonzero):
        _fill_orthonormal(u, int(k))
    return u, sigma, v


def _fill_orthonormal(u: np.ndarray, k: int) -> None:
    """Replace the zero column k with a deterministic orthonormal completion."""
    m = u.shape[0]
    have = [j for j in range(u.shape[1]) if j != k and float(u[:, j] @ u[:, j]) > 0.5]
    for i in range(m):
        cand = np.zeros(m)
        cand[i] = 1.0
        for j in have:
            cand -= (u[:, j] @ cand) * u[:, j]
        nrm = math.sqrt(float(cand @ cand))
        if nrm > 0.5:
            u[:, k] = cand / nrm
            return
    raise NumericError("orthonormal completion failed")  # unreachable for k < m


def svd(f, max_sweeps: int = _DEFAULT_MAX_SWEEPS, tol: float = _DEFAULT_TOL) -> SvdResult:
    """Thin SVD with sigma sorted descending, r = min(rows, cols) values."""
    f = as_matrix(f)
    if f.rows >= f.cols:
        u, sigma, v = _one_sided_jacobi(f.data, max_sweeps, tol)
    else:
        # A^T = U' S V'^T  =>  A = V' S U'^T
        v, sigma, u = _one_sided_jacobi(f.data.T.copy(), max_sweeps, tol)
    sigma = np.asarray(sigma, dtype=np.float64)
    sigma.setflags(write=False)
    return SvdResult(u=Matrix(u), sigma=sigma, v=Matrix(v))


def covariance(z) -> Matrix:
    """Sample covariance of the rows of z, explicitly symmetrized."""
    z = as_matrix(z)
    m = z.rows
    if m < 2:
        raise InsufficientSamplesError(f"covariance needs at least 2 rows, got {m}")
    centered = z.data - z.data.mean(axis=0)
    raw = (centered.T @ centered) / (m - 1)
    return Matrix((raw + raw.T) / 2.0)
