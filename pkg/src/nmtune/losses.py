"""Training losses with analytic gradients, plus a finite-difference checker.

Four losses: softmax cross-entropy on logits, consistency MSE between
normalized feature rows, squared off-diagonal covariance, and the negative
dominant-singular-value ratio. Gradients of the regularizers flow into the
transformed features z only; the source features f are a frozen input.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateGradientError,
    DegenerateSpectrumError,
    InsufficientSamplesError,
    LabelError,
    NormalizationError,
    ShapeError,
    ValidationError,
)
from .tensor_core import as_matrix, svd

DEFAULT_SVD_GAP_REL = 1e-9


@dataclass(frozen=True)
class LossWeights:
    lambda_mse: float = 0.0
    lambda_cov: float = 0.0
    lambda_svd: float = 0.0

    def __post_init__(self):
        for name in ("lambda_mse", "lambda_cov", "lambda_svd"):
            v = getattr(self, name)
            if not np.isfinite(v) or v < 0:
                raise ValidationError(f"{name} must be finite and nonnegative, got {v}")


@dataclass(frozen=True)
class LossValue:
    total: float
    ce: float
    mse: float
    cov: float
    svd: float

    @classmethod
    def combine(cls, ce, mse, cov, svd, weights: LossWeights) -> "LossValue":
        total = (
            ce
            + weights.lambda_mse * mse
            + weights.lambda_cov * cov
            + weights.lambda_svd * svd
        )
        return cls(total=total, ce=ce, mse=mse, cov=cov, svd=svd)


@dataclass(frozen=True)
class LossGrads:
    d_logits: np.ndarray
    d_z: np.ndarray


def ce_loss_grad(logits, labels) -> tuple[float, np.ndarray]:
    """Mean softmax cross-entropy; gradient = (softmax - onehot) / M."""
    z = as_matrix(logits).data
    y = np.asarray(labels)
    if y.ndim != 1 or len(y) != z.shape[0]:
        raise ShapeError(f"labels shape {y.shape} does not match logits rows {z.shape[0]}")
    if not np.issubdtype(y.dtype, np.integer):
        raise LabelError("labels must be integers")
    m, c = z.shape
    if y.min(initial=0) < 0 or y.max(initial=0) >= c:
        raise LabelError(f"labels must lie in [0, {c})")
    shifted = z - z.max(axis=1, keepdims=True)
    expz = np.exp(shifted)
    total = expz.sum(axis=1, keepdims=True)
    log_p = shifted - np.log(total)
    loss = float(-log_p[np.arange(m), y].mean())
    grad = expz / total
    grad[np.arange(m), y] -= 1.0
    grad /= m
    return loss, grad


def mse_consistency_loss_grad(f, z, normalization: str = "row") -> tuple[float, np.ndarray]:
    """Consistency MSE between normalized f and z; gradient w.r.t. z.

    normalization="row" (default): mean over rows of the squared distance
    between L2-normalized rows. normalization="frobenius": one global scale
    per matrix instead of one per row.
    """
    fa = as_matrix(f).data
    za = as_matrix(z).data
    if fa.shape != za.shape:
        raise ShapeError(f"f shape {fa.shape} != z shape {za.shape}")
    if normalization == "row":
        return _mse_rowwise(fa, za)
    if normalization == "frobenius":
        return _mse_frobenius(fa, za)
    raise ValidationError(f"unknown normalization {normalization!r}")


def _check_row_norms(norms: np.ndarray, name: str) -> None:
    zero = np.flatnonzero(norms == 0.0)
    if len(zero):
        row = int(zero[0])
        raise NormalizationError(f"{name} row {row} has zero norm", row=row)


def _mse_rowwise(fa, za):
    m = fa.shape[0]
    fn = np.sqrt(np.einsum("ij,ij->i", fa, fa))
    zn = np.sqrt(np.einsum("ij,ij->i", za, za))
    _check_row_norms(fn, "f")
    _check_row_norms(zn, "z")
    fh = fa / fn[:, None]
    zh = za / zn[:, None]
    diff = zh - fh
    loss = float(np.einsum("ij,ij->", diff, diff) / m)
    # d zh / d z = (I - zh zh^T) / |z|, applied row by row
    proj = np.einsum("ij,ij->i", zh, diff)
    grad = (2.0 / m) * (diff - zh * proj[:, None]) / zn[:, None]
    return loss, grad


def _mse_frobenius(fa, za):
    fn = float(np.sqrt(np.einsum("ij,ij->", fa, fa)))
    zn = float(np.sqrt(np.einsum("ij,ij->", za, za)))
    if fn == 0.0:
        raise NormalizationError("f has zero Frobenius norm")
    if zn == 0.0:
        raise NormalizationError("z has zero Frobenius norm")
    fh = fa / fn
    zh = za / zn
    diff = zh - fh
    loss = float(np.einsum("ij,ij->", diff, diff))
    proj = float(np.einsum("ij,ij->", zh, diff))
    grad = 2.0 * (diff - zh * proj) / zn
    return loss, grad


def cov_loss_grad(z) -> tuple[float, np.ndarray]:
    """(1/D) * sum of squared off-diagonal covariance entries; gradient w.r.t. z."""
    za = as_matrix(z).data
    m, d = za.shape
    if m < 2:
        raise InsufficientSamplesError(f"covariance loss needs at least 2 rows, got {m}")
    centered = za - za.mean(axis=0)
    raw = (centered.T @ centered) / (m - 1)
    c = (raw + raw.T) / 2.0
    off = c.copy()
    np.fill_diagonal(off, 0.0)
    loss = float(np.einsum("ij,ij->", off, off) / d)
    grad = (4.0 / (d * (m - 1))) * (centered @ off)
    return loss, grad


def svd_ratio_loss_grad(z, gap_rel: float = DEFAULT_SVD_GAP_REL) -> tuple[float, np.ndarray]:
    """-sigma_1 / sum(sigma); gradient via d sigma_k / dZ = u_k v_k^T.

    Requires a relative gap between the top two singular values; otherwise
    the gradient is undefined and a DegenerateGradientError is raised so the
    caller can skip the term for that batch.
    """
    zm = as_matrix(z)
    res = svd(zm)
    sigma = res.sigma
    if sigma[0] <= 0.0:
        raise DegenerateSpectrumError("cannot form singular value ratio of a zero matrix")
    if len(sigma) >= 2 and (sigma[0] - sigma[1]) <= gap_rel * sigma[0]:
        raise DegenerateGradientError(
            f"top singular values too close (gap <= {gap_rel:g} * sigma_1)"
        )
    total = float(sigma.sum())
    loss = -float(sigma[0]) / total
    u = res.u.data
    v = res.v.data
    top = np.outer(u[:, 0], v[:, 0])
    sum_outer = u @ v.T
    grad = -(top * total - float(sigma[0]) * sum_outer) / (total * total)
    return loss, grad


def total_loss_grad(
    f,
    z,
    logits,
    labels,
    weights: LossWeights,
    normalization: str = "row",
    gap_rel: float = DEFAULT_SVD_GAP_REL,
) -> tuple[LossValue, LossGrads]:
    """Weighted objective; regularizer terms are evaluated only when their
    weight is positive, so a zero-weight run is bit-identical to plain CE."""
    ce, d_logits = ce_loss_grad(logits, labels)
    za = as_matrix(z).data
    d_z = np.zeros_like(za)
    mse = cov = svd_term = 0.0
    if weights.lambda_mse > 0.0:
        mse, g = mse_consistency_loss_grad(f, za, normalization=normalization)
        d_z += weights.lambda_mse * g
    if weights.lambda_cov > 0.0:
        cov, g = cov_loss_grad(za)
        d_z += weights.lambda_cov * g
    if weights.lambda_svd > 0.0:
        svd_term, g = svd_ratio_loss_grad(za, gap_rel=gap_rel)
        d_z += weights.lambda_svd * g
    value = LossValue.combine(ce, mse, cov, svd_term, weights)
    return value, LossGrads(d_logits=d_logits, d_z=d_z)


def finite_diff_check(loss_fn, point, h: float) -> float:
    """Max deviation between central differences and the analytic gradient.

    loss_fn maps an ndarray to (value, gradient). Deviations are measured
    relative to the larger of the two gradients' max magnitudes (floored at
    1e-12) so flat coordinates do not divide by zero.
    """
    if h <= 0:
        raise ValidationError("finite_diff_check needs h > 0")
    x = np.array(point, dtype=np.float64)
    _, g = loss_fn(x)
    g = np.asarray(g, dtype=np.float64)
    if g.shape != x.shape:
        raise ShapeError(f"gradient shape {g.shape} != point shape {x.shape}")
    fd = np.empty_like(x)
    for idx in np.ndindex(x.shape):
        xp = x.copy()
        xp[idx] += h
        xm = x.copy()
        xm[idx] -= h
        fd[idx] = (loss_fn(xp)[0] - loss_fn(xm)[0]) / (2.0 * h)
    scale = max(float(np.abs(g).max(initial=0.0)), float(np.abs(fd).max(initial=0.0)), 1e-12)
    return float(np.abs(fd - g).max(initial=0.0) / scale)
