"""Deterministic training loop: AdamW with decoupled decay, cosine schedule,
per-epoch loss/diagnostic history, and a versioned binary checkpoint.

A run is fully determined by (head spec, data, config): initialization,
shuffling, batching, and the diagnostic subsample are all seeded streams of
the package PRNG, and everything executes single-threaded.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import (
    DegenerateGradientError,
    DegenerateSpectrumError,
    DivergenceError,
    FormatError,
    LabelError,
    LengthError,
    NormalizationError,
    ValidationError,
)
from .heads import HeadSpec, backward, forward_cached, init_params
from .losses import LossValue, LossWeights, ce_loss_grad, total_loss_grad
from .rng import Rng, STREAM_INIT, STREAM_SHUFFLE, STREAM_SUBSAMPLE
from .spectral import SingularSpectrum, lsvr as spectrum_lsvr, sve as spectrum_sve
from .data_io import atomic_write_bytes

CHECKPOINT_MAGIC = b"NMCK"
CHECKPOINT_VERSION = 1

_HEAD_CODES = {"linear_probe": 0, "mlp": 1, "nmtune": 2}
_HEAD_NAMES = {v: k for k, v in _HEAD_CODES.items()}
_ACT_CODES = {"relu": 0, "none": 1}
_ACT_NAMES = {v: k for k, v in _ACT_CODES.items()}


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 30
    batch_size: int = 256
    lr: float = 0.1
    weight_decay: float = 0.0
    schedule: str = "cosine"
    loss_weights: LossWeights = field(default_factory=LossWeights)
    seed: int = 0
    betas: tuple[float, float] = (0.9, 0.999)
    eps: float = 1e-8
    mse_normalization: str = "row"
    svd_gap_rel: float = 1e-9
    diag_subsample: int = 2048

    def __post_init__(self):
        if self.lr <= 0:
            raise ValidationError(f"lr must be positive, got {self.lr}")
        if self.epochs < 1:
            raise ValidationError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 2:
            raise ValidationError(f"batch_size must be >= 2, got {self.batch_size}")
        if self.schedule not in ("cosine", "constant"):
            raise ValidationError(f"unknown schedule {self.schedule!r}")

    def to_dict(self) -> dict:
        return {
            "epochs": self.epochs,
            "batch_size": self.batch_size,
            "lr": self.lr,
            "weight_decay": self.weight_decay,
            "schedule": self.schedule,
            "lambda_mse": self.loss_weights.lambda_mse,
            "lambda_cov": self.loss_weights.lambda_cov,
            "lambda_svd": self.loss_weights.lambda_svd,
            "seed": self.seed,
            "betas": list(self.betas),
            "eps": self.eps,
            "mse_normalization": self.mse_normalization,
            "svd_gap_rel": self.svd_gap_rel,
            "diag_subsample": self.diag_subsample,
        }


def default_config(kind: str, seed: int = 0) -> TrainConfig:
    """Protocol defaults: linear probe lr 0.1 / no decay; MLP and the
    regularized head lr 1e-3 / decay 1e-4; 30 epochs, cosine, batch 256;
    regularizer weights 0.01 each for the regularized head only."""
    if kind == "linear_probe":
        return TrainConfig(lr=0.1, weight_decay=0.0, seed=seed)
    if kind == "mlp":
        return TrainConfig(lr=0.001, weight_decay=1e-4, seed=seed)
    if kind == "nmtune":
        return TrainConfig(
            lr=0.001,
            weight_decay=1e-4,
            loss_weights=LossWeights(0.01, 0.01, 0.01),
            seed=seed,
        )
    raise ValidationError(f"unknown head kind {kind!r}")


@dataclass(frozen=True)
class EpochRecord:
    loss: LossValue  # mean of the in-epoch batch losses
    train_ce: float  # CE over the whole training split at epoch end
    sve: float | None
    lsvr: float | None
    svd_skipped: int = 0
    mse_skipped: int = 0


@dataclass
class TrainedHead:
    spec: HeadSpec
    params: dict[str, np.ndarray]
    history: list[EpochRecord]
    config: TrainConfig
    final_sve: float
    final_lsvr: float


def cosine_lr(t: int, total: int, base_lr: float) -> float:
    """base_lr * 0.5 * (1 + cos(pi * t / total)); no warmup."""
    if not 0 <= t <= total:
        raise ValidationError(f"step {t} outside [0, {total}]")
    return base_lr * 0.5 * (1.0 + math.cos(math.pi * t / total))


def adamw_step(params, grads, state, t: int, config: TrainConfig, lr: float | None = None):
    """One AdamW update, in place. Decoupled weight decay, applied to every
    parameter except biases; moments bias-corrected with step count t >= 1."""
    if t < 1:
        raise ValidationError("adamw_step needs t >= 1")
    lr_t = config.lr if lr is None else lr
    beta1, beta2 = config.betas
    c1 = 1.0 - beta1**t
    c2 = 1.0 - beta2**t
    for name, p in params.items():
        g = grads[name]
        if name not in state:
            state[name] = (np.zeros_like(p), np.zeros_like(p))
        m, v = state[name]
        m *= beta1
        m += (1.0 - beta1) * g
        v *= beta2
        v += (1.0 - beta2) * (g * g)
        m_hat = m / c1
        v_hat = v / c2
        update = lr_t * (m_hat / (np.sqrt(v_hat) + config.eps))
        if config.weight_decay > 0.0 and not name.endswith(".bias"):
            update = update + lr_t * config.weight_decay * p
        p -= update
    return params, state


def _batch_plan(m: int, batch_size: int) -> list[tuple[int, int]]:
    """Contiguous batch bounds; a trailing batch smaller than 2 is dropped."""
    bounds = []
    for lo in range(0, m, batch_size):
        hi = min(lo + batch_size, m)
        if hi - lo >= 2:
            bounds.append((lo, hi))
    return bounds


def _epoch_loss(values: list[LossValue], weights: LossWeights) -> LossValue:
    ce = float(np.mean([v.ce for v in values]))
    mse = float(np.mean([v.mse for v in values]))
    cov = float(np.mean([v.cov for v in values]))
    svd = float(np.mean([v.svd for v in values]))
    return LossValue.combine(ce, mse, cov, svd, weights)


def _diagnostics(z: np.ndarray) -> tuple[float | None, float | None]:
    try:
        spec = SingularSpectrum.from_matrix(z)
        return spectrum_sve(spec), spectrum_lsvr(spec)
    except DegenerateSpectrumError:
        return None, None


def train(head_spec: HeadSpec, features, labels, config: TrainConfig) -> TrainedHead:
    """Train one head. The regularized objective is active only for the
    nmtune head; linear probe and plain MLP optimize cross-entropy alone.

    Per batch, undefined regularizer terms are skipped and counted rather
    than aborting: the dominant-singular-value term when the top spectrum
    gap degenerates, and the consistency term when a transient z row has
    exactly zero norm. NaN in any loss raises DivergenceError with the
    epoch/batch coordinates.
    """
    fa = np.asarray(features, dtype=np.float64)
    ya = np.asarray(labels)
    if fa.ndim != 2 or fa.shape[0] != len(ya):
        raise ValidationError("features and labels must be aligned")
    if fa.shape[0] < 2:
        raise ValidationError("training needs at least 2 samples")
    if fa.shape[1] != head_spec.input_dim:
        raise ValidationError(
            f"feature dim {fa.shape[1]} != head input_dim {head_spec.input_dim}"
        )
    if not np.issubdtype(ya.dtype, np.integer):
        raise LabelError("labels must be integers")
    if ya.min() < 0 or ya.max() >= head_spec.num_classes:
        raise LabelError(f"labels must lie in [0, {head_spec.num_classes})")

    weights = config.loss_weights if head_spec.kind == "nmtune" else LossWeights()
    if weights.lambda_mse > 0.0:
        norms = np.sqrt(np.einsum("ij,ij->i", fa, fa))
        dead = np.flatnonzero(norms == 0.0)
        if len(dead):
            raise NormalizationError(
                f"source feature row {int(dead[0])} has zero norm", row=int(dead[0])
            )

    m = fa.shape[0]
    params = init_params(head_spec, Rng(config.seed, STREAM_INIT))
    shuffle_rng = Rng(config.seed, STREAM_SHUFFLE)
    if m > config.diag_subsample:
        diag_rng = Rng(config.seed, STREAM_SUBSAMPLE)
        diag_idx = np.array(sorted(diag_rng.choose(m, config.diag_subsample)))
    else:
        diag_idx = np.arange(m)

    plan = _batch_plan(m, config.batch_size)
    if not plan:
        raise ValidationError("no usable batches (every batch smaller than 2)")
    total_steps = config.epochs * len(plan)
    state: dict = {}
    step = 0
    history: list[EpochRecord] = []

    for epoch in range(config.epochs):
        perm = np.array(shuffle_rng.permutation(m))
        batch_values: list[LossValue] = []
        svd_skipped = 0
        mse_skipped = 0
        for batch_no, (lo, hi) in enumerate(plan):
            idx = perm[lo:hi]
            fb = fa[idx]
            yb = ya[idx]
            z, logits, cache = forward_cached(head_spec, params, fb)
            if not (np.isfinite(z).all() and np.isfinite(logits).all()):
                raise DivergenceError(
                    f"non-finite activations at epoch {epoch}, batch {batch_no}",
                    epoch=epoch,
                    batch=batch_no,
                )
            active = weights
            while True:
                try:
                    value, grads = total_loss_grad(
                        fb,
                        z,
                        logits,
                        yb,
                        active,
                        normalization=config.mse_normalization,
                        gap_rel=config.svd_gap_rel,
                    )
                    break
                except DegenerateGradientError:
                    active = replace(active, lambda_svd=0.0)
                    svd_skipped += 1
                except NormalizationError:
                    active = replace(active, lambda_mse=0.0)
                    mse_skipped += 1
            if not math.isfinite(value.total):
                raise DivergenceError(
                    f"non-finite loss at epoch {epoch}, batch {batch_no}",
                    epoch=epoch,
                    batch=batch_no,
                )
            head_grads = backward(head_spec, params, cache, grads.d_logits, grads.d_z)
            lr_t = (
                cosine_lr(step, total_steps, config.lr)
                if config.schedule == "cosine"
                else config.lr
            )
            step += 1
            adamw_step(params, head_grads, state, step, config, lr=lr_t)
            batch_values.append(value)
        z_full, logits_full, _ = forward_cached(head_spec, params, fa)
        if not (np.isfinite(z_full).all() and np.isfinite(logits_full).all()):
            raise DivergenceError(
                f"non-finite activations after epoch {epoch}", epoch=epoch
            )
        train_ce, _ = ce_loss_grad(logits_full, ya)
        diag_sve, diag_lsvr = _diagnostics(z_full[diag_idx])
        history.append(
            EpochRecord(
                loss=_epoch_loss(batch_values, weights),
                train_ce=train_ce,
                sve=diag_sve,
                lsvr=diag_lsvr,
                svd_skipped=svd_skipped,
                mse_skipped=mse_skipped,
            )
        )

    for name, p in params.items():
        if not np.isfinite(p).all():
            raise DivergenceError(
                f"parameter {name} non-finite at completion", epoch=config.epochs - 1
            )
    final_sve, final_lsvr = _diagnostics(z_full)
    return TrainedHead(
        spec=head_spec,
        params=params,
        history=history,
        config=config,
        final_sve=float("nan") if final_sve is None else final_sve,
        final_lsvr=float("nan") if final_lsvr is None else final_lsvr,
    )


def predict(trained: TrainedHead, features) -> np.ndarray:
    _, logits, _ = forward_cached(trained.spec, trained.params, np.asarray(features, dtype=np.float64))
    return logits.argmax(axis=1)


def transform(trained: TrainedHead, features) -> np.ndarray:
    z, _, _ = forward_cached(trained.spec, trained.params, np.asarray(features, dtype=np.float64))
    return z


def save_checkpoint(path: str, trained: TrainedHead) -> None:
    """Versioned little-endian container: header, head spec, then named f64
    parameter tensors (length-prefixed names, row-major payloads)."""
    spec = trained.spec
    out = [
        struct.pack(
            "<4sIBIIIBI",
            CHECKPOINT_MAGIC,
            CHECKPOINT_VERSION,
            _HEAD_CODES[spec.kind],
            spec.input_dim,
            spec.num_classes,
            spec.mlp_layers,
            _ACT_CODES[spec.activation],
            len(trained.params),
        )
    ]
    for name, p in trained.params.items():
        encoded = name.encode("utf-8")
        arr = np.ascontiguousarray(p, dtype=np.float64)
        rows = arr.shape[0]
        cols = arr.shape[1] if arr.ndim == 2 else 0
        out.append(struct.pack("<H", len(encoded)))
        out.append(encoded)
        out.append(struct.pack("<QQ", rows, cols))
        out.append(arr.astype("<f8").tobytes())
    atomic_write_bytes(path, b"".join(out))


def load_checkpoint(path: str) -> tuple[HeadSpec, dict[str, np.ndarray]]:
    try:
        with open(path, "rb") as fh:
            payload = fh.read()
    except OSError as err:
        raise ValidationError(f"cannot read checkpoint {path}: {err}") from err
    head_fmt = struct.Struct("<4sIBIIIBI")
    if len(payload) < head_fmt.size:
        raise LengthError("truncated checkpoint header")
    magic, version, kind_code, input_dim, num_classes, mlp_layers, act_code, n_params = (
        head_fmt.unpack_from(payload, 0)
    )
    if magic != CHECKPOINT_MAGIC:
        raise FormatError(f"bad checkpoint magic {magic!r}")
    if version != CHECKPOINT_VERSION:
        raise FormatError(f"unsupported checkpoint version {version}")
    if kind_code not in _HEAD_NAMES or act_code not in _ACT_NAMES:
        raise ValidationError("unknown head or activation code")
    spec = HeadSpec(
        kind=_HEAD_NAMES[kind_code],
        input_dim=input_dim,
        num_classes=num_classes,
        mlp_layers=mlp_layers,
        activation=_ACT_NAMES[act_code],
    )
    offset = head_fmt.size
    params: dict[str, np.ndarray] = {}
    for _ in range(n_params):
        if offset + 2 > len(payload):
            raise LengthError("truncated checkpoint parameter table")
        (name_len,) = struct.unpack_from("<H", payload, offset)
        offset += 2
        name = payload[offset : offset + name_len].decode("utf-8")
        offset += name_len
        rows, cols = struct.unpack_from("<QQ", payload, offset)
        offset += 16
        count = rows * (cols if cols else 1)
        nbytes = count * 8
        if offset + nbytes > len(payload):
            raise LengthError(f"truncated checkpoint tensor {name!r}")
        arr = np.frombuffer(payload, dtype="<f8", count=count, offset=offset).copy()
        offset += nbytes
        params[name] = arr.reshape(rows, cols) if cols else arr
    if offset != len(payload):
        raise LengthError("trailing bytes after checkpoint payload")
    return spec, params
