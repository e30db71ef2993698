"""NMFT feature-file exchange format, label-noise injection, splits, synthetic data.

File layout (all little-endian):

    magic       4 bytes  "NMFT"
    version     u32      1
    m           u64      sample count
    d           u64      feature dimension
    num_classes u32      0 = unlabeled
    flags       u32      bit0 = has_labels
    features    m*d f32, row-major
    labels      m u32    present iff bit0

Features are stored f32 (typical extractor output) and promoted to f64 for
all computation. Every seeded operation draws from nmtune.rng so output is
byte-for-byte reproducible.
"""

from __future__ import annotations

import math
import os
import struct
import tempfile
from dataclasses import dataclass

import numpy as np

from .errors import (
    FormatError,
    LengthError,
    NoiseImpossibleError,
    StratificationError,
    UsageError,
    ValidationError,
)
from .rng import Rng

MAGIC = b"NMFT"
VERSION = 1
HEADER = struct.Struct("<4sIQQII")  # magic, version, m, d, num_classes, flags
FLAG_HAS_LABELS = 1

# Noise-ratio grids used throughout: the pre-training-style sweep and the
# wider downstream sweep, plus the dataset-percentage protocol.
PRETRAIN_NOISE_GRID = (0.0, 0.05, 0.10, 0.20, 0.30)
DOWNSTREAM_NOISE_GRID = (0.0, 0.10, 0.20, 0.30, 0.40, 0.50)
SUBSAMPLE_GRID = (0.10, 0.25, 0.50, 0.75, 1.00)


@dataclass
class FeatureFile:
    """Parsed contents of an NMFT file."""

    features: np.ndarray  # (m, d) float32
    labels: np.ndarray | None  # (m,) uint32 when labeled
    num_classes: int

    @property
    def m(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]

    @property
    def has_labels(self) -> bool:
        return self.labels is not None


def atomic_write_bytes(path: str, payload: bytes) -> None:
    """Write via temp file + rename so readers never see partial content."""
    directory = os.path.dirname(os.path.abspath(path)) or "."
    try:
        fd, tmp = tempfile.mkstemp(dir=directory, prefix=".nmtune-tmp-")
    except OSError as err:
        raise ValidationError(f"cannot write {path}: {err}") from err
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except OSError as err:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise ValidationError(f"cannot write {path}: {err}") from err
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def encode_features(features, labels=None, num_classes: int = 0) -> bytes:
    feats = np.ascontiguousarray(features, dtype=np.float32)
    if feats.ndim != 2 or feats.shape[0] < 1 or feats.shape[1] < 1:
        raise ValidationError(f"features must be a nonempty 2-D array, got shape {feats.shape}")
    if not np.isfinite(feats).all():
        raise ValidationError("features must be finite")
    m, d = feats.shape
    flags = 0
    label_bytes = b""
    if labels is not None:
        lab = np.asarray(labels)
        if lab.shape != (m,):
            raise ValidationError(f"labels shape {lab.shape} != ({m},)")
        if num_classes < 1:
            raise ValidationError("labeled files need num_classes >= 1")
        if lab.min() < 0 or lab.max() >= num_classes:
            raise ValidationError(f"labels must lie in [0, {num_classes})")
        flags |= FLAG_HAS_LABELS
        label_bytes = lab.astype("<u4").tobytes()
    else:
        if num_classes != 0:
            raise ValidationError("unlabeled files must declare num_classes = 0")
    header = HEADER.pack(MAGIC, VERSION, m, d, num_classes, flags)
    return header + feats.astype("<f4").tobytes() + label_bytes


def write_features(path: str, features, labels=None, num_classes: int = 0) -> None:
    atomic_write_bytes(path, encode_features(features, labels, num_classes))


def decode_features(payload: bytes) -> FeatureFile:
    if len(payload) < HEADER.size:
        raise LengthError(
            f"truncated header: need {HEADER.size} bytes, found {len(payload)}"
        )
    magic, version, m, d, num_classes, flags = HEADER.unpack_from(payload, 0)
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}, expected {MAGIC!r}")
    if version != VERSION:
        raise FormatError(f"unsupported version {version}, expected {VERSION}")
    if m < 1 or d < 1:
        raise ValidationError(f"declared sizes must be positive, got m={m} d={d}")
    has_labels = bool(flags & FLAG_HAS_LABELS)
    expected = m * d * 4 + (m * 4 if has_labels else 0)
    body = len(payload) - HEADER.size
    if body != expected:
        raise LengthError(
            f"payload length mismatch at byte {HEADER.size}: expected {expected} bytes, found {body}"
        )
    feats = np.frombuffer(payload, dtype="<f4", count=m * d, offset=HEADER.size).reshape(m, d)
    if not np.isfinite(feats).all():
        raise ValidationError("features contain non-finite values")
    labels = None
    if has_labels:
        if num_classes < 1:
            raise ValidationError("labeled file declares num_classes = 0")
        labels = np.frombuffer(
            payload, dtype="<u4", count=m, offset=HEADER.size + m * d * 4
        ).copy()
        if labels.max() >= num_classes:
            raise ValidationError(
                f"label {int(labels.max())} out of range for num_classes={num_classes}"
            )
    else:
        if num_classes != 0:
            raise ValidationError("unlabeled file declares a nonzero num_classes")
    return FeatureFile(features=feats.copy(), labels=labels, num_classes=num_classes)


def read_features(path: str) -> FeatureFile:
    try:
        with open(path, "rb") as fh:
            return decode_features(fh.read())
    except OSError as err:
        raise ValidationError(f"cannot read feature file {path}: {err}") from err


@dataclass(frozen=True)
class NoiseSpec:
    ratio: float
    kind: str = "symmetric"
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.ratio <= 1.0:
            raise UsageError(f"noise ratio must lie in [0, 1], got {self.ratio}")
        if self.kind != "symmetric":
            raise UsageError(f"unsupported noise kind {self.kind!r}")


def inject_symmetric_noise(labels, num_classes: int, spec: NoiseSpec):
    """Flip exactly round(ratio*N) labels, each to a uniform other class.

    Flip count is floor(ratio*N + 0.5); indices come from a seeded partial
    Fisher-Yates so flip sets for a fixed seed are nested across ratios.
    Returns (noisy labels, boolean flip mask); every flipped label differs
    from its original.
    """
    lab = np.asarray(labels).astype(np.int64).copy()
    n = len(lab)
    if spec.ratio > 0.0 and num_classes < 2:
        raise NoiseImpossibleError("cannot flip labels with fewer than 2 classes")
    count = int(math.floor(spec.ratio * n + 0.5))
    mask = np.zeros(n, dtype=bool)
    if count == 0:
        return lab, mask
    rng = Rng(spec.seed)
    picked = rng.choose(n, count)
    for idx in picked:
        old = int(lab[idx])
        draw = rng.below(num_classes - 1)
        lab[idx] = draw if draw < old else draw + 1
        mask[idx] = True
    return lab, mask


@dataclass(frozen=True)
class MixtureSpec:
    num_classes: int
    dim: int
    per_class: int
    center_scale: float = 5.0
    noise_sigma: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.num_classes < 1 or self.dim < 1 or self.per_class < 1:
            raise UsageError("mixture counts must all be >= 1")
        if self.noise_sigma <= 0:
            raise UsageError("noise_sigma must be positive")


def make_mixture(spec: MixtureSpec) -> tuple[np.ndarray, np.ndarray]:
    """Gaussian-mixture features: per-class center at center_scale * unit
    direction, plus isotropic noise. Draw order: C*D center gaussians, then
    per-class sample noise row-major. Directions are Gram-Schmidt
    orthonormalized when C <= D so classes stay well separated.
    """
    rng = Rng(spec.seed)
    c, d, n = spec.num_classes, spec.dim, spec.per_class
    raw = np.array(rng.normals(c * d)).reshape(c, d)
    dirs = np.empty_like(raw)
    for i in range(c):
        v = raw[i].copy()
        if c <= d:
            for j in range(i):
                v -= (dirs[j] @ v) * dirs[j]
        nrm = float(np.sqrt(v @ v))
        if nrm < 1e-12:
            raise ValidationError("degenerate center direction draw")
        dirs[i] = v / nrm
    centers = spec.center_scale * dirs
    features = np.empty((c * n, d), dtype=np.float64)
    labels = np.empty(c * n, dtype=np.int64)
    for i in range(c):
        noise = np.array(rng.normals(n * d)).reshape(n, d)
        features[i * n : (i + 1) * n] = centers[i] + spec.noise_sigma * noise
        labels[i * n : (i + 1) * n] = i
    return features, labels


def split(features, labels, fraction: float, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Seeded stratified split; returns (train indices, eval indices), sorted.

    fraction is the train share in (0, 1]; 1.0 keeps everything on the train
    side (the percentage-subsampling protocol). Per-class train counts are
    floor(fraction * n_c + 0.5), clamped so both sides stay nonempty.
    """
    lab = np.asarray(labels)
    n = len(lab)
    if np.asarray(features).shape[0] != n:
        raise ValidationError("features and labels must be aligned")
    if not 0.0 < fraction <= 1.0:
        raise UsageError(f"split fraction must lie in (0, 1], got {fraction}")
    if fraction == 1.0:
        return np.arange(n), np.empty(0, dtype=np.int64)
    rng = Rng(seed)
    train_parts = []
    eval_parts = []
    for cls in np.unique(lab):
        idx = np.flatnonzero(lab == cls)
        n_c = len(idx)
        if n_c < 2:
            raise StratificationError(
                f"class {int(cls)} has {n_c} sample(s); stratified split needs >= 2"
            )
        take = int(math.floor(fraction * n_c + 0.5))
        take = min(max(take, 1), n_c - 1)
        order = rng.permutation(n_c)
        train_parts.append(idx[order[:take]])
        eval_parts.append(idx[order[take:]])
    train_idx = np.sort(np.concatenate(train_parts))
    eval_idx = np.sort(np.concatenate(eval_parts))
    return train_idx, eval_idx
