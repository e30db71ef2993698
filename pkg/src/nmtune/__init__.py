"""Black-box feature-space tuning toolkit.

Given feature matrices extracted from a frozen model, this package measures
singular-spectrum diagnostics (SVE, LSVR), trains linear-probe / MLP /
regularized heads, injects symmetric label noise, and runs reproducible
noise-ratio sweeps. A FastAPI service wraps the library; the CLI is a thin
client of that service.
"""

from .data_io import (
    FeatureFile,
    MixtureSpec,
    NoiseSpec,
    inject_symmetric_noise,
    make_mixture,
    read_features,
    split,
    write_features,
)
from .errors import NmtuneError
from .heads import HeadSpec, forward
from .losses import (
    LossValue,
    LossWeights,
    ce_loss_grad,
    cov_loss_grad,
    finite_diff_check,
    mse_consistency_loss_grad,
    svd_ratio_loss_grad,
    total_loss_grad,
)
from .metrics import MetricSet, metrics
from .report import SweepConfig, SweepResult, emit_report, run_sweep
from .spectral import SingularSpectrum, SpectrumReport, lsvr, spectrum_report, sve
from .tensor_core import Matrix, SvdResult, covariance, matmul, svd
from .training import (
    TrainConfig,
    TrainedHead,
    adamw_step,
    cosine_lr,
    default_config,
    load_checkpoint,
    predict,
    save_checkpoint,
    train,
)

__version__ = "0.1.0"

__all__ = [
    "FeatureFile",
    "HeadSpec",
    "LossValue",
    "LossWeights",
    "Matrix",
    "MetricSet",
    "MixtureSpec",
    "NmtuneError",
    "NoiseSpec",
    "SingularSpectrum",
    "SpectrumReport",
    "SvdResult",
    "SweepConfig",
    "SweepResult",
    "TrainConfig",
    "TrainedHead",
    "adamw_step",
    "ce_loss_grad",
    "cosine_lr",
    "cov_loss_grad",
    "covariance",
    "default_config",
    "emit_report",
    "finite_diff_check",
    "forward",
    "inject_symmetric_noise",
    "load_checkpoint",
    "lsvr",
    "make_mixture",
    "matmul",
    "metrics",
    "mse_consistency_loss_grad",
    "predict",
    "read_features",
    "run_sweep",
    "save_checkpoint",
    "spectrum_report",
    "split",
    "svd",
    "svd_ratio_loss_grad",
    "sve",
    "total_loss_grad",
    "train",
    "write_features",
]
