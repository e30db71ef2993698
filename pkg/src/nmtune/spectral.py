"""Singular-spectrum diagnostics: singular value entropy and largest-singular-value ratio.

SVE is the Shannon entropy of the spectrum normalized to a probability
distribution; it measures how flat the spectrum is (bounded by ln r).
LSVR is -ln(sigma_1 / sum(sigma)); it grows as the dominant component
carries less of the total mass.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateSpectrumError, ValidationError
from .tensor_core import as_matrix, svd

TOP_K = 20
# Plot groups: leading values, the 20..500 band, and everything after.
GROUP_SPLITS = (20, 500)


@dataclass(frozen=True)
class SingularSpectrum:
    """Descending nonnegative singular values of an M x D feature matrix."""

    sigma: np.ndarray
    ambient_dim: int
    sample_count: int

    def __post_init__(self):
        sig = np.asarray(self.sigma, dtype=np.float64)
        if sig.ndim != 1:
            raise ValidationError("spectrum must be 1-D")
        r = min(self.sample_count, self.ambient_dim)
        if len(sig) != r:
            raise ValidationError(
                f"spectrum length {len(sig)} != min(M, D) = {r}"
            )
        if len(sig) and sig[-1] < 0:
            raise ValidationError("singular values must be nonnegative")
        if np.any(np.diff(sig) > 0):
            raise ValidationError("singular values must be descending")
        sig = sig.copy()
        sig.setflags(write=False)
        object.__setattr__(self, "sigma", sig)

    @classmethod
    def from_matrix(cls, f) -> "SingularSpectrum":
        f = as_matrix(f)
        return cls(sigma=svd(f).sigma, ambient_dim=f.cols, sample_count=f.rows)


def sve(spectrum: SingularSpectrum) -> float:
    """Entropy of the normalized spectrum; zero values contribute exactly 0."""
    sigma = spectrum.sigma
    total = float(sigma.sum())
    if total <= 0.0:
        raise DegenerateSpectrumError("all-zero singular spectrum")
    p = sigma / total
    nz = p > 0.0
    return float(-(p[nz] * np.log(p[nz])).sum())


def lsvr(spectrum: SingularSpectrum) -> float:
    """-ln(sigma_1 / sum(sigma)); 0 when all mass sits on the top value."""
    sigma = spectrum.sigma
    if len(sigma) == 0 or sigma[0] <= 0.0:
        raise DegenerateSpectrumError("largest singular value is zero")
    return float(-np.log(sigma[0] / sigma.sum()))


@dataclass(frozen=True)
class SpectrumReport:
    sve: float
    lsvr: float
    top_k: list = field(default_factory=list)  # [(index, sigma), ...] for k <= 20
    effective_mass: float = 0.0
    spectrum: SingularSpectrum | None = None
    scope: str = "full_dataset"

    def groups(self) -> dict:
        """Spectrum split for plotting: top 20, 20..500, remainder."""
        sig = self.spectrum.sigma if self.spectrum is not None else np.empty(0)
        a, b = GROUP_SPLITS
        return {
            "top": [float(x) for x in sig[:a]],
            "mid": [float(x) for x in sig[a:b]],
            "tail": [float(x) for x in sig[b:]],
        }

    def to_dict(self) -> dict:
        d = {
            "sve": self.sve,
            "lsvr": self.lsvr,
            "effective_mass": self.effective_mass,
            "top_k": [[int(i), float(s)] for i, s in self.top_k],
            "scope": self.scope,
            "groups": self.groups(),
        }
        if self.spectrum is not None:
            d["ambient_dim"] = self.spectrum.ambient_dim
            d["sample_count"] = self.spectrum.sample_count
        return d


def report_from_spectrum(spectrum: SingularSpectrum, scope: str = "full_dataset") -> SpectrumReport:
    sigma = spectrum.sigma
    return SpectrumReport(
        sve=sve(spectrum),
        lsvr=lsvr(spectrum),
        top_k=[(i, float(sigma[i])) for i in range(min(TOP_K, len(sigma)))],
        effective_mass=float(sigma.sum()),
        spectrum=spectrum,
        scope=scope,
    )


def spectrum_report(f, scope: str = "full_dataset") -> SpectrumReport:
    """Full pipeline: SVD of f, then SVE / LSVR / top-20 / total mass."""
    return report_from_spectrum(SingularSpectrum.from_matrix(f), scope=scope)
