"""Pydantic request/response models for the tuning service.

Requests carry file paths plus run parameters; the heavy payloads (feature
matrices, checkpoints) stay on disk in NMFT / checkpoint containers, so the
wire format is small and numbers survive JSON round-trips exactly.
"""

from __future__ import annotations

from typing import Any, Literal, Optional

from pydantic import BaseModel, Field

HeadName = Literal["lp", "mlp", "nmtune"]

HEAD_ALIASES = {"lp": "linear_probe", "mlp": "mlp", "nmtune": "nmtune"}


class ErrorDetail(BaseModel):
    kind: Literal["usage", "data", "numeric"]
    message: str


class HealthResponse(BaseModel):
    status: str
    version: str


class AnalyzeRequest(BaseModel):
    features: str
    subsample: Optional[int] = Field(default=None, ge=1)
    seed: int = 0
    out: Optional[str] = None


class SpectrumGroups(BaseModel):
    top: list[float]
    mid: list[float]
    tail: list[float]


class AnalyzeResponse(BaseModel):
    schema_version: int
    kind: str
    sve: float
    lsvr: float
    effective_mass: float
    top_k: list[list[float]]
    scope: str
    groups: SpectrumGroups
    ambient_dim: int
    sample_count: int
    out: Optional[str] = None


class TrainRequest(BaseModel):
    features: str
    head: HeadName
    epochs: Optional[int] = Field(default=None, ge=1)
    lr: Optional[float] = Field(default=None, gt=0)
    wd: Optional[float] = Field(default=None, ge=0)
    batch: Optional[int] = Field(default=None, ge=2)
    lambda_mse: Optional[float] = Field(default=None, ge=0)
    lambda_cov: Optional[float] = Field(default=None, ge=0)
    lambda_svd: Optional[float] = Field(default=None, ge=0)
    seed: int = 0
    split_fraction: float = Field(default=0.75, gt=0, le=1)
    split_seed: int = 0
    mse_normalization: Literal["row", "frobenius"] = "row"
    out: Optional[str] = None


class TrainResponse(BaseModel):
    report: dict[str, Any]
    report_path: Optional[str] = None
    checkpoint_path: Optional[str] = None


class SweepRequest(BaseModel):
    features: str
    ratios: list[float]
    heads: list[HeadName]
    seeds: int = Field(default=3, ge=1)
    epochs: Optional[int] = Field(default=None, ge=1)
    batch: Optional[int] = Field(default=None, ge=2)
    lr: Optional[float] = Field(default=None, gt=0)
    wd: Optional[float] = Field(default=None, ge=0)
    lambda_mse: Optional[float] = Field(default=None, ge=0)
    lambda_cov: Optional[float] = Field(default=None, ge=0)
    lambda_svd: Optional[float] = Field(default=None, ge=0)
    split_fraction: float = Field(default=0.75, gt=0, le=1)
    split_seed: int = 0
    jobs: int = Field(default=1, ge=1)
    out: Optional[str] = None


class SweepResponse(BaseModel):
    report: dict[str, Any]
    report_path: Optional[str] = None
    csv_path: Optional[str] = None


class SynthRequest(BaseModel):
    classes: int = Field(ge=1)
    dim: int = Field(ge=1)
    per_class: int = Field(ge=1)
    center_scale: float = 5.0
    sigma: float = Field(default=1.0, gt=0)
    seed: int = 0
    out: str


class SynthResponse(BaseModel):
    out: str
    m: int
    d: int
    num_classes: int


class InjectNoiseRequest(BaseModel):
    features: str
    ratio: float = Field(ge=0, le=1)
    seed: int = 0
    out: str


class InjectNoiseResponse(BaseModel):
    out: str
    mask_path: str
    flips: int
    m: int


class ValidateRequest(BaseModel):
    features: str


class ValidateResponse(BaseModel):
    valid: bool
    m: int
    d: int
    num_classes: int
    has_labels: bool
