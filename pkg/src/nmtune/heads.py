"""Tuning heads: linear probe, MLP, and the regularized MLP variant.

The MLP keeps hidden and output width equal to the input dimension so the
transformed features z stay shape-compatible with the source features. The
classifier is a single linear layer on top of z; a linear probe classifies
the raw features directly (z == f).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ShapeError, ValidationError
from .rng import Rng

HEAD_KINDS = ("linear_probe", "mlp", "nmtune")


@dataclass(frozen=True)
class HeadSpec:
    kind: str
    input_dim: int
    num_classes: int
    mlp_layers: int = 2
    activation: str = "relu"

    def __post_init__(self):
        if self.kind not in HEAD_KINDS:
            raise ValidationError(f"unknown head kind {self.kind!r}")
        if self.input_dim < 1 or self.num_classes < 2:
            raise ValidationError("need input_dim >= 1 and num_classes >= 2")
        if self.kind != "linear_probe" and self.mlp_layers < 2:
            raise ValidationError("mlp/nmtune heads need mlp_layers >= 2")
        if self.activation not in ("relu", "none"):
            raise ValidationError(f"unknown activation {self.activation!r}")

    @property
    def has_mlp(self) -> bool:
        return self.kind != "linear_probe"


def init_params(spec: HeadSpec, rng: Rng) -> dict[str, np.ndarray]:
    """Kaiming-style uniform fan-in init for weights, zeros for biases.

    Draw order is fixed: each MLP layer's weight row-major, then the
    classifier weight row-major. bound = sqrt(6 / fan_in).
    """
    params: dict[str, np.ndarray] = {}

    def uniform_weight(fan_in: int, fan_out: int) -> np.ndarray:
        bound = math.sqrt(6.0 / fan_in)
        draws = rng.uniforms(fan_in * fan_out)
        w = np.array(draws, dtype=np.float64).reshape(fan_in, fan_out)
        return (2.0 * w - 1.0) * bound

    d = spec.input_dim
    if spec.has_mlp:
        for layer in range(spec.mlp_layers):
            params[f"mlp{layer}.weight"] = uniform_weight(d, d)
            params[f"mlp{layer}.bias"] = np.zeros(d)
    params["classifier.weight"] = uniform_weight(d, spec.num_classes)
    params["classifier.bias"] = np.zeros(spec.num_classes)
    return params


def forward(spec: HeadSpec, params: dict[str, np.ndarray], f) -> tuple[np.ndarray, np.ndarray]:
    """Returns (z, logits). Linear probe: z is f itself."""
    z, logits, _ = forward_cached(spec, params, f)
    return z, logits


def forward_cached(spec: HeadSpec, params, f):
    fa = np.asarray(f, dtype=np.float64)
    if fa.ndim != 2 or fa.shape[1] != spec.input_dim:
        raise ShapeError(
            f"features shape {fa.shape} incompatible with input_dim={spec.input_dim}"
        )
    acts = [fa]
    pres = []
    if spec.has_mlp:
        a = fa
        for layer in range(spec.mlp_layers):
            pre = a @ params[f"mlp{layer}.weight"] + params[f"mlp{layer}.bias"]
            pres.append(pre)
            last = layer == spec.mlp_layers - 1
            a = pre if last or spec.activation == "none" else np.maximum(pre, 0.0)
            acts.append(a)
    z = acts[-1]
    logits = z @ params["classifier.weight"] + params["classifier.bias"]
    return z, logits, (acts, pres)


def backward(spec: HeadSpec, params, cache, d_logits: np.ndarray, d_z: np.ndarray):
    """Parameter gradients given upstream d_logits and the extra d_z flowing
    directly into the transformed features (the regularizer terms)."""
    acts, pres = cache
    z = acts[-1]
    grads: dict[str, np.ndarray] = {
        "classifier.weight": z.T @ d_logits,
        "classifier.bias": d_logits.sum(axis=0),
    }
    if not spec.has_mlp:
        return grads
    grad_out = d_z + d_logits @ params["classifier.weight"].T
    for layer in reversed(range(spec.mlp_layers)):
        last = layer == spec.mlp_layers - 1
        if last or spec.activation == "none":
            d_pre = grad_out
        else:
            d_pre = grad_out * (pres[layer] > 0.0)
        grads[f"mlp{layer}.weight"] = acts[layer].T @ d_pre
        grads[f"mlp{layer}.bias"] = d_pre.sum(axis=0)
        grad_out = d_pre @ params[f"mlp{layer}.weight"].T
    return grads
