import time
from dataclasses import replace

import numpy as np
import pytest

from nmtune import (
    HeadSpec,
    LossWeights,
    MixtureSpec,
    default_config,
    make_mixture,
    metrics,
    split,
)
from nmtune.training import predict, train, transform

# Config used for the synthetic end-to-end comparison: protocol defaults
# except batch 32 / 100 epochs so the MLP heads actually converge on a
# 450-sample training split (the default batch 256 gives 2 steps/epoch).
E2E_EPOCHS = 100
E2E_BATCH = 32


@pytest.fixture(scope="session")
def mixture():
    """The standard 3-class / D=16 / 600-sample dataset, seed 0."""
    feats, labels = make_mixture(
        MixtureSpec(num_classes=3, dim=16, per_class=200, center_scale=5.0, noise_sigma=1.0, seed=0)
    )
    return feats, labels


@pytest.fixture(scope="session")
def mixture_split(mixture):
    feats, labels = mixture
    train_idx, eval_idx = split(feats, labels, 0.75, 0)
    return feats, labels, train_idx, eval_idx


@pytest.fixture(scope="session")
def e2e_runs(mixture_split):
    """Matched-seed training runs of every head on the synthetic mixture."""
    feats, labels, train_idx, eval_idx = mixture_split
    started = time.perf_counter()
    out = {}
    for name, kind, weights in (
        ("lp", "linear_probe", None),
        ("mlp", "mlp", None),
        ("nmtune", "nmtune", None),
        ("nmtune_nosvd", "nmtune", LossWeights(0.01, 0.01, 0.0)),
    ):
        config = replace(default_config(kind), epochs=E2E_EPOCHS, batch_size=E2E_BATCH)
        if weights is not None:
            config = replace(config, loss_weights=weights)
        spec = HeadSpec(kind=kind, input_dim=feats.shape[1], num_classes=3)
        trained = train(spec, feats[train_idx], labels[train_idx], config)
        eval_metrics = metrics(predict(trained, feats[eval_idx]), labels[eval_idx], 3)
        train_metrics = metrics(predict(trained, feats[train_idx]), labels[train_idx], 3)
        z_full = transform(trained, feats)
        out[name] = {
            "trained": trained,
            "eval": eval_metrics,
            "train": train_metrics,
            "z_full": z_full,
        }
    out["elapsed"] = time.perf_counter() - started
    return out


def random_matrix(rng: np.random.Generator, max_rows=32, max_cols=32):
    m = int(rng.integers(1, max_rows + 1))
    n = int(rng.integers(1, max_cols + 1))
    return rng.normal(size=(m, n))
