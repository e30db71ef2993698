"""Sweep orchestration over (noise ratio, head, seed) grids and report emission.

Reports are plain dicts with a fixed field order and no timestamps, so a
sweep rerun with identical inputs serializes to identical bytes. JSON is
the primary schema (versioned); CSV gives one flat row per grid cell.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .data_io import FeatureFile, NoiseSpec, atomic_write_bytes, inject_symmetric_noise, split
from .errors import NmtuneError, UsageError, ValidationError
from .heads import HeadSpec
from .metrics import MetricSet, metrics
from .spectral import spectrum_report
from .training import TrainConfig, TrainedHead, default_config, predict, train

SCHEMA_VERSION = 1

_CSV_COLUMNS = [
    "ratio",
    "head",
    "seed",
    "error",
    "accuracy",
    "macro_f1",
    "mean_per_class",
    "sve",
    "lsvr",
    "flips",
    "epochs",
    "batch_size",
    "lr",
    "weight_decay",
    "schedule",
    "lambda_mse",
    "lambda_cov",
    "lambda_svd",
]


def _num(x) -> float | None:
    """JSON-safe float: non-finite values become null."""
    if x is None:
        return None
    x = float(x)
    return x if math.isfinite(x) else None


@dataclass(frozen=True)
class SweepConfig:
    """Grid-wide settings; train fields override each head's defaults."""

    split_fraction: float = 0.75
    split_seed: int = 0
    epochs: int | None = None
    batch_size: int | None = None
    lr: float | None = None
    weight_decay: float | None = None
    lambda_mse: float | None = None
    lambda_cov: float | None = None
    lambda_svd: float | None = None
    mse_normalization: str = "row"
    jobs: int = 1


@dataclass
class SweepResult:
    ratios: list[float]
    heads: list[str]
    seeds: list[int]
    cells: list[dict]
    aggregates: list[dict] = field(default_factory=list)


def resolve_train_config(head_kind: str, seed: int, sweep: SweepConfig) -> TrainConfig:
    cfg = default_config(head_kind, seed=seed)
    from .losses import LossWeights

    weights = cfg.loss_weights
    if head_kind == "nmtune" and any(
        v is not None for v in (sweep.lambda_mse, sweep.lambda_cov, sweep.lambda_svd)
    ):
        weights = LossWeights(
            sweep.lambda_mse if sweep.lambda_mse is not None else weights.lambda_mse,
            sweep.lambda_cov if sweep.lambda_cov is not None else weights.lambda_cov,
            sweep.lambda_svd if sweep.lambda_svd is not None else weights.lambda_svd,
        )
    return TrainConfig(
        epochs=sweep.epochs if sweep.epochs is not None else cfg.epochs,
        batch_size=sweep.batch_size if sweep.batch_size is not None else cfg.batch_size,
        lr=sweep.lr if sweep.lr is not None else cfg.lr,
        weight_decay=(
            sweep.weight_decay if sweep.weight_decay is not None else cfg.weight_decay
        ),
        schedule=cfg.schedule,
        loss_weights=weights,
        seed=seed,
        mse_normalization=sweep.mse_normalization,
    )


def history_to_dicts(trained: TrainedHead) -> list[dict]:
    out = []
    for rec in trained.history:
        out.append(
            {
                "total": rec.loss.total,
                "ce": rec.loss.ce,
                "mse": rec.loss.mse,
                "cov": rec.loss.cov,
                "svd": rec.loss.svd,
                "train_ce": rec.train_ce,
                "sve": _num(rec.sve),
                "lsvr": _num(rec.lsvr),
                "svd_skipped": rec.svd_skipped,
                "mse_skipped": rec.mse_skipped,
            }
        )
    return out


def evaluate_cell(
    dataset: FeatureFile,
    ratio: float,
    head_kind: str,
    seed: int,
    sweep: SweepConfig,
    train_idx: np.ndarray,
    eval_idx: np.ndarray,
) -> dict:
    """Train one grid cell: noise goes into the train split only, metrics
    come from the clean eval split."""
    feats = dataset.features.astype(np.float64)
    labels = dataset.labels.astype(np.int64)
    noisy, mask = inject_symmetric_noise(
        labels[train_idx], dataset.num_classes, NoiseSpec(ratio=ratio, seed=seed)
    )
    config = resolve_train_config(head_kind, seed, sweep)
    spec = HeadSpec(kind=head_kind, input_dim=dataset.d, num_classes=dataset.num_classes)
    trained = train(spec, feats[train_idx], noisy, config)
    pred = predict(trained, feats[eval_idx])
    mset = metrics(pred, labels[eval_idx], dataset.num_classes)
    return {
        "ratio": ratio,
        "head": head_kind,
        "seed": seed,
        "error": None,
        "flips": int(mask.sum()),
        "config": config.to_dict(),
        "metrics": mset.to_dict(),
        "final_sve": _num(trained.final_sve),
        "final_lsvr": _num(trained.final_lsvr),
        "history": history_to_dicts(trained),
    }


def _cell_worker(args) -> dict:
    dataset, ratio, head_kind, seed, sweep, train_idx, eval_idx = args
    try:
        return evaluate_cell(dataset, ratio, head_kind, seed, sweep, train_idx, eval_idx)
    except NmtuneError as err:
        return {
            "ratio": ratio,
            "head": head_kind,
            "seed": seed,
            "error": {"kind": err.kind, "message": str(err)},
        }


def _cell_filename(index: int, ratio: float, head: str, seed: int) -> str:
    return f"cell_{index:04d}_{ratio:g}_{head}_{seed}.json"


def run_sweep(
    dataset: FeatureFile,
    ratios,
    heads,
    seeds,
    sweep: SweepConfig | None = None,
    out_dir: str | None = None,
) -> SweepResult:
    """Grid order is ratio-major, then head, then seed. Failed cells record
    an error marker instead of aborting the sweep. With out_dir set, each
    cell is persisted as it completes and existing cell files are reused,
    which makes interrupted sweeps resumable."""
    sweep = sweep or SweepConfig()
    ratios = [float(r) for r in ratios]
    heads = list(heads)
    if isinstance(seeds, int):
        seeds = list(range(seeds))
    seeds = [int(s) for s in seeds]
    if not ratios or not heads or not seeds:
        raise UsageError("sweep grids must be nonempty")
    if dataset.labels is None:
        raise ValidationError("sweep needs a labeled feature file")
    train_idx, eval_idx = split(
        dataset.features, dataset.labels, sweep.split_fraction, sweep.split_seed
    )
    if len(eval_idx) == 0:
        raise UsageError("split fraction leaves no eval samples")

    grid = [(r, h, s) for r in ratios for h in heads for s in seeds]
    cells: list[dict | None] = [None] * len(grid)
    cell_dir = None
    if out_dir is not None:
        cell_dir = os.path.join(out_dir, "cells")
        os.makedirs(cell_dir, exist_ok=True)
        for i, (r, h, s) in enumerate(grid):
            path = os.path.join(cell_dir, _cell_filename(i, r, h, s))
            if os.path.exists(path):
                with open(path, "r", encoding="utf-8") as fh:
                    cells[i] = json.load(fh)

    pending = [i for i in range(len(grid)) if cells[i] is None]
    tasks = [
        (dataset, grid[i][0], grid[i][1], grid[i][2], sweep, train_idx, eval_idx)
        for i in pending
    ]
    if sweep.jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=sweep.jobs) as pool:
            results = list(pool.map(_cell_worker, tasks))
    else:
        results = [_cell_worker(t) for t in tasks]
    for i, cell in zip(pending, results):
        cells[i] = cell
        if cell_dir is not None:
            r, h, s = grid[i]
            path = os.path.join(cell_dir, _cell_filename(i, r, h, s))
            atomic_write_bytes(path, _dump_json(cell))

    result = SweepResult(ratios=ratios, heads=heads, seeds=seeds, cells=list(cells))
    result.aggregates = _aggregate(result)
    return result


def _aggregate(result: SweepResult) -> list[dict]:
    """Per (ratio, head): mean and population std over the seed cells."""
    out = []
    for ratio in result.ratios:
        for head in result.heads:
            picked = [
                c
                for c in result.cells
                if c["ratio"] == ratio and c["head"] == head
            ]
            ok = [c for c in picked if c["error"] is None]
            entry = {
                "ratio": ratio,
                "head": head,
                "n_seeds": len(picked),
                "n_failed": len(picked) - len(ok),
            }
            fields = {
                "accuracy": [c["metrics"]["accuracy"] for c in ok],
                "macro_f1": [c["metrics"]["macro_f1"] for c in ok],
                "mean_per_class": [c["metrics"]["mean_per_class"] for c in ok],
                "sve": [c["final_sve"] for c in ok],
                "lsvr": [c["final_lsvr"] for c in ok],
            }
            for name, values in fields.items():
                values = [v for v in values if v is not None]
                if values:
                    entry[f"{name}_mean"] = float(np.mean(values))
                    entry[f"{name}_std"] = float(np.std(values))
                else:
                    entry[f"{name}_mean"] = None
                    entry[f"{name}_std"] = None
            out.append(entry)
    return out


def _dump_json(obj) -> bytes:
    return (json.dumps(obj, indent=2, allow_nan=False) + "\n").encode("utf-8")


def sweep_report_dict(result: SweepResult) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "sweep",
        "grid": {"ratios": result.ratios, "heads": result.heads, "seeds": result.seeds},
        "cells": result.cells,
        "aggregates": result.aggregates,
    }


def emit_report(result: SweepResult, format: str = "json") -> bytes:
    if format == "json":
        return _dump_json(sweep_report_dict(result))
    if format == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(_CSV_COLUMNS)
        for cell in result.cells:
            if cell["error"] is not None:
                row = [cell["ratio"], cell["head"], cell["seed"], cell["error"]["kind"]]
                row += [""] * (len(_CSV_COLUMNS) - 4)
            else:
                cfg = cell["config"]
                row = [
                    cell["ratio"],
                    cell["head"],
                    cell["seed"],
                    "",
                    cell["metrics"]["accuracy"],
                    cell["metrics"]["macro_f1"],
                    cell["metrics"]["mean_per_class"],
                    cell["final_sve"],
                    cell["final_lsvr"],
                    cell["flips"],
                    cfg["epochs"],
                    cfg["batch_size"],
                    cfg["lr"],
                    cfg["weight_decay"],
                    cfg["schedule"],
                    cfg["lambda_mse"],
                    cfg["lambda_cov"],
                    cfg["lambda_svd"],
                ]
            writer.writerow(row)
        return buf.getvalue().encode("utf-8")
    raise UsageError(f"unknown report format {format!r}")


def train_report_dict(
    trained: TrainedHead,
    mset: MetricSet | None,
    data_summary: dict,
    extras: dict | None = None,
) -> dict:
    """Single-run report: full config snapshot, history, eval metrics, and
    the spectrum grouping of the final transformed features."""
    report = {
        "schema_version": SCHEMA_VERSION,
        "kind": "train",
        "head": {
            "kind": trained.spec.kind,
            "input_dim": trained.spec.input_dim,
            "num_classes": trained.spec.num_classes,
            "mlp_layers": trained.spec.mlp_layers,
            "activation": trained.spec.activation,
        },
        "config": trained.config.to_dict(),
        "data": data_summary,
        "final_sve": _num(trained.final_sve),
        "final_lsvr": _num(trained.final_lsvr),
        "metrics": mset.to_dict() if mset is not None else None,
        "history": history_to_dicts(trained),
    }
    if extras:
        report.update(extras)
    return report


def spectrum_report_dict(f, scope: str = "full_dataset") -> dict:
    rep = spectrum_report(f, scope=scope)
    return {"schema_version": SCHEMA_VERSION, "kind": "spectrum", **rep.to_dict()}
