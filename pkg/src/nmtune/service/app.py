"""FastAPI application wrapping the core library.

Domain errors map onto structured JSON bodies with a ``kind`` the CLI turns
into exit codes: usage -> 400/1, data -> 422/2, numeric -> 500/3. Report and
checkpoint files are written by the core writers (atomically), so results
are byte-identical to direct library calls.
"""

from __future__ import annotations

import json
import os

import numpy as np
from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__
from ..data_io import (
    MixtureSpec,
    NoiseSpec,
    atomic_write_bytes,
    inject_symmetric_noise,
    make_mixture,
    read_features,
    split,
    write_features,
)
from ..errors import NmtuneError, UsageError, ValidationError
from ..heads import HeadSpec
from ..metrics import metrics
from ..report import (
    SweepConfig,
    emit_report,
    run_sweep,
    spectrum_report_dict,
    sweep_report_dict,
    train_report_dict,
)
from ..rng import Rng, STREAM_SUBSAMPLE
from ..training import save_checkpoint, predict, train
from ..report import resolve_train_config
from . import schemas

_STATUS_BY_KIND = {"usage": 400, "data": 422, "numeric": 500}


def _dump(obj) -> bytes:
    return (json.dumps(obj, indent=2, allow_nan=False) + "\n").encode("utf-8")


def create_app() -> FastAPI:
    app = FastAPI(title="nmtune", version=__version__)

    @app.exception_handler(NmtuneError)
    async def _domain_error(_: Request, err: NmtuneError):
        return JSONResponse(
            status_code=_STATUS_BY_KIND[err.kind],
            content={"detail": {"kind": err.kind, "message": str(err)}},
        )

    @app.exception_handler(OSError)
    async def _os_error(_: Request, err: OSError):
        return JSONResponse(
            status_code=422,
            content={"detail": {"kind": "data", "message": str(err)}},
        )

    @app.get("/health", response_model=schemas.HealthResponse)
    def health():
        return schemas.HealthResponse(status="ok", version=__version__)

    @app.post("/analyze", response_model=schemas.AnalyzeResponse)
    def analyze(req: schemas.AnalyzeRequest):
        data = read_features(req.features)
        feats = data.features.astype(np.float64)
        scope = "full_dataset"
        if req.subsample is not None and req.subsample < data.m:
            rng = Rng(req.seed, STREAM_SUBSAMPLE)
            idx = np.array(sorted(rng.choose(data.m, req.subsample)))
            feats = feats[idx]
            scope = f"subsample:{req.subsample}"
        report = spectrum_report_dict(feats, scope=scope)
        if req.out:
            atomic_write_bytes(req.out, _dump(report))
            report["out"] = req.out
        return report

    @app.post("/train", response_model=schemas.TrainResponse)
    def train_head(req: schemas.TrainRequest):
        data = read_features(req.features)
        if data.labels is None:
            raise ValidationError("training needs a labeled feature file")
        kind = schemas.HEAD_ALIASES[req.head]
        sweep_cfg = SweepConfig(
            split_fraction=req.split_fraction,
            split_seed=req.split_seed,
            epochs=req.epochs,
            batch_size=req.batch,
            lr=req.lr,
            weight_decay=req.wd,
            lambda_mse=req.lambda_mse,
            lambda_cov=req.lambda_cov,
            lambda_svd=req.lambda_svd,
            mse_normalization=req.mse_normalization,
        )
        config = resolve_train_config(kind, req.seed, sweep_cfg)
        feats = data.features.astype(np.float64)
        labels = data.labels.astype(np.int64)
        train_idx, eval_idx = split(feats, labels, req.split_fraction, req.split_seed)
        spec = HeadSpec(kind=kind, input_dim=data.d, num_classes=data.num_classes)
        trained = train(spec, feats[train_idx], labels[train_idx], config)
        mset = None
        if len(eval_idx):
            pred = predict(trained, feats[eval_idx])
            mset = metrics(pred, labels[eval_idx], data.num_classes)
        summary = {
            "m": data.m,
            "d": data.d,
            "num_classes": data.num_classes,
            "train_rows": int(len(train_idx)),
            "eval_rows": int(len(eval_idx)),
        }
        report = train_report_dict(trained, mset, summary)
        report_path = checkpoint_path = None
        if req.out:
            os.makedirs(req.out, exist_ok=True)
            report_path = os.path.join(req.out, "train_report.json")
            checkpoint_path = os.path.join(req.out, "head.nmck")
            atomic_write_bytes(report_path, _dump(report))
            save_checkpoint(checkpoint_path, trained)
        return schemas.TrainResponse(
            report=report, report_path=report_path, checkpoint_path=checkpoint_path
        )

    @app.post("/sweep", response_model=schemas.SweepResponse)
    def sweep(req: schemas.SweepRequest):
        data = read_features(req.features)
        sweep_cfg = SweepConfig(
            split_fraction=req.split_fraction,
            split_seed=req.split_seed,
            epochs=req.epochs,
            batch_size=req.batch,
            lr=req.lr,
            weight_decay=req.wd,
            lambda_mse=req.lambda_mse,
            lambda_cov=req.lambda_cov,
            lambda_svd=req.lambda_svd,
            jobs=req.jobs,
        )
        heads = [schemas.HEAD_ALIASES[h] for h in req.heads]
        result = run_sweep(
            data, req.ratios, heads, req.seeds, sweep=sweep_cfg, out_dir=req.out
        )
        report = sweep_report_dict(result)
        report_path = csv_path = None
        if req.out:
            os.makedirs(req.out, exist_ok=True)
            report_path = os.path.join(req.out, "sweep_report.json")
            csv_path = os.path.join(req.out, "sweep_report.csv")
            atomic_write_bytes(report_path, emit_report(result, "json"))
            atomic_write_bytes(csv_path, emit_report(result, "csv"))
        return schemas.SweepResponse(
            report=report, report_path=report_path, csv_path=csv_path
        )

    @app.post("/synth", response_model=schemas.SynthResponse)
    def synth(req: schemas.SynthRequest):
        spec = MixtureSpec(
            num_classes=req.classes,
            dim=req.dim,
            per_class=req.per_class,
            center_scale=req.center_scale,
            noise_sigma=req.sigma,
            seed=req.seed,
        )
        feats, labels = make_mixture(spec)
        write_features(req.out, feats, labels, num_classes=req.classes)
        return schemas.SynthResponse(
            out=req.out, m=feats.shape[0], d=feats.shape[1], num_classes=req.classes
        )

    @app.post("/inject-noise", response_model=schemas.InjectNoiseResponse)
    def inject_noise(req: schemas.InjectNoiseRequest):
        data = read_features(req.features)
        if data.labels is None:
            raise ValidationError("noise injection needs a labeled feature file")
        noisy, mask = inject_symmetric_noise(
            data.labels, data.num_classes, NoiseSpec(ratio=req.ratio, seed=req.seed)
        )
        write_features(req.out, data.features, noisy, num_classes=data.num_classes)
        mask_path = req.out + ".flips.json"
        sidecar = {
            "schema_version": 1,
            "kind": "flip_mask",
            "source": os.path.basename(req.features),
            "ratio": req.ratio,
            "seed": req.seed,
            "flips": int(mask.sum()),
            "flipped_indices": [int(i) for i in np.flatnonzero(mask)],
        }
        atomic_write_bytes(mask_path, _dump(sidecar))
        return schemas.InjectNoiseResponse(
            out=req.out, mask_path=mask_path, flips=int(mask.sum()), m=data.m
        )

    @app.post("/validate", response_model=schemas.ValidateResponse)
    def validate(req: schemas.ValidateRequest):
        data = read_features(req.features)
        return schemas.ValidateResponse(
            valid=True,
            m=data.m,
            d=data.d,
            num_classes=data.num_classes,
            has_labels=data.has_labels,
        )

    return app
