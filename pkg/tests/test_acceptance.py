"""Acceptance suite: one test per criterion, each printing a PASS line.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
lines as they complete.
"""

import math
import time

import numpy as np
import pytest
from scipy import stats

from nmtune import (
    HeadSpec,
    LossWeights,
    NoiseSpec,
    SingularSpectrum,
    ce_loss_grad,
    cov_loss_grad,
    default_config,
    finite_diff_check,
    inject_symmetric_noise,
    lsvr,
    mse_consistency_loss_grad,
    read_features,
    svd,
    svd_ratio_loss_grad,
    sve,
    train,
    write_features,
)
from nmtune.cli import main as cli_main
from nmtune.data_io import decode_features, encode_features

from conftest import E2E_BATCH, E2E_EPOCHS
from oracles import singular_values_by_gram


def _report(name: str, detail: str = ""):
    suffix = f" ({detail})" if detail else ""
    print(f"ACCEPTANCE {name}: PASS{suffix}")


def test_gradient_fidelity():
    started = time.perf_counter()
    h = 1e-5
    worst = 0.0
    for seed in range(20):
        rng = np.random.default_rng(seed)

        logits = rng.normal(size=(8, 5))
        labels = rng.integers(0, 5, size=8)
        worst = max(worst, finite_diff_check(lambda x: ce_loss_grad(x, labels), logits, h))

        f = rng.normal(size=(7, 6))
        z = rng.normal(size=(7, 6))
        worst = max(worst, finite_diff_check(lambda x: mse_consistency_loss_grad(f, x), z, h))

        z2 = rng.normal(size=(8, 5))
        worst = max(worst, finite_diff_check(lambda x: cov_loss_grad(x), z2, h))

        z3 = rng.normal(size=(8, 6))
        worst = max(worst, finite_diff_check(lambda x: svd_ratio_loss_grad(x), z3, h))
    elapsed = time.perf_counter() - started
    assert worst <= 1e-5
    assert elapsed < 10.0
    _report("gradient-fidelity", f"max rel err {worst:.2e}, {elapsed:.1f}s")


def test_svd_correctness():
    worst_recon = 0.0
    worst_sigma = 0.0
    for seed in range(100):
        rng = np.random.default_rng(seed)
        m = int(rng.integers(1, 33))
        n = int(rng.integers(1, 33))
        f = rng.normal(size=(m, n))
        res = svd(f)
        approx = res.u.data @ np.diag(res.sigma) @ res.v.data.T
        recon = np.linalg.norm(approx - f) / max(np.linalg.norm(f), 1e-300)
        worst_recon = max(worst_recon, recon)
        oracle = singular_values_by_gram(f)
        worst_sigma = max(worst_sigma, float(np.abs(res.sigma - oracle).max()))
    assert worst_recon <= 1e-8
    assert worst_sigma <= 1e-10
    _report("svd-correctness", f"recon {worst_recon:.2e}, sigma err {worst_sigma:.2e}")


def test_metric_exactness():
    s31 = SingularSpectrum(np.array([3.0, 1.0]), ambient_dim=2, sample_count=4)
    assert sve(s31) == pytest.approx(0.562335, abs=1e-6)
    assert lsvr(s31) == pytest.approx(0.287682, abs=1e-6)
    for d in (2, 7, 16, 100):
        uniform = SingularSpectrum(np.full(d, 2.5), ambient_dim=d, sample_count=d)
        assert sve(uniform) == pytest.approx(math.log(d), abs=1e-12)
        assert lsvr(uniform) == pytest.approx(math.log(d), abs=1e-12)
    _report("metric-exactness")


def test_eq6_reduction_bitwise(mixture_split):
    feats, labels, train_idx, _ = mixture_split
    from dataclasses import replace

    nm_cfg = replace(
        default_config("nmtune"), epochs=6, batch_size=64, loss_weights=LossWeights(0, 0, 0)
    )
    mlp_cfg = replace(default_config("mlp"), epochs=6, batch_size=64)
    nm = train(HeadSpec("nmtune", 16, 3), feats[train_idx], labels[train_idx], nm_cfg)
    ml = train(HeadSpec("mlp", 16, 3), feats[train_idx], labels[train_idx], mlp_cfg)
    assert nm.params.keys() == ml.params.keys()
    for key in nm.params:
        assert np.array_equal(nm.params[key], ml.params[key]), key
    _report("eq6-reduction", "parameter trajectories bitwise identical")


def test_protocol_fidelity():
    lp = default_config("linear_probe")
    assert (lp.lr, lp.weight_decay, lp.epochs, lp.schedule) == (0.1, 0.0, 30, "cosine")
    assert lp.loss_weights == LossWeights(0.0, 0.0, 0.0)
    for kind in ("mlp", "nmtune"):
        cfg = default_config(kind)
        assert (cfg.lr, cfg.weight_decay, cfg.epochs, cfg.schedule) == (0.001, 1e-4, 30, "cosine")
    assert default_config("nmtune").loss_weights == LossWeights(0.01, 0.01, 0.01)
    assert default_config("mlp").loss_weights == LossWeights(0.0, 0.0, 0.0)
    spec = HeadSpec("nmtune", input_dim=16, num_classes=3)
    assert spec.mlp_layers == 2 and spec.activation == "relu"
    _report("protocol-fidelity")


def test_synthetic_end_to_end(mixture_split, e2e_runs):
    feats, labels, train_idx, eval_idx = mixture_split
    # (a) linear probe vs the independent multinomial-logistic oracle
    from sklearn.linear_model import LogisticRegression

    oracle = LogisticRegression(max_iter=2000).fit(feats[train_idx], labels[train_idx])
    oracle_acc = oracle.score(feats[eval_idx], labels[eval_idx])
    assert oracle_acc >= 0.95, "oracle does not certify separability"
    lp_acc = e2e_runs["lp"]["eval"].accuracy
    assert lp_acc >= 0.95

    # (b) the regularized head stays within one point of the probe
    nm_acc = e2e_runs["nmtune"]["eval"].accuracy
    assert nm_acc >= lp_acc - 0.01

    # (c) regularization flattens the spectrum relative to plain MLP tuning
    nm_sve = e2e_runs["nmtune"]["trained"].final_sve
    mlp_sve = e2e_runs["mlp"]["trained"].final_sve
    assert nm_sve > mlp_sve

    # (d) the dominant-singular-value term raises sigma_1 / sum(sigma)
    def top_ratio(z):
        sigma = SingularSpectrum.from_matrix(z).sigma
        return float(sigma[0] / sigma.sum())

    with_term = top_ratio(e2e_runs["nmtune"]["z_full"])
    without = top_ratio(e2e_runs["nmtune_nosvd"]["z_full"])
    assert with_term >= without

    assert e2e_runs["elapsed"] < 120.0
    _report(
        "synthetic-end-to-end",
        f"lp {lp_acc:.4f}, nmtune {nm_acc:.4f}, sve {nm_sve:.3f}>{mlp_sve:.3f}, "
        f"top-ratio {with_term:.4f}>={without:.4f}, {e2e_runs['elapsed']:.0f}s "
        f"(epochs={E2E_EPOCHS}, batch={E2E_BATCH})",
    )


def test_noise_injection():
    rng = np.random.default_rng(0)
    labels = rng.integers(0, 10, size=1000)
    noisy, mask = inject_symmetric_noise(labels, 10, NoiseSpec(ratio=0.2, seed=7))
    assert int(mask.sum()) == 200
    assert np.all(noisy[mask] != labels[mask])

    n, c = 100_000, 6
    zeros = np.zeros(n, dtype=int)
    flipped, full_mask = inject_symmetric_noise(zeros, c, NoiseSpec(ratio=1.0, seed=5))
    assert int(full_mask.sum()) == n
    counts = np.bincount(flipped, minlength=c)[1:]
    _, p = stats.chisquare(counts)
    assert p > 0.01
    _report("noise-injection", f"chi-square p = {p:.3f}")


def test_format_roundtrip_and_rejection(tmp_path, capsys):
    for seed in range(100):
        rng = np.random.default_rng(seed)
        m = int(rng.integers(1, 50))
        d = int(rng.integers(1, 16))
        feats = rng.normal(size=(m, d)).astype(np.float32)
        if seed % 2:
            c = int(rng.integers(2, 7))
            payload = encode_features(feats, rng.integers(0, c, size=m), c)
        else:
            payload = encode_features(feats)
        parsed = decode_features(payload)
        assert encode_features(parsed.features, parsed.labels, parsed.num_classes) == payload

    good = tmp_path / "good.nmft"
    write_features(good, np.ones((4, 3), dtype=np.float32), [0, 1, 0, 1], 2)
    truncated = tmp_path / "trunc.nmft"
    truncated.write_bytes(good.read_bytes()[:-9])
    bad_magic = tmp_path / "magic.nmft"
    bad_magic.write_bytes(b"ZZZZ" + good.read_bytes()[4:])
    assert cli_main(["validate", "--features", str(good)]) == 0
    assert cli_main(["validate", "--features", str(truncated)]) == 2
    assert cli_main(["validate", "--features", str(bad_magic)]) == 2
    capsys.readouterr()
    _report("format")


def test_sweep_determinism(tmp_path, capsys, mixture):
    feats, labels = mixture
    source = tmp_path / "mix.nmft"
    write_features(source, feats[:240], labels[:240], num_classes=3)
    flags = [
        "sweep",
        "--features", str(source),
        "--ratios", "0,0.2",
        "--heads", "lp,nmtune",
        "--seeds", "2",
        "--epochs", "2",
    ]
    out1 = tmp_path / "run1"
    out2 = tmp_path / "run2"
    assert cli_main(flags + ["--out", str(out1)]) == 0
    assert cli_main(flags + ["--out", str(out2)]) == 0
    capsys.readouterr()
    json1 = (out1 / "sweep_report.json").read_bytes()
    json2 = (out2 / "sweep_report.json").read_bytes()
    csv1 = (out1 / "sweep_report.csv").read_bytes()
    csv2 = (out2 / "sweep_report.csv").read_bytes()
    assert json1 == json2
    assert csv1 == csv2
    _report("determinism", f"{len(json1)} report bytes identical")
