import json

import numpy as np
import pytest

from nmtune import read_features, spectrum_report, write_features
from nmtune.cli import main
from nmtune.data_io import NoiseSpec, inject_symmetric_noise


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


@pytest.fixture()
def mixture_file(tmp_path, mixture):
    feats, labels = mixture
    idx = np.concatenate([np.flatnonzero(labels == c)[:40] for c in range(3)])
    path = str(tmp_path / "mix.nmft")
    write_features(path, feats[idx], labels[idx], num_classes=3)
    return path


class TestAnalyze:
    def test_matches_library_call(self, capsys, mixture_file):
        code, out, _ = run_cli(capsys, "analyze", "--features", mixture_file)
        assert code == 0
        body = json.loads(out)
        data = read_features(mixture_file)
        rep = spectrum_report(data.features.astype(np.float64))
        assert body["sve"] == rep.sve
        assert body["lsvr"] == rep.lsvr
        assert body["effective_mass"] == rep.effective_mass

    def test_identity_fixture(self, capsys, tmp_path):
        path = str(tmp_path / "eye.nmft")
        write_features(path, np.eye(4, dtype=np.float32))
        code, out, _ = run_cli(capsys, "analyze", "--features", path)
        assert code == 0
        body = json.loads(out)
        assert body["sve"] == pytest.approx(np.log(4), abs=1e-12)
        assert body["lsvr"] == pytest.approx(np.log(4), abs=1e-12)

    def test_rank_one_fixture(self, capsys, tmp_path):
        path = str(tmp_path / "rank1.nmft")
        write_features(path, np.outer([1.0, 2.0, 3.0], [1.0, 0.5]).astype(np.float32))
        code, out, _ = run_cli(capsys, "analyze", "--features", path)
        assert code == 0
        body = json.loads(out)
        assert body["sve"] == pytest.approx(0.0, abs=1e-7)
        assert body["lsvr"] == pytest.approx(0.0, abs=1e-7)

    def test_degenerate_spectrum_exit_3(self, capsys, tmp_path):
        path = str(tmp_path / "zero.nmft")
        write_features(path, np.zeros((3, 2), dtype=np.float32))
        code, _, err = run_cli(capsys, "analyze", "--features", path)
        assert code == 3
        assert err.startswith("error[numeric]")


class TestTrain:
    def test_default_configs_in_report(self, capsys, mixture_file):
        code, out, _ = run_cli(capsys, "train", "--features", mixture_file, "--head", "lp", "--epochs", "2")
        assert code == 0
        cfg = json.loads(out)["report"]["config"]
        assert cfg["lr"] == 0.1 and cfg["weight_decay"] == 0.0

        code, out, _ = run_cli(capsys, "train", "--features", mixture_file, "--head", "nmtune", "--epochs", "2")
        assert code == 0
        cfg = json.loads(out)["report"]["config"]
        assert cfg["lr"] == 0.001 and cfg["weight_decay"] == 1e-4
        assert cfg["lambda_mse"] == cfg["lambda_cov"] == cfg["lambda_svd"] == 0.01

    def test_zero_weight_nmtune_equals_mlp(self, capsys, mixture_file):
        code, out_nm, _ = run_cli(
            capsys,
            "train", "--features", mixture_file, "--head", "nmtune", "--epochs", "3",
            "--lambda-mse", "0", "--lambda-cov", "0", "--lambda-svd", "0",
        )
        assert code == 0
        code, out_mlp, _ = run_cli(
            capsys, "train", "--features", mixture_file, "--head", "mlp", "--epochs", "3"
        )
        assert code == 0
        nm = json.loads(out_nm)["report"]
        ml = json.loads(out_mlp)["report"]
        assert nm["metrics"] == ml["metrics"]
        assert nm["final_sve"] == ml["final_sve"]
        assert [h["ce"] for h in nm["history"]] == [h["ce"] for h in ml["history"]]

    def test_unlabeled_file_exit_2(self, capsys, tmp_path):
        path = str(tmp_path / "plain.nmft")
        write_features(path, np.ones((6, 3), dtype=np.float32))
        code, _, err = run_cli(capsys, "train", "--features", path, "--head", "lp")
        assert code == 2
        assert err.startswith("error[data]")


class TestSweep:
    def test_cell_count(self, capsys, mixture_file):
        code, out, _ = run_cli(
            capsys,
            "sweep", "--features", mixture_file, "--ratios", "0,0.05,0.1,0.2,0.3",
            "--heads", "lp", "--seeds", "1", "--epochs", "2",
        )
        assert code == 0
        body = json.loads(out)
        assert len(body["report"]["cells"]) == 5 * 1 * 1

    def test_single_cell_matches_train(self, capsys, mixture_file):
        code, sweep_out, _ = run_cli(
            capsys,
            "sweep", "--features", mixture_file, "--ratios", "0", "--heads", "lp",
            "--seeds", "1", "--epochs", "2",
        )
        assert code == 0
        code, train_out, _ = run_cli(
            capsys, "train", "--features", mixture_file, "--head", "lp", "--epochs", "2"
        )
        assert code == 0
        cell = json.loads(sweep_out)["report"]["cells"][0]
        report = json.loads(train_out)["report"]
        assert cell["metrics"]["accuracy"] == report["metrics"]["accuracy"]
        assert cell["final_sve"] == report["final_sve"]

    def test_malformed_grid_exit_1(self, capsys, mixture_file):
        code, _, err = run_cli(
            capsys, "sweep", "--features", mixture_file, "--ratios", "0,abc", "--heads", "lp"
        )
        assert code == 1
        assert "error[usage]" in err

    def test_byte_identical_reports(self, capsys, mixture_file, tmp_path):
        out1 = tmp_path / "s1"
        out2 = tmp_path / "s2"
        for out in (out1, out2):
            code, _, _ = run_cli(
                capsys,
                "sweep", "--features", mixture_file, "--ratios", "0,0.2",
                "--heads", "lp,nmtune", "--seeds", "2", "--epochs", "2", "--out", str(out),
            )
            assert code == 0
        assert (out1 / "sweep_report.json").read_bytes() == (out2 / "sweep_report.json").read_bytes()
        assert (out1 / "sweep_report.csv").read_bytes() == (out2 / "sweep_report.csv").read_bytes()


class TestSynthAndNoise:
    def test_synth_deterministic_bytes(self, capsys, tmp_path):
        a = str(tmp_path / "a.nmft")
        b = str(tmp_path / "b.nmft")
        for path in (a, b):
            code, _, _ = run_cli(
                capsys,
                "synth", "--classes", "3", "--dim", "16", "--per-class", "200",
                "--sigma", "1.0", "--seed", "0", "--out", path,
            )
            assert code == 0
        assert open(a, "rb").read() == open(b, "rb").read()

    def test_synth_matches_library_bytes(self, capsys, tmp_path):
        from nmtune import MixtureSpec, make_mixture, write_features as write

        cli_path = str(tmp_path / "cli.nmft")
        code, _, _ = run_cli(
            capsys,
            "synth", "--classes", "4", "--dim", "8", "--per-class", "25",
            "--center-scale", "3.0", "--sigma", "0.5", "--seed", "11", "--out", cli_path,
        )
        assert code == 0
        feats, labels = make_mixture(
            MixtureSpec(num_classes=4, dim=8, per_class=25, center_scale=3.0, noise_sigma=0.5, seed=11)
        )
        lib_path = str(tmp_path / "lib.nmft")
        write(lib_path, feats, labels, num_classes=4)
        assert open(cli_path, "rb").read() == open(lib_path, "rb").read()

    def test_single_class_noise_impossible_downstream(self, capsys, tmp_path):
        path = str(tmp_path / "one.nmft")
        code, _, _ = run_cli(
            capsys,
            "synth", "--classes", "1", "--dim", "4", "--per-class", "10",
            "--sigma", "1.0", "--seed", "0", "--out", path,
        )
        assert code == 0
        code, _, err = run_cli(
            capsys,
            "inject-noise", "--features", path, "--ratio", "0.3", "--seed", "0",
            "--out", str(tmp_path / "noisy.nmft"),
        )
        assert code == 2
        assert "error[data]" in err

    def test_synth_then_validate_and_train(self, capsys, tmp_path):
        path = str(tmp_path / "mix.nmft")
        run_cli(
            capsys,
            "synth", "--classes", "3", "--dim", "16", "--per-class", "50",
            "--sigma", "1.0", "--seed", "0", "--out", path,
        )
        code, _, _ = run_cli(capsys, "validate", "--features", path)
        assert code == 0
        code, out, _ = run_cli(capsys, "train", "--features", path, "--head", "lp", "--epochs", "5")
        assert code == 0

    def test_ratio_zero_keeps_payload(self, capsys, tmp_path, mixture_file):
        out = str(tmp_path / "noisy.nmft")
        code, _, _ = run_cli(
            capsys, "inject-noise", "--features", mixture_file, "--ratio", "0", "--seed", "1", "--out", out
        )
        assert code == 0
        assert open(out, "rb").read() == open(mixture_file, "rb").read()

    def test_flip_count_via_sidecar(self, capsys, tmp_path):
        src = str(tmp_path / "big.nmft")
        rng = np.random.default_rng(0)
        write_features(src, rng.normal(size=(1000, 4)).astype(np.float32), rng.integers(0, 10, 1000), 10)
        out = str(tmp_path / "big_noisy.nmft")
        code, body, _ = run_cli(
            capsys, "inject-noise", "--features", src, "--ratio", "0.2", "--seed", "7", "--out", out
        )
        assert code == 0
        assert json.loads(body)["flips"] == 200
        sidecar = json.loads(open(out + ".flips.json").read())
        assert len(sidecar["flipped_indices"]) == 200
        noisy = read_features(out)
        src_data = read_features(src)
        expected, _ = inject_symmetric_noise(src_data.labels, 10, NoiseSpec(ratio=0.2, seed=7))
        assert np.array_equal(noisy.labels, expected)

    def test_bad_ratio_exit_1(self, capsys, mixture_file, tmp_path):
        code, _, err = run_cli(
            capsys,
            "inject-noise", "--features", mixture_file, "--ratio", "1.5", "--seed", "0",
            "--out", str(tmp_path / "x.nmft"),
        )
        assert code == 1


class TestValidateAndExitCodes:
    def test_validate_good_file(self, capsys, mixture_file):
        code, out, _ = run_cli(capsys, "validate", "--features", mixture_file)
        assert code == 0
        assert json.loads(out)["valid"] is True

    def test_truncated_file_exit_2(self, capsys, tmp_path, mixture_file):
        payload = open(mixture_file, "rb").read()
        broken = tmp_path / "trunc.nmft"
        broken.write_bytes(payload[:-7])
        code, _, err = run_cli(capsys, "validate", "--features", str(broken))
        assert code == 2
        assert "expected" in err and "bytes" in err

    def test_bad_magic_exit_2(self, capsys, tmp_path):
        broken = tmp_path / "magic.nmft"
        broken.write_bytes(b"ZZZZ" + bytes(60))
        code, _, err = run_cli(capsys, "validate", "--features", str(broken))
        assert code == 2

    def test_unknown_subcommand_exit_1(self, capsys):
        code, _, _ = run_cli(capsys, "frobnicate")
        assert code == 1

    @pytest.mark.parametrize(
        "argv,expected",
        [
            (("validate", "--features", "/missing.nmft"), 2),
            (("analyze", "--features", "/missing.nmft"), 2),
            (("train", "--features", "/missing.nmft", "--head", "lp"), 2),
            (("sweep", "--features", "/missing.nmft", "--ratios", "0", "--heads", "lp"), 2),
        ],
    )
    def test_exit_code_table(self, capsys, argv, expected):
        code, _, err = run_cli(capsys, *argv)
        assert code == expected
        assert err.count("\n") == 1  # single-line error on stderr
