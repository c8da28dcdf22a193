import json

import numpy as np
import pytest
from click.testing import CliRunner

from uis import AtomPrior, SignalVector
from uis.cli import EXIT_NONCONVERGED, main
from uis.imageio import read_image, read_raw, write_image, write_raw

from synthetic import smooth_atom_images


@pytest.fixture()
def runner():
    return CliRunner()


@pytest.fixture()
def oracle_setup(tmp_path):
    """Small atom-prior denoiser JSON plus a matching input image on disk."""
    atoms = smooth_atom_images(8, 32, seed=7)
    prior = AtomPrior(atoms)
    den_path = tmp_path / "denoiser.json"
    den_path.write_text(json.dumps({"kind": "oracle", "prior": prior.descriptor()}))
    x = SignalVector(atoms[2], (32, 32, 1))
    img_path = tmp_path / "input.uisr"
    write_raw(img_path, x)
    return den_path, img_path, x


def run_cli(runner, args):
    result = runner.invoke(main, [str(a) for a in args], catch_exceptions=False)
    return result


class TestImageIO:
    def test_raw_roundtrip_is_float32_exact(self, tmp_path):
        rng = np.random.default_rng(0)
        x = SignalVector(rng.uniform(-1, 2, 24).astype(np.float32).astype(np.float64), (4, 6, 1))
        path = tmp_path / "x.uisr"
        write_raw(path, x)
        again = read_raw(path)
        assert again.shape == x.shape
        assert np.array_equal(again.data, x.data)

    def test_png_roundtrip_quantizes(self, tmp_path):
        rng = np.random.default_rng(1)
        x = SignalVector(rng.uniform(0, 1, 64), (8, 8, 1))
        path = tmp_path / "x.png"
        write_image(path, x)
        again = read_image(path)
        assert again.shape == x.shape
        assert np.abs(again.data - x.data).max() <= 0.5 / 255 + 1e-12

    def test_png_color_roundtrip(self, tmp_path):
        rng = np.random.default_rng(2)
        x = SignalVector(rng.uniform(0, 1, 3 * 16), (4, 4, 3))
        path = tmp_path / "c.png"
        write_image(path, x)
        assert read_image(path).shape == (4, 4, 3)


class TestInverseTasks:
    def test_cs_constraint_satisfied_end_to_end(self, runner, tmp_path, oracle_setup):
        den, img, x = oracle_setup
        out = tmp_path / "out"
        result = run_cli(
            runner,
            ["cs", "--input", img, "--denoiser", den, "--fraction", "0.1", "--seed", "5", "--out", out],
        )
        assert result.exit_code == 0, result.output
        metrics = json.loads((out / "metrics.json").read_text())
        sample = metrics["samples"][0]
        assert sample["converged"]
        assert sample["constraint_rms"] <= 2 * 0.01
        assert (out / "sample_000.png").exists()
        assert (out / "direct.uisr").exists()
        assert (out / "trace_000.csv").exists()

    def test_inpaint_writes_direct_and_metrics(self, runner, tmp_path, oracle_setup):
        den, img, x = oracle_setup
        out = tmp_path / "out"
        result = run_cli(
            runner,
            ["inpaint", "--input", img, "--denoiser", den, "--rect", "8,8,12,12", "--seed", "3", "--out", out],
        )
        assert result.exit_code == 0, result.output
        metrics = json.loads((out / "metrics.json").read_text())
        assert metrics["samples"][0]["psnr"] > 10.0
        direct = read_raw(out / "direct.uisr")
        region = direct.planes()[0][8:20, 8:20]
        assert np.allclose(region, 0.0)

    def test_sr_writes_lowres_preview(self, runner, tmp_path, oracle_setup):
        den, img, x = oracle_setup
        out = tmp_path / "out"
        result = run_cli(runner, ["sr", "--input", img, "--denoiser", den, "--block", "4", "--out", out])
        assert result.exit_code == 0, result.output
        low = read_image(out / "lowres.png")
        assert low.shape == (8, 8, 1)

    def test_trace_csv_byte_identical_across_runs(self, runner, tmp_path, oracle_setup):
        den, img, _ = oracle_setup
        blobs = []
        for name in ("a", "b"):
            out = tmp_path / name
            result = run_cli(
                runner,
                ["pixels", "--input", img, "--denoiser", den, "--fraction", "0.2", "--seed", "11", "--out", out],
            )
            assert result.exit_code == 0, result.output
            blobs.append((out / "trace_000.csv").read_bytes())
        assert blobs[0] == blobs[1]

    def test_num_samples_derives_seeds(self, runner, tmp_path, oracle_setup):
        den, img, _ = oracle_setup
        out = tmp_path / "out"
        result = run_cli(
            runner,
            ["pixels", "--input", img, "--denoiser", den, "--num-samples", "2", "--seed", "4", "--out", out],
        )
        assert result.exit_code == 0, result.output
        metrics = json.loads((out / "metrics.json").read_text())
        seeds = [s["seed"] for s in metrics["samples"]]
        assert seeds == [4, 5]
        a = read_raw(out / "sample_000.uisr")
        b = read_raw(out / "sample_001.uisr")
        assert not np.array_equal(a.data, b.data)

    def test_missing_input_is_usage_error(self, runner, tmp_path):
        result = runner.invoke(main, ["cs", "--input", str(tmp_path / "nope.uisr")])
        assert result.exit_code == 2


class TestSampleTask:
    def test_identity_denoiser_outputs_initial_draw(self, runner, tmp_path):
        out = tmp_path / "out"
        result = run_cli(
            runner,
            ["sample", "--denoiser", "identity", "--shape", "6,6", "--seed", "2", "--out", out],
        )
        assert result.exit_code == 0, result.output
        metrics = json.loads((out / "metrics.json").read_text())
        assert metrics["samples"][0]["iterations"] == 1
        from uis import RngStream

        y0 = 0.5 * np.ones(36) + 1.0 * RngStream(2).standard_normal(36)
        written = read_raw(out / "sample_000.uisr")
        assert np.abs(written.data - y0).max() < 1e-6  # float32 file precision

    def test_low_rank_unsatisfied_constraint_exits_nonconverged(self, runner, tmp_path):
        # rank-1 measurement on an 8x8 identity-denoiser run: the sigma_t
        # stopping rule fires while the per-measurement residual is still
        # ~sqrt(N)*sigmaL, so the run must report non-convergence
        img = tmp_path / "flat.uisr"
        write_raw(img, SignalVector(np.full(64, 0.25), (8, 8, 1)))
        out = tmp_path / "out"
        result = runner.invoke(
            main,
            ["cs", "--input", str(img), "--denoiser", "identity", "--fraction", "0.016",
             "--beta", "1.0", "--seed", "6", "--out", str(out)],
            catch_exceptions=False,
        )
        assert result.exit_code == EXIT_NONCONVERGED
        metrics = json.loads((out / "metrics.json").read_text())
        sample = metrics["samples"][0]
        assert sample["converged"] is True
        assert sample["constraint_satisfied"] is False
        assert sample["constraint_rms"] > 2 * 0.01

    def test_nonconvergence_exit_code(self, runner, tmp_path, oracle_setup):
        den, img, _ = oracle_setup
        out = tmp_path / "out"
        result = run_cli(
            runner,
            ["pixels", "--input", img, "--denoiser", den, "--max-iters", "3", "--out", out],
        )
        assert result.exit_code == EXIT_NONCONVERGED
        assert (out / "metrics.json").exists()  # artifacts written regardless


class TestRunConfig:
    def test_config_file_reproduces_flags(self, runner, tmp_path, oracle_setup):
        den, img, _ = oracle_setup
        out1, out2 = tmp_path / "o1", tmp_path / "o2"
        cfg = {
            "task": "cs",
            "params": {"sigma0": 1.0, "sigmaL": 0.01, "h0": 0.01, "beta": 0.01, "seed": 9},
            "denoiser": json.loads(den.read_text()),
            "input": str(img),
            "task_options": {"fraction": 0.1},
            "output_dir": str(out1),
        }
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps(cfg))
        r1 = run_cli(runner, ["run", "--config", cfg_path])
        assert r1.exit_code == 0, r1.output
        r2 = run_cli(
            runner,
            ["cs", "--input", img, "--denoiser", den, "--fraction", "0.1", "--seed", "9",
             "--beta", "0.01", "--out", out2],
        )
        assert r2.exit_code == 0, r2.output
        assert (out1 / "trace_000.csv").read_bytes() == (out2 / "trace_000.csv").read_bytes()


class TestDemo2d:
    def test_demo_runs_and_summarizes(self, runner, tmp_path):
        out = tmp_path / "demo"
        result = run_cli(runner, ["demo2d", "--count", "12", "--seed", "1", "--out", out])
        assert result.exit_code == 0, result.output
        summary = json.loads((out / "summary.json").read_text())
        assert summary["count"] == 12
        assert summary["max_distance_to_curve"] <= 0.03
        lines = (out / "trajectories.csv").read_text().strip().splitlines()
        assert lines[0] == "chain,t,x,y"
        assert len(lines) > 12


class TestDiagnose:
    def test_reports_written(self, runner, tmp_path, oracle_setup):
        den, _, _ = oracle_setup
        out = tmp_path / "diag"
        result = run_cli(
            runner,
            ["diagnose", "--denoiser", den, "--betas", "1.0,0.5", "--seed", "3", "--out", out],
        )
        assert result.exit_code == 0, result.output
        reports = json.loads((out / "convergence.json").read_text())
        assert [r["beta"] for r in reports] == [1.0, 0.5]
        assert reports[1]["iterations"] >= reports[0]["iterations"]
        csv_text = (out / "convergence.csv").read_text()
        assert csv_text.startswith("beta,iterations,mean_observed_ratio")
