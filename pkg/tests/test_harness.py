import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from xebspoof.harness.config import (
    ConfigError,
    ExperimentConfig,
    config_hash,
    load_config,
    save_config,
)
from xebspoof.harness.manifest import load_manifest
from xebspoof.harness.plotdata import emit_plotdata
from xebspoof.harness.recipes import (
    ResourceCapError,
    build_model,
    reproduction_config,
    run_bayes,
    run_fs_scale,
    run_spoof,
    run_theory_checks,
)


def small_gbs_config(**overrides):
    base = dict(
        name="unit", seed=321, family="gbs", modes=6, mean_photons=2.0,
        sectors=(2,), rates=(1, 8), n_samples=200, normalize=True,
        xe_variants=("log", "linear"),
    )
    base.update(overrides)
    return ExperimentConfig(**base)


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


class TestConfig:
    def test_round_trip_identity(self, tmp_path):
        config = small_gbs_config()
        path = tmp_path / "cfg.json"
        save_config(config, path)
        loaded = load_config(path)
        assert loaded == config
        save_config(loaded, path)
        assert load_config(path) == loaded

    def test_hash_is_stable_and_canonical(self):
        a = small_gbs_config()
        b = ExperimentConfig.from_dict(a.to_dict())
        assert config_hash(a) == config_hash(b)
        assert config_hash(a) != config_hash(small_gbs_config(seed=322))

    def test_unknown_keys_rejected(self):
        with pytest.raises(ConfigError, match="unknown config keys"):
            ExperimentConfig.from_dict({"name": "x", "seed": 1, "family": "fbs",
                                        "modes": 4, "particles": 2, "bogus": 1})

    def test_unresolvable_names_rejected(self):
        with pytest.raises(ConfigError, match="sampler"):
            small_gbs_config(sampler="nope")
        with pytest.raises(ConfigError, match="indicator"):
            small_gbs_config(indicator="nope")

    def test_family_requirements(self):
        with pytest.raises(ConfigError):
            ExperimentConfig(name="x", seed=1, family="fbs", modes=4)
        with pytest.raises(ConfigError):
            ExperimentConfig(name="x", seed=1, family="gbs", modes=4)

    def test_parse_error_carries_line(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text('{\n  "name": oops\n}')
        with pytest.raises(ConfigError, match="line 2"):
            load_config(path)


class TestBuildModel:
    def test_gbs_mean_photons(self):
        model = build_model(small_gbs_config())
        assert model.mean_photons == pytest.approx(2.0)

    def test_deterministic_circuit(self):
        a = build_model(small_gbs_config())
        b = build_model(small_gbs_config())
        np.testing.assert_array_equal(a.interferometer.matrix, b.interferometer.matrix)


class TestRunSpoof:
    def test_outputs_and_manifest(self, tmp_path):
        config = small_gbs_config()
        manifest = run_spoof(config, tmp_path)
        assert (tmp_path / "manifest.json").exists()
        assert (tmp_path / "xe_report.csv").exists()
        for name in manifest.outputs:
            assert (tmp_path / name).exists()
        rows = read_csv(tmp_path / "xe_report.csv")
        sources = {r["source"] for r in rows}
        assert sources == {"uniform", "ideal-exact", "spoofer"}
        variants = {r["variant"] for r in rows}
        assert variants == {"log", "linear"}

    def test_rerun_from_manifest_is_byte_identical(self, tmp_path):
        config = small_gbs_config()
        first = tmp_path / "first"
        second = tmp_path / "second"
        manifest = run_spoof(config, first)
        replay = load_config(first / "manifest.json")
        run_spoof(replay, second)
        for name in manifest.outputs:
            assert (first / name).read_bytes() == (second / name).read_bytes()

    def test_resource_cap(self, tmp_path):
        config = small_gbs_config(modes=40, mean_photons=4.0, sectors=(6,))
        with pytest.raises(ResourceCapError):
            run_spoof(config, tmp_path, max_sector=1000)

    def test_multisector_allocation(self, tmp_path):
        config = small_gbs_config(
            name="multi", sectors=(0, 2, 4), multisector=True, rates=(1, 4),
            n_samples=300,
        )
        run_spoof(config, tmp_path)
        rows = read_csv(tmp_path / "xe_report.csv")
        model = build_model(config)
        dist = model.total_photon_distribution(4)
        weights = {n: dist[n] for n in (0, 2, 4)}
        mass = sum(weights.values())
        for r in rows:
            if r["source"] == "spoofer" and r["variant"] == "log":
                n = int(r["sector"])
                expected = 300 * weights[n] / mass
                assert abs(int(r["n_samples"]) - expected) < 1.0

    def test_fs_large_sector_uses_dpp_reference(self, tmp_path):
        config = ExperimentConfig(
            name="fsbig", seed=11, family="fs", modes=64, particles=8,
            rates=(1, 4), n_samples=100,
        )
        run_spoof(config, tmp_path)
        rows = read_csv(tmp_path / "xe_report.csv")
        assert {r["source"] for r in rows} == {"uniform", "ideal-dpp", "spoofer"}


class TestRunFsScale:
    def test_outputs(self, tmp_path):
        config = ExperimentConfig(
            name="scan", seed=5, family="fs", modes=0,
            particle_grid=(4, 6), modes_factor=6, rates=(1, 8),
            n_samples=60, trials=3,
        )
        run_fs_scale(config, tmp_path)
        rows = read_csv(tmp_path / "fs_scale.csv")
        assert len(rows) == 4  # two grid points x two rates
        for r in rows:
            assert int(r["trials"]) == 3
            assert float(r["delta_xe_std"]) >= 0.0

    def test_threads_do_not_change_results(self, tmp_path):
        config = ExperimentConfig(
            name="scan", seed=6, family="fs", modes=0,
            particle_grid=(4,), modes_factor=6, rates=(1, 4),
            n_samples=40, trials=4,
        )
        run_fs_scale(config, tmp_path / "serial", threads=1)
        run_fs_scale(config, tmp_path / "pooled", threads=2)
        a = (tmp_path / "serial" / "fs_scale.csv").read_bytes()
        b = (tmp_path / "pooled" / "fs_scale.csv").read_bytes()
        assert a == b


class TestRunBayes:
    def test_rows_and_reference_mockup(self, tmp_path):
        config = ExperimentConfig(
            name="bayes", seed=7, family="fbs", modes=8, particles=3,
            n_samples=4000,
        )
        run_bayes(config, tmp_path)
        rows = {r["mockup"]: r for r in read_csv(tmp_path / "bayes_check.csv")}
        ideal = rows["ideal"]
        assert abs(float(ideal["score"])) <= 3 * max(float(ideal["score_se"]), 1e-12)
        squared = rows["ideal-pow:2"]
        assert float(squared["score"]) > 4 * float(squared["score_se"])
        assert float(squared["exact_xe_mockup"]) > float(squared["exact_xe_ideal"])


class TestTheoryChecks:
    def test_quick_run_passes(self, tmp_path):
        params = {
            "seed": 13, "moment_draws": 30_000, "xe_trials": 120,
            "xe_photons": 2, "xe_modes": 600, "ratio_trials": 30_000,
            "ratio_powers": [1],
        }
        rows, all_pass = run_theory_checks(params, tmp_path)
        assert all_pass, [r for r in rows if r["status"] != "pass"]
        assert (tmp_path / "theory_check.csv").exists()

    def test_tiny_trials_trip_variance_flag(self, tmp_path):
        params = {
            "seed": 14, "moment_draws": 16, "xe_trials": 100,
            "xe_photons": 1, "xe_modes": 50, "ratio_trials": 8,
            "ratio_powers": [3], "ratio_photons": 8,
        }
        rows, all_pass = run_theory_checks(params, tmp_path)
        assert not all_pass

    def test_unknown_key_rejected(self, tmp_path):
        with pytest.raises(ConfigError):
            run_theory_checks({"nope": 1}, tmp_path)


class TestPlotData:
    def test_header_and_sidecar(self, tmp_path):
        files = emit_plotdata(
            tmp_path / "demo", ["x", "y"], [[1, 2.5], [2, 3.5]],
            x_label="x", y_label="y",
        )
        dat = files[0].read_text().splitlines()
        assert dat[0] == "# x y"
        meta = json.loads(files[1].read_text())
        assert meta["columns"] == ["x", "y"]

    def test_empty_rows_error(self, tmp_path):
        with pytest.raises(ValueError, match="no rows"):
            emit_plotdata(tmp_path / "demo", ["x"], [], x_label="x", y_label="y")


class TestReproductionPresets:
    @pytest.mark.parametrize(
        "figure", ["fig2", "fig3", "fig4", "fig5", "figS2", "figS3", "figS4", "figS5", "figS6"]
    )
    def test_presets_build(self, figure):
        kind, config = reproduction_config(figure, seed=1, scale="smoke")
        assert kind in ("spoof-run", "fs-scale", "bayes-check")
        assert config.seed == 1

    def test_figS6_is_linear_variant(self):
        _, config = reproduction_config("figS6", seed=1, scale="paper")
        assert config.xe_variants == ("linear",)

    def test_unknown_figure(self):
        with pytest.raises(ConfigError):
            reproduction_config("fig99", seed=1, scale="paper")


class TestCLI:
    def run_cli(self, *args, env=None):
        import os

        full_env = dict(os.environ)
        if env:
            full_env.update(env)
        return subprocess.run(
            [sys.executable, "-m", "xebspoof", *args],
            capture_output=True, text=True, env=full_env,
        )

    def test_spoof_run_and_exit_codes(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        save_config(small_gbs_config(rates=(1, 4), n_samples=50), cfg)
        out = tmp_path / "out"
        proc = self.run_cli("spoof-run", "--config", str(cfg), "--out", str(out))
        assert proc.returncode == 0, proc.stderr
        assert (out / "xe_report.csv").exists()

    def test_config_error_exit_code(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        proc = self.run_cli("spoof-run", "--config", str(bad))
        assert proc.returncode == 2

    def test_resource_cap_exit_code(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        save_config(small_gbs_config(modes=40, mean_photons=4.0, sectors=(6,)), cfg)
        proc = self.run_cli("spoof-run", "--config", str(cfg),
                            "--out", str(tmp_path / "o"), "--max-sector", "100")
        assert proc.returncode == 4

    def test_theory_tolerance_exit_code(self, tmp_path):
        cfg = tmp_path / "tiny.json"
        cfg.write_text(json.dumps({
            "seed": 3, "moment_draws": 16, "xe_trials": 100, "xe_photons": 1,
            "xe_modes": 50, "ratio_trials": 8, "ratio_powers": [3],
            "ratio_photons": 8,
        }))
        proc = self.run_cli("theory-check", "--config", str(cfg),
                            "--out", str(tmp_path / "o"))
        assert proc.returncode == 3

    def test_out_env_var(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        save_config(small_gbs_config(rates=(1,), n_samples=20), cfg)
        proc = self.run_cli("spoof-run", "--config", str(cfg),
                            env={"XEBSPOOF_OUT": str(tmp_path / "envout")})
        assert proc.returncode == 0, proc.stderr
        assert (tmp_path / "envout" / "unit" / "xe_report.csv").exists()

    def test_reproduce_smoke_and_manifest_replay(self, tmp_path):
        out = tmp_path / "fig5"
        proc = self.run_cli("reproduce", "fig5", "--out", str(out), "--scale", "smoke")
        assert proc.returncode == 0, proc.stderr
        manifest = load_manifest(out / "manifest.json")
        replay_out = tmp_path / "replay"
        proc = self.run_cli("bayes-check", "--config", str(out / "manifest.json"),
                            "--out", str(replay_out))
        assert proc.returncode == 0, proc.stderr
        for name in manifest.outputs:
            assert (out / name).read_bytes() == (replay_out / name).read_bytes()
