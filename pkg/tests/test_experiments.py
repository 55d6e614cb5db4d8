"""Experiment configs, runners, reports, and the CLI."""

import json

import numpy as np
import pytest

from powerlimits import cli
from powerlimits.experiments import (
    EXPERIMENT_KINDS,
    ConfigError,
    ExperimentConfig,
    run_experiment,
)


def small_config(**overrides):
    base = dict(experiment="eigen_convergence", family="U", matrix_size=2,
                law={"type": "haar"}, powers=[2], samples=4000, seed=17)
    base.update(overrides)
    return ExperimentConfig(**base)


class TestConfig:
    def test_requires_seed(self):
        with pytest.raises(ConfigError):
            small_config(seed=None).validate()

    def test_requires_sample_floor(self):
        with pytest.raises(ConfigError):
            small_config(samples=10).validate()

    def test_rejects_unknown_kind(self):
        with pytest.raises(ConfigError):
            small_config(experiment="nope").validate()

    def test_rejects_zero_power(self):
        with pytest.raises(ConfigError):
            small_config(powers=[0]).validate()

    def test_rejects_unknown_json_fields(self):
        with pytest.raises(ConfigError):
            ExperimentConfig.from_json(json.dumps({"experiment": "torus_suite",
                                                   "seed": 1, "bogus": 2}))

    def test_json_round_trip(self):
        cfg = ExperimentConfig.from_json(json.dumps(
            {"experiment": "group_limit", "family": "U", "matrix_size": 2,
             "law": {"type": "mixture_u2"}, "powers": [4], "samples": 500,
             "seed": 3}))
        assert cfg.experiment == "group_limit"
        assert cfg.build_law().__class__.__name__ == "MixtureU2Law"

    def test_law_construction(self):
        assert small_config(law={"type": "perturbed_haar", "strength": 0.25}
                            ).build_law().strength == 0.25
        with pytest.raises(ConfigError):
            small_config(law={"type": "wat"}).build_law()

    def test_custom_density_payloads(self):
        dens = {"rank": 2, "coeffs": [
            {"p": [0, 0], "re": 1.0, "im": 0.0},
            {"p": [1, -1], "re": 0.25, "im": 0.0},
            {"p": [-1, 1], "re": 0.25, "im": 0.0}]}
        law = small_config(law={"type": "mixture_u2", "d1": dens}).build_law()
        assert law.d1.coefficients[(1, -1)] == 0.25
        assert law.d2.coefficients[(1, 0)] == 0.5  # default marginal
        torus_law = small_config(law={"type": "torus_density", "density": dens}).build_law()
        assert torus_law.density.max_degree == 1


class TestRunners:
    def test_eigen_convergence_haar_passes(self):
        rep = run_experiment(small_config(samples=20000))
        assert rep.raw_pass and rep.summary_pass

    def test_eigen_point_mass_negative_control(self):
        rep = run_experiment(small_config(law={"type": "point_mass"}, powers=[10],
                                          negative_control=True))
        assert not rep.raw_pass
        assert rep.summary_pass

    def test_eigen_m1_detects_weyl_coefficient(self):
        rep = run_experiment(small_config(powers=[1], samples=20000))
        assert not rep.raw_pass
        failing = {r.statistic for r in rep.rows if not r.passed}
        assert "fourier[1,-1]" in failing

    def test_group_limit_mixture(self):
        rep = run_experiment(small_config(experiment="group_limit",
                                          law={"type": "mixture_u2"}, powers=[8],
                                          samples=20000))
        assert rep.summary_pass

    def test_group_limit_negative_power_m1(self):
        rep = run_experiment(small_config(
            experiment="group_limit", law={"type": "perturbed_haar", "strength": 1.0},
            powers=[1], samples=20000, target="haar_power", negative_control=True))
        assert rep.summary_pass  # the m=1 law is visibly not the limit

    def test_exact_threshold_haar(self):
        rep = run_experiment(small_config(experiment="exact_threshold", samples=20000))
        assert rep.notes["threshold"] == 2
        assert rep.notes["detection_power"] == 1
        assert rep.summary_pass

    def test_exact_threshold_requires_symbolic_density(self):
        with pytest.raises(ValueError):
            run_experiment(small_config(experiment="exact_threshold",
                                        law={"type": "mixture_u2"}))

    def test_exact_threshold_torus_density_law(self):
        # degree-1 product density on the torus: threshold 2
        rep = run_experiment(small_config(experiment="exact_threshold",
                                          law={"type": "torus_density"},
                                          samples=20000))
        assert rep.notes["threshold"] == 2
        assert rep.summary_pass

    def test_preimage_invariance(self):
        rep = run_experiment(small_config(experiment="preimage_invariance",
                                          law={"type": "perturbed_haar", "strength": 0.5},
                                          samples=20000))
        assert rep.summary_pass

    def test_torus_suite(self):
        rep = run_experiment(small_config(experiment="torus_suite", powers=[2, 3],
                                          density_count=3, samples=4000))
        assert rep.summary_pass

    def test_torus_law_group_column(self):
        rep = run_experiment(small_config(law={"type": "torus_density"}, powers=[4],
                                          samples=20000))
        assert rep.summary_pass


class TestReports:
    def test_determinism_modulo_wall_clock(self):
        cfg = small_config(samples=2000)
        a = run_experiment(cfg).to_json_dict()
        b = run_experiment(small_config(samples=2000)).to_json_dict()
        a.pop("wall_clock"), b.pop("wall_clock")
        assert a == b

    def test_seed_changes_estimates(self):
        a = run_experiment(small_config(samples=2000)).to_json_dict()
        b = run_experiment(small_config(samples=2000, seed=18)).to_json_dict()
        a.pop("wall_clock"), b.pop("wall_clock")
        assert a != b

    def test_config_echoed(self):
        rep = run_experiment(small_config(samples=2000))
        assert rep.config["experiment"] == "eigen_convergence"
        assert rep.config["seed"] == 17

    def test_csv_shape(self):
        rep = run_experiment(small_config(samples=2000))
        lines = rep.to_csv().strip().splitlines()
        assert lines[0] == "experiment,m,statistic_id,estimate_re,estimate_im,std_error,z,pass"
        assert len(lines) == len(rep.rows) + 1
        import csv as csvmod
        import io
        parsed = list(csvmod.reader(io.StringIO(rep.to_csv())))
        assert all(len(row) == 8 for row in parsed)

    def test_summary_matches_rows(self):
        rep = run_experiment(small_config(samples=2000))
        assert rep.raw_pass == all(r.passed for r in rep.rows)


class TestCli:
    def _write_config(self, tmp_path, **overrides):
        data = dict(experiment="eigen_convergence", family="U", matrix_size=2,
                    law={"type": "haar"}, powers=[2], samples=2000, seed=21)
        data.update(overrides)
        path = tmp_path / "config.json"
        path.write_text(json.dumps(data))
        return path

    def test_list(self, capsys):
        assert cli.main(["list"]) == 0
        out = capsys.readouterr().out
        for kind in EXPERIMENT_KINDS:
            assert kind in out

    def test_run_passing_config(self, tmp_path, capsys):
        path = self._write_config(tmp_path)
        assert cli.main(["run", str(path)]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["summary_pass"] is True

    def test_run_failing_config_exit_code(self, tmp_path):
        path = self._write_config(tmp_path, powers=[1], samples=20000)
        assert cli.main(["run", str(path)]) == 1

    def test_flag_overrides(self, tmp_path, capsys):
        path = self._write_config(tmp_path)
        assert cli.main(["run", str(path), "--seed", "99", "--samples", "2500"]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["config"]["seed"] == 99
        assert payload["config"]["samples"] == 2500

    def test_csv_output_file(self, tmp_path):
        path = self._write_config(tmp_path)
        out = tmp_path / "report.csv"
        assert cli.main(["run", str(path), "--format", "csv", "--out", str(out)]) == 0
        text = out.read_text()
        assert text.startswith("experiment,m,statistic_id")

    def test_bad_config_is_a_usage_error(self, tmp_path):
        path = tmp_path / "config.json"
        path.write_text("{not json")
        assert cli.main(["run", str(path)]) == 2
        path.write_text(json.dumps({"experiment": "eigen_convergence"}))
        assert cli.main(["run", str(path)]) == 2
