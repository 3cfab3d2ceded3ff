import json
import os

import pytest

from nshomog.cli import main
from nshomog.config import ConfigError, RunConfig


def _write_config(path, data):
    path.write_text(json.dumps(data))
    return str(path)


class TestValidation:
    def test_bad_eps_names_rule(self, tmp_path, capsys):
        cfg = _write_config(tmp_path / "c.json", {"eps": 0.3})
        code = main(["simulate", "--config", cfg, "--outdir", str(tmp_path)])
        err = capsys.readouterr().err
        assert code == 1
        assert "1/n" in err

    def test_grid_too_small(self, tmp_path, capsys):
        cfg = _write_config(tmp_path / "c.json", {"cutoff": 8, "grid": 17})
        code = main(["ensemble", "--config", cfg, "--outdir", str(tmp_path)])
        assert code == 1
        assert "2N + 2" in capsys.readouterr().err

    def test_nonpositive_dt(self):
        with pytest.raises(ConfigError, match="dt"):
            RunConfig.from_mapping({"dt": -0.1})

    def test_unknown_key_rejected(self):
        with pytest.raises(ConfigError, match="unknown"):
            RunConfig.from_mapping({"tyop": 1})

    def test_missing_config_file(self, tmp_path, capsys):
        code = main(["simulate", "--config", str(tmp_path / "nope.json")])
        assert code == 1

    def test_divergence_exit_code(self, tmp_path):
        cfg = _write_config(
            tmp_path / "c.json",
            {"blowup_ceiling": 1e-9, "horizon": 0.01, "sample_stride": 1},
        )
        code = main(["simulate", "--config", cfg, "--outdir", str(tmp_path)])
        assert code == 2


class TestSimulate:
    def test_deterministic_output_bytes(self, tmp_path):
        cfg = _write_config(tmp_path / "c.json", {"horizon": 0.05})
        out1 = tmp_path / "a"
        out2 = tmp_path / "b"
        assert main(["simulate", "--config", cfg, "--seed", "7", "--outdir", str(out1)]) == 0
        assert main(["simulate", "--config", cfg, "--seed", "7", "--outdir", str(out2)]) == 0
        assert (out1 / "trajectory.csv").read_bytes() == (out2 / "trajectory.csv").read_bytes()

    def test_trajectory_schema(self, tmp_path):
        cfg = _write_config(
            tmp_path / "c.json", {"horizon": 0.02, "observables": [[1, 0]]}
        )
        assert main(["simulate", "--config", cfg, "--outdir", str(tmp_path)]) == 0
        header = (tmp_path / "trajectory.csv").read_text().splitlines()[0]
        assert header == "t,norm0,norm1,norm2,obs_1_0_re,obs_1_0_im"

    def test_no_partial_files(self, tmp_path):
        cfg = _write_config(tmp_path / "c.json", {"horizon": 0.02})
        assert main(["simulate", "--config", cfg, "--outdir", str(tmp_path)]) == 0
        leftovers = [p for p in os.listdir(tmp_path) if p.endswith(".tmp")]
        assert leftovers == []


class TestEnsembleAndSweep:
    def test_ensemble_stats_schema(self, tmp_path):
        cfg = _write_config(
            tmp_path / "c.json", {"horizon": 0.05, "ensemble": {"members": 3}}
        )
        assert main(["ensemble", "--config", cfg, "--outdir", str(tmp_path)]) == 0
        lines = (tmp_path / "stats.csv").read_text().splitlines()
        assert lines[0] == "statistic,estimate,half_width,eps,mode"
        assert len(lines) == 6

    def test_sweep_outputs(self, tmp_path):
        cfg = _write_config(
            tmp_path / "c.json",
            {
                "horizon": 0.05,
                "ensemble": {"members": 3},
                "sweep": {"eps_list": [0.5, 0.25], "permutations": 49},
            },
        )
        assert main(["sweep", "--config", cfg, "--outdir", str(tmp_path), "--threads", "2"]) == 0
        sweep_lines = (tmp_path / "sweep.csv").read_text().splitlines()
        assert sweep_lines[0] == "eps,observable,distance,p_value,pathwise_l2"
        # 2 eps values x (energy + 4 modes)
        assert len(sweep_lines) == 1 + 2 * 5
        stats_lines = (tmp_path / "stats.csv").read_text().splitlines()
        assert stats_lines[0] == "statistic,estimate,half_width,eps,mode"

    def test_members_flag_overrides(self, tmp_path):
        cfg = _write_config(tmp_path / "c.json", {"horizon": 0.05})
        assert main(
            ["ensemble", "--config", cfg, "--members", "2", "--outdir", str(tmp_path)]
        ) == 0


class TestIdentities:
    def test_identities_pass_on_defaults(self, tmp_path, capsys):
        assert main(["identities", "--samples", "10", "--outdir", str(tmp_path)]) == 0
        out = capsys.readouterr().out
        assert "FAIL" not in out
        assert "aliasing-negative-control" in out
