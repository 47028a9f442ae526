import json

import numpy as np
import pytest

from kinklab.cli import main
from kinklab.config import ConfigError, parse_config
from kinklab.io import fmt, read_trajectory_binary, write_trajectory_binary
from kinklab.spde import InstantonInitial, SimConfig, simulate


def write_cfg(tmp_path, name="cfg.json", **kwargs):
    path = tmp_path / name
    path.write_text(json.dumps(kwargs))
    return str(path)


class TestParseConfig:
    def test_minimal_defaults(self, tmp_path):
        path = write_cfg(tmp_path, epsilon=0.05, **{"lambda": 1.0}, experiment="diffusion")
        rc = parse_config(path)
        assert rc.sim.dt == rc.sim.dx / 4
        assert rc.sim.record_stride == round(0.1 / rc.sim.dt)
        assert rc.sim.grid().half_length == 20.0
        assert rc.sim.t_end == pytest.approx(20.0)  # max(tau)/epsilon
        assert rc.n_replicas == 200
        assert rc.experiment == "diffusion"

    def test_dt_violation_names_key(self, tmp_path):
        path = write_cfg(tmp_path, epsilon=0.05, dt=1.0, dx=0.1, experiment="simulate")
        with pytest.raises(ConfigError, match="'dt'"):
            parse_config(path)

    def test_duplicate_key_rejected(self, tmp_path):
        path = tmp_path / "dup.json"
        path.write_text('{"epsilon": 0.05, "epsilon": 0.1, "experiment": "simulate"}')
        with pytest.raises(ConfigError, match="duplicate key 'epsilon'"):
            parse_config(str(path))

    def test_unknown_key_rejected(self, tmp_path):
        path = write_cfg(tmp_path, epsilon=0.05, experiment="simulate", epsilonn=1.0)
        with pytest.raises(ConfigError, match="epsilonn"):
            parse_config(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="not found"):
            parse_config(str(tmp_path / "absent.json"))

    def test_missing_epsilon(self, tmp_path):
        path = write_cfg(tmp_path, experiment="simulate")
        with pytest.raises(ConfigError, match="'epsilon'"):
            parse_config(path)

    def test_unknown_experiment(self, tmp_path):
        path = write_cfg(tmp_path, epsilon=0.05, experiment="discombobulate")
        with pytest.raises(ConfigError, match="unknown experiment"):
            parse_config(path)

    def test_subcommand_mismatch(self, tmp_path):
        path = write_cfg(tmp_path, epsilon=0.05, experiment="simulate")
        with pytest.raises(ConfigError, match="subcommand"):
            parse_config(path, experiment="diffusion")

    def test_initial_variants(self, tmp_path):
        path = write_cfg(tmp_path, epsilon=0.05, experiment="simulate",
                         initial={"kind": "instanton", "x0": 1.5})
        assert parse_config(path).x0 == 1.5
        path = write_cfg(tmp_path, epsilon=0.05, experiment="simulate",
                         initial={"kind": "constant", "value": -1.0})
        rc = parse_config(path)
        assert rc.sim.initial.value == -1.0
        path = write_cfg(tmp_path, epsilon=0.05, experiment="simulate",
                         initial={"kind": "squiggle"})
        with pytest.raises(ConfigError, match="initial"):
            parse_config(path)

    def test_seed_override(self, tmp_path):
        path = write_cfg(tmp_path, epsilon=0.05, experiment="simulate", seed=3)
        assert parse_config(path).sim.seed == 3
        assert parse_config(path, seed_override=99).sim.seed == 99


class TestArtifacts:
    def test_csv_float_format_round_trips(self):
        for x in (1 / 3, np.pi, 1e-17, 12345.6789):
            assert float(fmt(x)) == x

    def test_binary_trajectory_round_trip(self, tmp_path):
        cfg = SimConfig(epsilon=0.1, lam=1.0, dx=0.1, t_end=1.0, seed=2,
                        initial=InstantonInitial(0.0))
        traj = simulate(cfg)
        path = write_trajectory_binary(str(tmp_path / "t.bin"), traj)
        meta, times, x, m1, m2 = read_trajectory_binary(path)
        assert meta["epsilon"] == 0.1
        np.testing.assert_array_equal(times, traj.times)
        np.testing.assert_array_equal(x, traj.grid.x)
        np.testing.assert_array_equal(m1, traj.m1)
        np.testing.assert_array_equal(m2, traj.m2)

    def test_binary_magic_guard(self, tmp_path):
        path = tmp_path / "junk.bin"
        path.write_bytes(b"NOTAKINK" + b"\0" * 64)
        with pytest.raises(ValueError, match="magic"):
            read_trajectory_binary(str(path))


class TestCli:
    def run_cli(self, args):
        return main(args)

    def test_spectrum_subcommand(self, tmp_path):
        cfg = write_cfg(tmp_path, epsilon=0.05, dx=0.05, experiment="spectrum",
                        output_dir=str(tmp_path / "out"))
        assert self.run_cli(["spectrum", "--config", cfg]) == 0
        rows = (tmp_path / "out" / "spectrum.csv").read_text().splitlines()
        assert rows[0] == "index,eigenvalue"
        eigs = [float(r.split(",")[1]) for r in rows[1:]]
        assert abs(eigs[0]) < 5e-3
        assert abs(eigs[1] + 1.5) < 1e-2
        assert (tmp_path / "out" / "spectrum.png").exists()
        assert (tmp_path / "out" / "manifest.json").exists()

    def test_simulate_deterministic_kink(self, tmp_path):
        # noise-free kink: every frame within 1e-6 of frame 0 (fine grid)
        cfg = write_cfg(tmp_path, epsilon=0.0, half_length=10.0, dx=0.0025,
                        t_end=1.0, experiment="simulate", format="binary",
                        output_dir=str(tmp_path / "out"))
        assert self.run_cli(["simulate", "--config", cfg]) == 0
        _, times, x, m1, m2 = read_trajectory_binary(str(tmp_path / "out" / "trajectory.bin"))
        assert np.max(np.abs(m1 - m1[0])) < 1e-6
        assert np.max(np.abs(m2 - m2[0])) < 1e-6

    def test_track_and_manifest_reproduction(self, tmp_path):
        cfg = write_cfg(tmp_path, epsilon=0.1, t_end=2.0, seed=4, experiment="track",
                        output_dir=str(tmp_path / "a"))
        assert self.run_cli(["track", "--config", cfg]) == 0
        manifest = tmp_path / "a" / "manifest.json"
        assert self.run_cli(["track", "--config", str(manifest),
                             "--out", str(tmp_path / "b")]) == 0
        a = (tmp_path / "a" / "center_path.csv").read_text()
        b = (tmp_path / "b" / "center_path.csv").read_text()
        assert a == b  # byte-identical numeric payload

    def test_d_epsilon_subcommand(self, tmp_path):
        cfg = write_cfg(tmp_path, epsilon=0.05, experiment="d-epsilon",
                        output_dir=str(tmp_path / "out"))
        assert self.run_cli(["d-epsilon", "--config", cfg]) == 0
        rep = json.loads((tmp_path / "out" / "d_epsilon.json").read_text())
        assert abs(rep["results"]["d_epsilon"] - 1.0) < 1e-10
        assert rep["master_seed"] == 1
        assert rep["config"]["epsilon"] == 0.05

    def test_diffusion_subcommand_small(self, tmp_path):
        cfg = write_cfg(tmp_path, epsilon=0.1, t_end=10.0, seed=12, n_replicas=8,
                        tau_grid=[0.5, 1.0], experiment="diffusion",
                        output_dir=str(tmp_path / "out"))
        assert self.run_cli(["diffusion", "--config", cfg, "--workers", "1"]) == 0
        rep = json.loads((tmp_path / "out" / "diffusion.json").read_text())
        assert 0.0 < rep["results"]["d_hat"] < 1.5
        assert (tmp_path / "out" / "per_tau_variance.csv").exists()
        assert (tmp_path / "out" / "diffusion.png").exists()

    def test_verify_subcommands_small(self, tmp_path):
        cfg = write_cfg(tmp_path, "c.json", epsilon=0.1, t_end=2.0, seed=6,
                        n_replicas=2, experiment="verify-comparison",
                        output_dir=str(tmp_path / "vc"))
        assert self.run_cli(["verify-comparison", "--config", cfg]) == 0
        rep = json.loads((tmp_path / "vc" / "comparison.json").read_text())
        assert rep["results"]["min_difference"] >= -1e-8

        cfg = write_cfg(tmp_path, "b.json", epsilon=0.1, t_end=2.0, seed=6,
                        agreement_radius=7.0, experiment="verify-barrier",
                        output_dir=str(tmp_path / "vb"))
        assert self.run_cli(["verify-barrier", "--config", cfg]) == 0

        cfg = write_cfg(tmp_path, "bd.json", epsilon=0.1, t_end=2.0, seed=6,
                        n_replicas=3, experiment="verify-bounded",
                        output_dir=str(tmp_path / "vd"))
        assert self.run_cli(["verify-bounded", "--config", cfg]) == 0
        rep = json.loads((tmp_path / "vd" / "bounded.json").read_text())
        assert rep["results"]["exceed_fraction"] == 0.0

    def test_noise_projection_subcommand_small(self, tmp_path):
        cfg = write_cfg(tmp_path, epsilon=0.1, t_end=5.0, seed=11, n_replicas=16,
                        experiment="noise-projection", output_dir=str(tmp_path / "np"))
        assert self.run_cli(["noise-projection", "--config", cfg]) == 0
        rep = json.loads((tmp_path / "np" / "noise_projection.json").read_text())
        assert 0.5 < rep["results"]["slope_over_d_epsilon"] < 1.5

    def test_linear_decay_subcommand(self, tmp_path):
        cfg = write_cfg(tmp_path, epsilon=0.05, dx=0.05, t_end=4.0,
                        experiment="linear-decay", output_dir=str(tmp_path / "ld"))
        assert self.run_cli(["linear-decay", "--config", cfg]) == 0
        rep = json.loads((tmp_path / "ld" / "linear_decay.json").read_text())
        assert rep["results"]["fitted_minus_rate"] == pytest.approx(2.0, rel=0.05)

    def test_error_exit_code_and_message(self, tmp_path, capsys):
        cfg = write_cfg(tmp_path, epsilon=0.05, dt=0.2, dx=0.1, experiment="simulate")
        assert self.run_cli(["simulate", "--config", cfg]) == 1
        err = capsys.readouterr().err
        assert err.startswith("error:")
        assert "dt" in err

    def test_env_var_output_dir(self, tmp_path, monkeypatch):
        monkeypatch.setenv("KINKLAB_OUT", str(tmp_path / "envout"))
        monkeypatch.chdir(tmp_path)
        cfg = write_cfg(tmp_path, epsilon=0.05, experiment="d-epsilon")
        assert self.run_cli(["d-epsilon", "--config", cfg]) == 0
        assert (tmp_path / "envout" / "d_epsilon.json").exists()
