import json
from pathlib import Path

import numpy as np
import pytest

from thermokv import cli, config, diagnostics, dynamics
from thermokv.errors import ParseError, UsageError, ValidationError

MINIMAL = """
[scenario]
t_end = 0.004

[resolution]
k = 2
n = 16

[time]
dt = 2e-3

[initial.velocity]
kind = "shear_wave"
amplitude = 0.05
"""


class TestParseConfig:
    def test_minimal_fills_defaults(self):
        cfg, sc = config.parse_config(MINIMAL)
        assert cfg["regularization"]["lambda"] == 0.05
        assert cfg["time"]["scheme"] == "rk4"
        assert sc.k == 2 and sc.n_col == 16
        assert sc.material.name == "neo_hookean_thermal"

    def test_unknown_key_is_hard_error(self):
        with pytest.raises(ValidationError):
            config.parse_config("[scenario]\nbogus = 1\n")

    def test_bad_toml_is_parse_error(self):
        with pytest.raises(ParseError):
            config.parse_config("[scenario\noops")

    def test_negative_theta0_rejected(self):
        with pytest.raises(ValidationError):
            config.parse_config("[initial]\ntheta0 = -1.0\n")

    def test_resolution_guards(self):
        with pytest.raises(ValidationError):
            config.parse_config("[resolution]\nk = 65\n")
        with pytest.raises(ValidationError):
            config.parse_config("[resolution]\nn = 1024\n")

    def test_override_reflected_in_echo(self):
        cfg, _ = config.parse_config(MINIMAL,
                                     overrides=["regularization.lambda=0.02"])
        assert cfg["regularization"]["lambda"] == 0.02
        assert "lambda = 0.02" in config.echo_config(cfg)

    def test_unknown_override_rejected(self):
        with pytest.raises(ValidationError):
            config.parse_config(MINIMAL, overrides=["nonsense.key=1"])

    def test_echo_roundtrip_fixed_point(self):
        cfg, _ = config.parse_config(MINIMAL)
        echoed = config.echo_config(cfg)
        cfg2, _ = config.parse_config(echoed)
        assert cfg2 == cfg
        assert config.echo_config(cfg2) == echoed

    def test_traction_requires_slip_mode(self):
        text = MINIMAL + '\n[loads.traction]\nkind = "tangential_shear"\n'
        with pytest.raises(ValidationError):
            config.parse_config(text)
        with pytest.raises(ValidationError):
            config.parse_config('[loads.traction]\nkind = "normal_push"\n')


class TestCmdRun:
    def test_artifacts_and_exit_zero(self, tmp_path):
        scen = tmp_path / "s.toml"
        scen.write_text(MINIMAL)
        rc = cli.main(["run", str(scen), "--out", str(tmp_path / "out")])
        assert rc == 0
        out = tmp_path / "out"
        assert (out / "ledger.csv").exists()
        assert (out / "effective_config.toml").exists()
        assert (out / "summary.json").exists()
        assert (out / "snapshot_000000.bin").exists()
        header = (out / "ledger.csv").read_text().splitlines()[0]
        assert header == "time," + ",".join(diagnostics.LEDGER_FIELDS)
        summary = json.loads((out / "summary.json").read_text())
        assert summary["steps"] == 2
        assert "min_theta" in summary and "cutoff_activations" in summary

    def test_deterministic_ledger(self, tmp_path):
        scen = tmp_path / "s.toml"
        scen.write_text(MINIMAL)
        cli.main(["run", str(scen), "--out", str(tmp_path / "a")])
        cli.main(["run", str(scen), "--out", str(tmp_path / "b")])
        assert (tmp_path / "a" / "ledger.csv").read_bytes() \
            == (tmp_path / "b" / "ledger.csv").read_bytes()

    def test_invalid_config_exit_2(self, tmp_path):
        scen = tmp_path / "bad.toml"
        scen.write_text("[resolution]\nk = 900\n")
        assert cli.main(["run", str(scen)]) == 2

    def test_snapshot_roundtrip(self, tmp_path):
        scen = tmp_path / "s.toml"
        scen.write_text(MINIMAL + "\n[output]\nvtk = true\n")
        cli.main(["run", str(scen), "--out", str(tmp_path / "out")])
        header, fields = cli.read_snapshot(tmp_path / "out" / "snapshot_000000.bin")
        assert header["format"] == "thermokv-grid"
        assert set(fields) == {"rho", "theta", "v", "F"}
        assert fields["rho"].shape == (16, 16)
        assert fields["F"].shape == (16, 16, 2, 2)
        assert np.all(np.isfinite(fields["theta"]))
        vtk = (tmp_path / "out" / "snapshot_000000.vtk").read_text()
        assert vtk.startswith("# vtk DataFile")
        assert "VECTORS v double" in vtk

    def test_cutoff_activation_reported(self, tmp_path):
        # strong compression dimple drives det F toward the cut-off window
        scen = tmp_path / "s.toml"
        scen.write_text("""
[scenario]
t_end = 0.002
[resolution]
k = 2
n = 16
[time]
dt = 2e-3
[regularization]
lambda = 0.9
[initial.deformation]
kind = "compressed"
amplitude = 0.4
""")
        rc = cli.main(["run", str(scen), "--out", str(tmp_path / "out")])
        assert rc == 0
        summary = json.loads((tmp_path / "out" / "summary.json").read_text())
        assert summary["cutoff_activations"] > 0


class TestValidateMaterial:
    def test_pass_exit_zero(self, capsys):
        rc = cli.main(["validate-material", "neo_hookean_thermal"])
        assert rc == 0
        assert "[PASS] heat_capacity" in capsys.readouterr().out

    def test_failing_material_exit_one(self, tmp_path, capsys):
        rc = cli.main(["validate-material", "sma_two_phase", "--set", "c0=1e-4",
                       "--out", str(tmp_path / "report.txt")])
        assert rc == 1
        assert "[FAIL] heat_capacity" in (tmp_path / "report.txt").read_text()

    def test_unknown_material_exit_two(self):
        assert cli.main(["validate-material", "unobtainium"]) == 2

    def test_empty_box_usage_error(self):
        with pytest.raises(UsageError):
            cli.cmd_validate_material("neo_hookean_thermal",
                                      ["box.det_range=[1.0, 1.0]"])


def test_version_command(capsys):
    assert cli.main(["version"]) == 0
    import thermokv
    assert capsys.readouterr().out.strip() == thermokv.__version__


def test_no_command_exit_two():
    assert cli.main([]) == 2
