"""CLI surface: exit codes, outputs, bundled demo data fits."""

import importlib.resources
import json

from ndtrap.cli import main
from ndtrap.config import serialize_scenario
from ndtrap.runner import load_bundled_scenario


def bundled_data(name):
    return str(importlib.resources.files("ndtrap") / "scenarios" / "data" / name)


def write_scenario(tmp_path, name):
    sc = load_bundled_scenario(name)
    path = tmp_path / f"{name}.cfg"
    path.write_text(serialize_scenario(sc))
    return str(path)


def test_simulate_survival(tmp_path):
    cfg = write_scenario(tmp_path, "fig5_decay")
    out = tmp_path / "out"
    code = main(["simulate", "--config", cfg, "--out-dir", str(out)])
    assert code == 0
    assert (out / "survival.csv").exists()
    meta = json.loads((out / "metadata.json").read_text())
    assert meta["scenario"] == "fig5_decay"
    assert meta["losses"] > 0


def test_simulate_seed_changes_output(tmp_path):
    cfg = write_scenario(tmp_path, "fig9_steps")
    out1, out2, out3 = (tmp_path / d for d in ("a", "b", "c"))
    assert main(["simulate", "--config", cfg, "--out-dir", str(out1), "--seed", "1"]) == 0
    assert main(["simulate", "--config", cfg, "--out-dir", str(out2), "--seed", "1"]) == 0
    assert main(["simulate", "--config", cfg, "--out-dir", str(out3), "--seed", "2"]) == 0
    a = (out1 / "frequency_trace.csv").read_bytes()
    b = (out2 / "frequency_trace.csv").read_bytes()
    c = (out3 / "frequency_trace.csv").read_bytes()
    assert a == b       # same seed, byte-identical
    assert a != c       # different seed, different trace


def test_simulate_motion_kind(tmp_path):
    cfg_text = """
[scenario]
name = motion_demo
kind = motion
seed = 3

[particle]
diameter = 1 um
charge_sign = negative

[trap]
voltage = 4.5 kVpp
drive_frequency = 140 Hz
geometry_factor = 0.0005
characteristic_radius = 3 mm
pressure = 0 Torr

[run]
duration = 0.5 s
initial_charge = -100
damping = 0 1/s
"""
    cfg = tmp_path / "motion.cfg"
    cfg.write_text(cfg_text)
    out = tmp_path / "m"
    assert main(["simulate", "--config", str(cfg), "--out-dir", str(out)]) == 0
    assert (out / "motion.csv").exists()


def test_simulate_picker_kind(tmp_path):
    cfg = write_scenario(tmp_path, "fig12_picker")
    out = tmp_path / "p"
    assert main(["simulate", "--config", cfg, "--out-dir", str(out)]) == 0
    assert (out / "pulses.csv").exists()
    assert (out / "frequency_trace.csv").exists()


def test_invalid_config_exit_2(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("[scenario]\nname = x\nkind = survival\nseed = 1\n"
                   "[trap]\nvoltage = fast\n")
    assert main(["simulate", "--config", str(cfg)]) == 2


def test_missing_config_exit_2(tmp_path):
    assert main(["simulate", "--config", str(tmp_path / "nope.cfg")]) == 2


def test_usage_error_exit_2():
    assert main(["fit", "nosuchmodel", "x.csv"]) == 2


def test_fit_lattice_on_bundled_data(tmp_path, capsys):
    out = tmp_path / "fit.json"
    code = main(["fit", "lattice", bundled_data("fig9_steps.csv"),
                 "--out", str(out), "--delta-f-min", "55", "--delta-f-max", "250"])
    assert code == 0
    printed = capsys.readouterr().out
    assert "delta_f" in printed
    result = json.loads(out.read_text())
    assert abs(result["parameters"]["delta_f"] - 76.4) / 76.4 <= 0.02


def test_fit_sigmoid_on_bundled_data(tmp_path):
    out = tmp_path / "sig.json"
    code = main(["fit", "sigmoid", bundled_data("fig7_sweep.csv"),
                 "--out", str(out)])
    assert code == 0
    result = json.loads(out.read_text())
    assert abs(result["derived"]["center_wavelength"] - 280.0) <= 2.0


def test_fit_empty_file_exit_2(tmp_path):
    empty = tmp_path / "empty.csv"
    empty.write_text("")
    assert main(["fit", "lattice", str(empty)]) == 2


def test_sweep_rejected_by_simulate(tmp_path):
    cfg = write_scenario(tmp_path, "fig8_sweep")
    assert main(["simulate", "--config", cfg, "--out-dir", str(tmp_path / "x")]) == 2


def test_out_dir_env_override(tmp_path, monkeypatch):
    cfg = write_scenario(tmp_path, "fig9_steps")
    monkeypatch.setenv("NDTRAP_OUT_DIR", str(tmp_path / "envroot"))
    monkeypatch.chdir(tmp_path)
    assert main(["simulate", "--config", cfg]) == 0
    assert (tmp_path / "envroot" / "fig9_steps" / "frequency_trace.csv").exists()


def test_reproduce_unknown_exit_2():
    assert main(["reproduce", "fig99"]) == 2


def test_reproduce_fig10_report(tmp_path):
    out = tmp_path / "r10"
    code = main(["reproduce", "fig10", "--out-dir", str(out)])
    assert code == 0
    report = json.loads((out / "report.json").read_text())
    names = {c["name"]: c for c in report["checks"]}
    assert names["first_step_electrons"]["status"] == "PASS"
    assert names["lower_bound_initial_charge"]["value"] == 23
