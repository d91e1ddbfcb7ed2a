import json

import numpy as np
from click.testing import CliRunner

import capasense as cs
from capasense.cli import main


def write_scene(tmp_path, scene, name="scene.json"):
    path = tmp_path / name
    cs.save_scene(scene, path)
    return path


def small_scene(noise=0.0, snapshots=12, seed=3):
    return cs.reference_scene(noise_power=noise, snapshots=snapshots, seed=seed)


def run(args):
    return CliRunner().invoke(main, args, catch_exceptions=False)


def test_presets_listing():
    result = run(["presets"])
    assert result.exit_code == 0
    assert "noise-sweep" in result.output


def test_synth_writes_dump(tmp_path):
    path = write_scene(tmp_path, small_scene())
    result = run(["--config", str(path), "--out-dir", str(tmp_path), "synth",
                  "--order", "8"])
    assert result.exit_code == 0
    assert (tmp_path / "field.csv").exists()
    result = run(["--config", str(path), "--out-dir", str(tmp_path), "synth",
                  "--order", "8", "--format", "json"])
    assert result.exit_code == 0
    assert (tmp_path / "field.json").exists()


def test_doa_subcommand(tmp_path):
    path = write_scene(tmp_path, small_scene())
    result = run(["--config", str(path), "--out-dir", str(tmp_path),
                  "doa", "-M", "2", "--order", "12"])
    assert result.exit_code == 0
    doc = json.loads((tmp_path / "doa.json").read_text())
    est = np.sort(np.array(doc["angles_rad"])[:, 0])
    truth = np.sort(small_scene().doas[:, 0])
    assert np.abs(est - truth).max() < 1e-4


def test_doa_degrees_flag(tmp_path):
    path = write_scene(tmp_path, small_scene())
    result = run(["--config", str(path), "--out-dir", str(tmp_path), "--degrees",
                  "doa", "-M", "2", "--order", "12"])
    assert result.exit_code == 0
    line = json.loads(result.output.splitlines()[0])
    assert np.abs(np.array(line["angles"])).max() > np.pi  # degrees, not radians


def test_missing_config_is_exit_2(tmp_path):
    result = CliRunner().invoke(main, ["doa", "-M", "2"])
    assert result.exit_code == 2


def test_estimation_failure_is_exit_3(tmp_path):
    base = small_scene()
    direction = base.targets[1].direction
    bad = cs.Scene(
        aperture=base.aperture,
        targets=(base.targets[0],
                 cs.Target(position=base.targets[1].position, attitude=direction)),
        noise_power=0.0, snapshots=12, seed=3,
    )
    path = write_scene(tmp_path, bad)
    result = CliRunner().invoke(
        main, ["--config", str(path), "--out-dir", str(tmp_path),
               "doa", "-M", "2", "--order", "12"],
    )
    assert result.exit_code == 3


def test_attitude_subcommand(tmp_path):
    path = write_scene(tmp_path, small_scene())
    result = run(["--config", str(path), "--out-dir", str(tmp_path),
                  "attitude", "-M", "2", "--order", "12", "--mode", "known",
                  "--true-doas"])
    assert result.exit_code == 0
    doc = json.loads((tmp_path / "attitude.json").read_text())
    assert doc["mode"] == "known"
    assert min(doc["attitudes"][0]["angular_residuals"]) < 1e-6


def test_spectrum_subcommand(tmp_path):
    path = write_scene(tmp_path, small_scene())
    result = run(["--config", str(path), "--out-dir", str(tmp_path),
                  "spectrum", "-M", "2", "--order", "10", "--step-deg", "4"])
    assert result.exit_code == 0
    lines = (tmp_path / "spectrum.csv").read_text().splitlines()
    assert lines[0] == "theta,phi,value,normalized"


def test_crlb_subcommand(tmp_path):
    path = write_scene(tmp_path, small_scene(noise=1e-3))
    result = run(["--config", str(path), "--out-dir", str(tmp_path),
                  "crlb", "--order", "8"])
    assert result.exit_code == 0
    doc = json.loads((tmp_path / "crlb.json").read_text())
    assert doc["theta_0"] > 0
    # zero-noise scene: configuration error
    path0 = write_scene(tmp_path, small_scene(noise=0.0), name="scene0.json")
    result = CliRunner().invoke(
        main, ["--config", str(path0), "--out-dir", str(tmp_path), "crlb"]
    )
    assert result.exit_code == 2


def test_sweep_with_config(tmp_path):
    config = {
        "scene": small_scene(noise=1e-3, snapshots=16).to_dict(),
        "sweep_variable": "noise_power",
        "sweep_values": [1e-3],
        "trials": 1,
        "methods": ["tri"],
        "order": 8,
        "window_margin_deg": 6.0,
        "master_seed": 5,
    }
    cfg_path = tmp_path / "exp.json"
    cfg_path.write_text(json.dumps(config))
    result = run(["--config", str(cfg_path), "--out-dir", str(tmp_path), "sweep"])
    assert result.exit_code == 0
    assert (tmp_path / "records.csv").exists()
    assert (tmp_path / "records.json").exists()


def test_sweep_requires_config_or_preset(tmp_path):
    result = CliRunner().invoke(main, ["--out-dir", str(tmp_path), "sweep"])
    assert result.exit_code == 2
