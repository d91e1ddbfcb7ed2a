import json
import subprocess
import sys

import pytest

from capafigs import PlotSpec, RenderError, load_spec, render


# ---------------------------------------------------------------------------
# Inputs produced by the primary package strictly through its CLI / file
# formats (the only coupling allowed).
# ---------------------------------------------------------------------------

SCENE = {
    "aperture": {"Lx": 2.0, "Ly": 2.0, "lambda": 0.1, "eta": 376.99111843077515},
    "targets": [
        {"position": [-16.0, -10.0, 50.0], "attitude": [0.8, 0.6, 0.0], "length": 0.01},
        {"position": [16.0, -38.0, 40.0], "attitude": [-0.1, 0.7, 0.7071], "length": 0.01},
    ],
    "noise_power": 1e-3,
    "snapshots": 24,
    "seed": 7,
}


def run_cli(args, cwd):
    result = subprocess.run(
        [sys.executable, "-m", "capasense.cli", *args],
        capture_output=True, text=True, cwd=cwd,
    )
    assert result.returncode == 0, result.stderr
    return result


@pytest.fixture(scope="session")
def exports(tmp_path_factory):
    """Genuine primary-pipeline exports: spectrum, records, attitude."""
    out = tmp_path_factory.mktemp("exports")
    scene_path = out / "scene.json"
    scene_path.write_text(json.dumps(SCENE))
    run_cli(["--config", str(scene_path), "--out-dir", str(out),
             "spectrum", "-M", "2", "--order", "10", "--step-deg", "3"], out)
    run_cli(["--config", str(scene_path), "--out-dir", str(out),
             "attitude", "-M", "2", "--order", "12", "--mode", "known",
             "--true-doas"], out)
    experiment = {
        "scene": SCENE,
        "sweep_variable": "noise_power",
        "sweep_values": [1e-4, 1e-3],
        "trials": 2,
        "methods": ["tri", "crlb"],
        "attitude_mode": "known",
        "order": 10,
        "window_margin_deg": 6.0,
        "master_seed": 3,
    }
    exp_path = out / "experiment.json"
    exp_path.write_text(json.dumps(experiment))
    run_cli(["--config", str(exp_path), "--out-dir", str(out), "sweep"], out)
    return out


def spec_doc(kind, inputs, output, **extra):
    return {"kind": kind, "inputs": inputs, "output": str(output), **extra}


@pytest.mark.parametrize("fmt", ["png", "svg"])
def test_spectrum_heatmap(exports, tmp_path, fmt):
    out = tmp_path / f"heatmap.{fmt}"
    spec = PlotSpec(**spec_doc(
        "spectrum-heatmap",
        {"spectrum_csv": str(exports / "spectrum.csv"),
         "meta_json": str(exports / "spectrum.csv.meta.json")},
        out,
    ))
    render(spec)
    assert out.exists() and out.stat().st_size > 0


def test_mse_curve_with_crlb_overlay(exports, tmp_path):
    out = tmp_path / "mse.png"
    spec = PlotSpec(**spec_doc(
        "mse-curve", {"records_csv": str(exports / "records.csv")}, out,
    ))
    render(spec)
    assert out.exists() and out.stat().st_size > 0


def test_mae_curve(exports, tmp_path):
    out = tmp_path / "mae.png"
    spec = PlotSpec(**spec_doc(
        "mae-curve", {"records_csv": str(exports / "records.csv")}, out,
        x_scale="log", y_scale="linear",
    ))
    render(spec)
    assert out.exists() and out.stat().st_size > 0


def test_ambiguity_plot(exports, tmp_path):
    out = tmp_path / "ambiguity.png"
    spec = PlotSpec(**spec_doc(
        "ambiguity-3d", {"attitude_json": str(exports / "attitude.json")}, out,
    ))
    render(spec)
    assert out.exists() and out.stat().st_size > 0


@pytest.mark.parametrize("fmt", ["png", "svg"])
def test_rendering_is_deterministic(exports, tmp_path, fmt):
    a = tmp_path / f"a.{fmt}"
    b = tmp_path / f"b.{fmt}"
    for out in (a, b):
        render(PlotSpec(**spec_doc(
            "spectrum-heatmap",
            {"spectrum_csv": str(exports / "spectrum.csv")},
            out,
        )))
    assert a.read_bytes() == b.read_bytes()


def test_inputs_never_modified(exports, tmp_path):
    csv_path = exports / "records.csv"
    before = csv_path.read_bytes()
    render(PlotSpec(**spec_doc(
        "mse-curve", {"records_csv": str(csv_path)}, tmp_path / "x.png",
    )))
    assert csv_path.read_bytes() == before


def test_header_only_csv_warns_and_renders(tmp_path):
    empty = tmp_path / "empty.csv"
    empty.write_text("theta,phi,value,normalized\n")
    out = tmp_path / "empty.png"
    with pytest.warns(UserWarning):
        render(PlotSpec(**spec_doc(
            "spectrum-heatmap", {"spectrum_csv": str(empty)}, out,
        )))
    assert out.exists()


def test_schema_mismatch_names_column(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("theta,value\n0.1,2.0\n")
    with pytest.raises(RenderError, match="phi"):
        render(PlotSpec(**spec_doc(
            "spectrum-heatmap", {"spectrum_csv": str(bad)}, tmp_path / "x.png",
        )))
    records_bad = tmp_path / "records.csv"
    records_bad.write_text("sweep_variable,sweep_value,method\nnoise_power,0.1,tri\n")
    with pytest.raises(RenderError, match="mse_theta"):
        render(PlotSpec(**spec_doc(
            "mse-curve", {"records_csv": str(records_bad)}, tmp_path / "y.png",
        )))


def test_spec_validation(tmp_path):
    with pytest.raises(RenderError, match="kind"):
        PlotSpec(kind="pie", inputs={}, output="x.png")
    spec_path = tmp_path / "spec.json"
    spec_path.write_text(json.dumps({"kind": "mse-curve", "inputs": {},
                                     "output": "o.png", "bogus": 1}))
    with pytest.raises(RenderError, match="bogus"):
        load_spec(spec_path)
    with pytest.raises(RenderError, match="records_csv"):
        render(PlotSpec(kind="mse-curve", inputs={}, output=str(tmp_path / "z.png")))


def test_cli_render(exports, tmp_path):
    spec_path = tmp_path / "spec.json"
    out = tmp_path / "cli.png"
    spec_path.write_text(json.dumps(spec_doc(
        "mse-curve", {"records_csv": str(exports / "records.csv")}, out,
    )))
    result = subprocess.run(
        [sys.executable, "-m", "capafigs.cli", "render", "--spec", str(spec_path)],
        capture_output=True, text=True,
    )
    assert result.returncode == 0, result.stderr
    assert out.exists()
    # spec errors exit with code 2
    bad = tmp_path / "badspec.json"
    bad.write_text(json.dumps({"kind": "nope", "inputs": {}, "output": "x.png"}))
    result = subprocess.run(
        [sys.executable, "-m", "capafigs.cli", "render", "--spec", str(bad)],
        capture_output=True, text=True,
    )
    assert result.returncode == 2


def test_acceptance_criterion_10(exports, tmp_path):
    """All preset-style outputs render without error, twice byte-identical."""
    jobs = [
        ("spectrum-heatmap", {"spectrum_csv": str(exports / "spectrum.csv"),
                              "meta_json": str(exports / "spectrum.csv.meta.json")}),
        ("mse-curve", {"records_csv": str(exports / "records.csv")}),
        ("mae-curve", {"records_csv": str(exports / "records.csv")}),
        ("ambiguity-3d", {"attitude_json": str(exports / "attitude.json")}),
    ]
    for kind, inputs in jobs:
        first = tmp_path / f"{kind}-1.png"
        second = tmp_path / f"{kind}-2.png"
        extra = {"y_scale": "linear"} if kind != "mse-curve" else {}
        render(PlotSpec(**spec_doc(kind, inputs, first, **extra)))
        render(PlotSpec(**spec_doc(kind, inputs, second, **extra)))
        assert first.read_bytes() == second.read_bytes()
    print("PASS criterion 10: all four figure kinds render deterministically")
