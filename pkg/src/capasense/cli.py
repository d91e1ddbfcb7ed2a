"""Command-line interface.

Subcommands: synth, doa, attitude, spectrum, crlb, sweep, presets.
Exit codes: 0 success, 2 configuration error, 3 estimation failure,
4 I/O error.  Angles are radians unless --degrees is given.
"""

import functools
import json
import sys
from pathlib import Path

import click
import numpy as np

from . import export as export_mod
from .attitude import AttitudeEstimator
from .baselines import crlb as crlb_op
from .exceptions import (CapaError, ConfigurationError, EstimationError,
                         ExportError)
from .experiments import (PRESET_NAMES, build_preset, config_from_dict,
                          run_trials)
from .field import dump_field_csv, dump_field_json, simulate
from .music import TriPolarizedMusic
from .scene import load_scene
from .signals import random_currents, snapshot_signals


def _fail(code, message):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def handle_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except ConfigurationError as exc:
            _fail(2, exc)
        except (EstimationError, CapaError) as exc:
            if isinstance(exc, ExportError):
                _fail(4, exc)
            _fail(3, exc)
        except OSError as exc:
            _fail(4, exc)
    return wrapper


@click.group()
@click.option("--config", "config_path", type=click.Path(), default=None,
              help="Scene JSON (synth/doa/attitude/spectrum/crlb) or experiment JSON (sweep).")
@click.option("--seed", type=int, default=None, help="Override the configured seed.")
@click.option("--workers", type=int, default=1, show_default=True)
@click.option("--out-dir", type=click.Path(), default=".", show_default=True)
@click.option("--degrees", is_flag=True, help="Accept and report angles in degrees.")
@click.pass_context
def main(ctx, config_path, seed, workers, out_dir, degrees):
    """Tri-polarized continuous-aperture DOA and attitude sensing."""
    ctx.ensure_object(dict)
    ctx.obj.update(
        config_path=config_path, seed=seed, workers=workers,
        out_dir=Path(out_dir), degrees=degrees,
    )


def _require_scene(ctx):
    path = ctx.obj["config_path"]
    if path is None:
        raise ConfigurationError("--config <scene.json> is required")
    scene = load_scene(path)
    if ctx.obj["seed"] is not None:
        scene = scene.replace(seed=ctx.obj["seed"])
    return scene


def _angles_out(ctx, angles):
    if ctx.obj["degrees"]:
        return np.rad2deg(angles).tolist()
    return np.asarray(angles).tolist()


def _simulate(ctx, scene, order):
    import warnings
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return simulate(scene, order)


@main.command()
@click.option("--order", type=int, default=16, show_default=True)
@click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default="csv",
              show_default=True)
@click.pass_context
@handle_errors
def synth(ctx, order, fmt):
    """Synthesize the received field and dump it for debugging."""
    scene = _require_scene(ctx)
    _, _, field = _simulate(ctx, scene, order)
    out = ctx.obj["out_dir"] / f"field.{fmt}"
    out.parent.mkdir(parents=True, exist_ok=True)
    if fmt == "csv":
        dump_field_csv(field, out)
    else:
        dump_field_json(field, out)
    click.echo(f"wrote {out}")


def _doa_options(fn):
    fn = click.option("--targets", "-M", type=int, required=True)(fn)
    fn = click.option("--order", type=int, default=16, show_default=True)(fn)
    fn = click.option("--step-deg", type=float, default=1.0, show_default=True)(fn)
    fn = click.option("--unweighted", is_flag=True,
                      help="Drop quadrature weights from the spectrum inner product.")(fn)
    return fn


@main.command()
@_doa_options
@click.pass_context
@handle_errors
def doa(ctx, targets, order, step_deg, unweighted):
    """Estimate DOAs with tri-polarized MUSIC."""
    scene = _require_scene(ctx)
    _, _, field = _simulate(ctx, scene, order)
    est = TriPolarizedMusic(
        n_targets=targets, coarse_step_deg=step_deg, weighted=not unweighted
    ).fit(field)
    doc = est.doas_.to_dict()
    doc["truth_rad"] = scene.doas.tolist()
    out = ctx.obj["out_dir"] / "doa.json"
    out.parent.mkdir(parents=True, exist_ok=True)
    export_mod.export_json(doc, out)
    click.echo(json.dumps({"angles": _angles_out(ctx, est.doas_.angles)}))
    click.echo(f"wrote {out}")


@main.command()
@_doa_options
@click.option("--mode", type=click.Choice(["blind", "known"]), default="blind",
              show_default=True)
@click.option("--true-doas", is_flag=True, help="Use ground-truth DOAs.")
@click.pass_context
@handle_errors
def attitude(ctx, targets, order, step_deg, unweighted, mode, true_doas):
    """Estimate target attitudes (blind or known-snapshot)."""
    scene = _require_scene(ctx)
    currents = random_currents(scene)
    snapshots = snapshot_signals(scene, currents)
    import warnings
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        grid, _, field = simulate(scene, order, currents=currents)
    if true_doas:
        doas = scene.doas
    else:
        doas = TriPolarizedMusic(
            n_targets=targets, coarse_step_deg=step_deg, weighted=not unweighted
        ).fit(field).doas_
    est = AttitudeEstimator(mode=mode).fit(
        field, doas=doas,
        snapshots=snapshots.signals if mode == "known" else None,
    )
    # attitudes follow the DOA-estimate order; map back to scene targets
    from .metrics import assign_estimates
    angles = doas if true_doas else doas.angles
    perm = assign_estimates(angles, scene.doas)
    doc = {
        "mode": mode,
        "attitudes": [
            a.to_dict(truth=scene.targets[perm[i]].attitude)
            for i, a in enumerate(est.attitudes_)
        ],
    }
    out = ctx.obj["out_dir"] / "attitude.json"
    out.parent.mkdir(parents=True, exist_ok=True)
    export_mod.export_json(doc, out)
    click.echo(f"wrote {out}")


@main.command()
@_doa_options
@click.pass_context
@handle_errors
def spectrum(ctx, targets, order, step_deg, unweighted):
    """Scan the tri-polarized spectrum and export it as CSV."""
    scene = _require_scene(ctx)
    _, _, field = _simulate(ctx, scene, order)
    est = TriPolarizedMusic(
        n_targets=targets, coarse_step_deg=step_deg, weighted=not unweighted
    ).fit(field)
    grid = est.spectrum()
    out = ctx.obj["out_dir"] / "spectrum.csv"
    out.parent.mkdir(parents=True, exist_ok=True)
    export_mod.export_spectrum_csv(grid, out, truths=scene.doas)
    click.echo(f"wrote {out}")


@main.command()
@click.option("--order", type=int, default=16, show_default=True)
@click.pass_context
@handle_errors
def crlb(ctx, order):
    """Cramer-Rao lower bounds for the configured scene."""
    scene = _require_scene(ctx)
    snapshots = snapshot_signals(scene, random_currents(scene))
    report = crlb_op(scene, snapshots, order=order)
    out = ctx.obj["out_dir"] / "crlb.json"
    out.parent.mkdir(parents=True, exist_ok=True)
    export_mod.export_json(report.to_dict(), out)
    click.echo(f"wrote {out}")


@main.command()
@click.option("--preset", type=click.Choice(PRESET_NAMES), default=None,
              help="Run a named study preset instead of --config.")
@click.option("--trials", type=int, default=None, help="Override trial count.")
@click.pass_context
@handle_errors
def sweep(ctx, preset, trials):
    """Run a full Monte Carlo study and export CSV + JSON records."""
    overrides = {}
    if ctx.obj["workers"] > 1:
        overrides["workers"] = ctx.obj["workers"]
    if trials is not None:
        overrides["trials"] = trials
    if ctx.obj["seed"] is not None:
        overrides["master_seed"] = ctx.obj["seed"]
    if preset is not None:
        config = build_preset(preset, **overrides)
    else:
        path = ctx.obj["config_path"]
        if path is None:
            raise ConfigurationError("sweep requires --config or --preset")
        with open(path, "r", encoding="utf-8") as fh:
            try:
                data = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigurationError(f"invalid experiment JSON: {exc}") from exc
        data.update(overrides)
        config = config_from_dict(data)
    records = run_trials(config)
    out_dir = ctx.obj["out_dir"]
    out_dir.mkdir(parents=True, exist_ok=True)
    export_mod.export_records_csv(records, out_dir / "records.csv")
    export_mod.export_records_json(config, records, out_dir / "records.json")
    click.echo(f"wrote {out_dir / 'records.csv'} and {out_dir / 'records.json'}")


@main.command()
@handle_errors
def presets():
    """List available study presets."""
    for name in PRESET_NAMES:
        click.echo(name)


if __name__ == "__main__":
    main()
