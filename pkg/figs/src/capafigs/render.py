"""Render paper-style figures from capasense CSV/JSON exports.

Four plot kinds are supported:

* ``spectrum-heatmap``: normalized spectrum over (azimuth, elevation) from a
  spectrum CSV, with ground-truth markers when the sidecar metadata JSON is
  present.
* ``mse-curve``: per-method MSE curves (with the CRLB overlay when exported)
  against the sweep variable, log-log by default.
* ``mae-curve``: attitude mean-angular-error curves.
* ``ambiguity-3d``: the two mirrored attitude candidates of each target
  around the propagation direction.

Rendering is deterministic: fixed style, no timestamps, pinned SVG hash
salt.  Inputs are never modified.
"""

import csv
import json
import warnings
from dataclasses import dataclass, field

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

PLOT_KINDS = ("spectrum-heatmap", "mse-curve", "mae-curve", "ambiguity-3d")

_STYLE = {
    "figure.figsize": (6.0, 4.5),
    "figure.dpi": 110,
    "savefig.dpi": 110,
    "font.size": 9,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "svg.hashsalt": "capasense-figs",
}

_METADATA = {"png": {"Software": "capasense-figs"},
             "svg": {"Date": None}}


class RenderError(Exception):
    """Bad plot spec or input schema (names the offending field/column)."""


@dataclass(frozen=True)
class PlotSpec:
    kind: str
    inputs: dict
    output: str
    x_scale: str = "log"
    y_scale: str = "log"
    title: str = None
    metric: str = "mse_theta"

    def __post_init__(self):
        if self.kind not in PLOT_KINDS:
            raise RenderError(f"unknown plot kind {self.kind!r}; expected one of {PLOT_KINDS}")
        if not isinstance(self.inputs, dict):
            raise RenderError("spec field 'inputs' must be an object")


def load_spec(path):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise RenderError(f"cannot read plot spec {path}: {exc}") from exc
    unknown = set(doc) - {"kind", "inputs", "output", "x_scale", "y_scale",
                          "title", "metric"}
    if unknown:
        raise RenderError(f"unknown spec fields {sorted(unknown)}")
    try:
        return PlotSpec(**doc)
    except TypeError as exc:
        raise RenderError(f"invalid plot spec: {exc}") from exc


def _read_csv(path):
    try:
        with open(path, "r", encoding="utf-8", newline="") as fh:
            rows = list(csv.DictReader(fh))
    except OSError as exc:
        raise RenderError(f"cannot read {path}: {exc}") from exc
    return rows


def _require_columns(rows, columns, path):
    if rows:
        have = rows[0].keys()
    else:
        with open(path, "r", encoding="utf-8", newline="") as fh:
            reader = csv.reader(fh)
            have = next(reader, [])
    missing = [c for c in columns if c not in have]
    if missing:
        raise RenderError(f"{path} is missing required column(s): {', '.join(missing)}")


def _save(fig, spec):
    fmt = str(spec.output).rsplit(".", 1)[-1].lower()
    metadata = _METADATA.get(fmt, None)
    fig.savefig(spec.output, format=fmt, metadata=metadata)
    plt.close(fig)


def _empty_figure(spec, message):
    warnings.warn(f"{spec.kind}: {message}; rendering empty axes")
    fig, ax = plt.subplots()
    ax.set_title(spec.title or spec.kind)
    ax.text(0.5, 0.5, message, ha="center", va="center", transform=ax.transAxes)
    _save(fig, spec)


def render_spectrum_heatmap(spec):
    path = spec.inputs.get("spectrum_csv")
    if path is None:
        raise RenderError("spectrum-heatmap requires inputs.spectrum_csv")
    rows = _read_csv(path)
    _require_columns(rows, ("theta", "phi", "normalized"), path)
    if not rows:
        _empty_figure(spec, "no spectrum samples")
        return
    thetas = np.array(sorted({float(r["theta"]) for r in rows}))
    phis = np.array(sorted({float(r["phi"]) for r in rows}))
    values = np.full((thetas.size, phis.size), np.nan)
    t_index = {t: i for i, t in enumerate(thetas)}
    p_index = {p: j for j, p in enumerate(phis)}
    for r in rows:
        values[t_index[float(r["theta"])], p_index[float(r["phi"])]] = float(
            r["normalized"]
        )
    fig, ax = plt.subplots()
    mesh = ax.pcolormesh(
        np.rad2deg(thetas), np.rad2deg(phis), values.T, shading="nearest",
        cmap="viridis", vmin=0.0,
    )
    fig.colorbar(mesh, ax=ax, label="normalized spectrum")
    meta_path = spec.inputs.get("meta_json")
    if meta_path:
        with open(meta_path, "r", encoding="utf-8") as fh:
            meta = json.load(fh)
        for t, p in meta.get("truth_angles_rad", []):
            ax.plot(np.rad2deg(t), np.rad2deg(p), marker="*", color="red",
                    markersize=12, markeredgecolor="white")
    ax.set_xlabel("azimuth (deg)")
    ax.set_ylabel("elevation (deg)")
    ax.set_title(spec.title or "Normalized spectrum")
    ax.grid(False)
    _save(fig, spec)


_CURVE_STYLE = {
    "tri": dict(color="#1f77b4", marker="o", label="tri-polarized"),
    "singlepol": dict(color="#ff7f0e", marker="s", label="single-pol (x)"),
    "spda": dict(color="#2ca02c", marker="^", label="discrete array"),
    "crlb": dict(color="black", linestyle="--", marker=None, label="CRLB"),
}


def _curve_figure(spec, rows, value_column, crlb_column, ylabel):
    fig, ax = plt.subplots()
    methods = sorted({r["method"] for r in rows})
    plotted = 0
    for method in methods:
        series = [
            (float(r["sweep_value"]), r[value_column if method != "crlb" else crlb_column])
            for r in rows if r["method"] == method
        ]
        series = [(x, float(y)) for x, y in series if y not in ("", None)]
        if not series:
            continue
        series.sort()
        xs, ys = zip(*series)
        style = dict(_CURVE_STYLE.get(method, dict(marker="x", label=method)))
        label = style.pop("label", method)
        ax.plot(xs, ys, label=label, **style)
        plotted += 1
    if plotted == 0:
        plt.close(fig)
        _empty_figure(spec, f"no rows with values in column {value_column!r}")
        return
    ax.set_xscale(spec.x_scale)
    ax.set_yscale(spec.y_scale)
    ax.set_xlabel(rows[0]["sweep_variable"] if rows else "sweep value")
    ax.set_ylabel(ylabel)
    ax.legend()
    ax.set_title(spec.title or ylabel)
    _save(fig, spec)


def render_mse_curve(spec):
    path = spec.inputs.get("records_csv")
    if path is None:
        raise RenderError("mse-curve requires inputs.records_csv")
    rows = _read_csv(path)
    metric = spec.metric
    if metric not in ("mse_theta", "mse_phi"):
        raise RenderError(f"mse-curve metric must be mse_theta or mse_phi, got {metric!r}")
    _require_columns(rows, ("sweep_variable", "sweep_value", "method", metric), path)
    if not rows:
        _empty_figure(spec, "no records")
        return
    crlb_col = "crlb_theta" if metric == "mse_theta" else "crlb_phi"
    _require_columns(rows, (crlb_col,), path)
    _curve_figure(spec, rows, metric, crlb_col, f"{metric} (rad^2)")


def render_mae_curve(spec):
    path = spec.inputs.get("records_csv")
    if path is None:
        raise RenderError("mae-curve requires inputs.records_csv")
    rows = _read_csv(path)
    _require_columns(rows, ("sweep_variable", "sweep_value", "method", "mae"), path)
    if not rows:
        _empty_figure(spec, "no records")
        return
    rows = [r for r in rows if r["mae"] not in ("", None)]
    _curve_figure(spec, rows, "mae", "mae", "attitude MAE (rad)")


def render_ambiguity_3d(spec):
    path = spec.inputs.get("attitude_json")
    if path is None:
        raise RenderError("ambiguity-3d requires inputs.attitude_json")
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise RenderError(f"cannot read {path}: {exc}") from exc
    attitudes = doc.get("attitudes")
    if attitudes is None:
        raise RenderError(f"{path} is missing the 'attitudes' field")
    fig = plt.figure()
    ax = fig.add_subplot(projection="3d")
    drew = False
    for i, entry in enumerate(attitudes):
        cands = entry.get("candidates")
        direction = entry.get("direction")
        if not cands:
            continue
        drew = True
        for j, cand in enumerate(cands):
            ax.quiver(0, 0, 0, *cand, color=f"C{i}",
                      label=f"target {i} candidates" if j == 0 else None,
                      arrow_length_ratio=0.08)
        if direction:
            ax.plot([0, direction[0]], [0, direction[1]], [0, direction[2]],
                    color=f"C{i}", linestyle=":", alpha=0.6)
    if not drew:
        plt.close(fig)
        _empty_figure(spec, "no attitude candidates to draw")
        return
    ax.set_xlim(-1, 1)
    ax.set_ylim(-1, 1)
    ax.set_zlim(-1, 1)
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    ax.set_zlabel("z")
    ax.legend(loc="upper left")
    ax.set_title(spec.title or "Attitude candidates (mirror ambiguity)")
    _save(fig, spec)


_RENDERERS = {
    "spectrum-heatmap": render_spectrum_heatmap,
    "mse-curve": render_mse_curve,
    "mae-curve": render_mae_curve,
    "ambiguity-3d": render_ambiguity_3d,
}


def render(spec):
    """Render one PlotSpec to its output image file."""
    with plt.rc_context(_STYLE):
        _RENDERERS[spec.kind](spec)
    return spec.output
