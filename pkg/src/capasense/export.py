"""Machine-readable result export (versioned schemas).

Exports are byte-deterministic for a fixed config and master seed: keys are
sorted, floats use ``repr`` and timing fields are omitted unless explicitly
requested.

Schema v1:
  records CSV   one row per (sweep value, method); columns as in
                ``RECORD_COLUMNS``.
  records JSON  {"schema_version": 1, "config": {...}, "records": [...]}.
  spectrum CSV  one row per (theta, phi) grid point with the linear and
                peak-normalized spectrum values.
"""

import csv
import json

from .exceptions import ExportError
from .experiments import record_from_dict

SCHEMA_VERSION = 1

RECORD_COLUMNS = (
    "sweep_variable",
    "sweep_value",
    "method",
    "mse_theta",
    "mse_phi",
    "mae",
    "mae_worst",
    "ambiguity_rate",
    "crlb_theta",
    "crlb_phi",
    "n_trials",
    "n_failed",
)


def _fmt(value):
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def export_records_csv(records, path):
    """Sweep-curve CSV, one row per sweep value per method."""
    try:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(RECORD_COLUMNS)
            for rec in records:
                doc = rec.to_dict()
                writer.writerow([_fmt(doc[c]) for c in RECORD_COLUMNS])
    except OSError as exc:
        raise ExportError(path, exc) from exc


def export_records_json(config, records, path):
    """Full records with config echo; includes per-target detail."""
    include_timing = getattr(config, "timing", False)
    doc = {
        "schema_version": SCHEMA_VERSION,
        "config": config.to_dict() if config is not None else None,
        "records": [r.to_dict(include_timing=include_timing) for r in records],
    }
    try:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=2, sort_keys=True)
            fh.write("\n")
    except OSError as exc:
        raise ExportError(path, exc) from exc


def read_records_json(path):
    """Load an exported records document; returns (config_dict, records)."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ExportError(path, exc) from exc
    records = [record_from_dict(r) for r in doc.get("records", [])]
    return doc.get("config"), records


def export_spectrum_csv(grid, path, truths=None):
    """Dense spectrum dump: theta, phi, value, normalized value."""
    norm = grid.normalized()
    try:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["theta", "phi", "value", "normalized"])
            for i, t in enumerate(grid.theta):
                for j, p in enumerate(grid.phi):
                    writer.writerow(
                        [repr(float(t)), repr(float(p)),
                         repr(float(grid.values[i, j])), repr(float(norm[i, j]))]
                    )
    except OSError as exc:
        raise ExportError(path, exc) from exc
    if truths is not None:
        meta = {
            "schema_version": SCHEMA_VERSION,
            "truth_angles_rad": [[float(a), float(b)] for a, b in truths],
            "mode": grid.mode,
        }
        side = str(path) + ".meta.json"
        try:
            with open(side, "w", encoding="utf-8") as fh:
                json.dump(meta, fh, indent=2, sort_keys=True)
                fh.write("\n")
        except OSError as exc:
            raise ExportError(side, exc) from exc


def export_json(payload, path):
    """Generic deterministic JSON dump used by the CLI subcommands."""
    try:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")
    except OSError as exc:
        raise ExportError(path, exc) from exc
