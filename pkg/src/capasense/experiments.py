"""Monte Carlo experiment harness: sweeps, trials, seeds and metric records.

Child seeds derive from the master seed by a counter scheme,
``SeedSequence((master_seed, sweep_index, trial_index))``, so each trial is
reproducible in isolation and results are independent of worker scheduling.
Failed trials are recorded and excluded from the metrics, never aborting a
sweep.
"""

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .attitude import AttitudeEstimator
from .baselines import DiscreteArrayMusic, crlb, singlepol_music
from .exceptions import CapaError, ConfigurationError
from .field import simulate
from .metrics import mae_metric, mse_metric
from .music import TriPolarizedMusic
from .scene import ApertureConfig, Scene, Target, scene_from_dict
from .search import window_grid
from .signals import random_currents, snapshot_signals

SWEEP_VARIABLES = (
    "noise_power",
    "snapshots",
    "quadrature_order",
    "aperture_side",
    "target_count",
)
METHODS = ("tri", "singlepol", "spda", "crlb")


@dataclass(frozen=True)
class ExperimentConfig:
    scene: Scene
    sweep_variable: str
    sweep_values: tuple
    trials: int = 100
    methods: tuple = ("tri",)
    attitude_mode: str = "off"
    order: int = 16
    master_seed: int = 20240501
    workers: int = 1
    window_margin_deg: float = 8.0
    coarse_step_deg: float = 1.0
    min_separation_deg: float = 3.0
    use_true_doas_for_attitude: bool = False
    current_kind: str = "unit_phase"
    timing: bool = False

    def __post_init__(self):
        if self.sweep_variable not in SWEEP_VARIABLES:
            raise ConfigurationError(
                f"sweep_variable must be one of {SWEEP_VARIABLES}, got {self.sweep_variable!r}"
            )
        if not self.sweep_values:
            raise ConfigurationError("sweep_values must be nonempty")
        if self.trials < 1:
            raise ConfigurationError("trials must be >= 1")
        unknown = set(self.methods) - set(METHODS)
        if unknown:
            raise ConfigurationError(f"unknown methods {sorted(unknown)}")
        if self.attitude_mode not in ("off", "blind", "known"):
            raise ConfigurationError(f"unknown attitude_mode {self.attitude_mode!r}")
        object.__setattr__(self, "sweep_values", tuple(self.sweep_values))
        object.__setattr__(self, "methods", tuple(self.methods))

    def to_dict(self):
        return {
            "scene": self.scene.to_dict(),
            "sweep_variable": self.sweep_variable,
            "sweep_values": list(self.sweep_values),
            "trials": self.trials,
            "methods": list(self.methods),
            "attitude_mode": self.attitude_mode,
            "order": self.order,
            "master_seed": self.master_seed,
            "workers": self.workers,
            "window_margin_deg": self.window_margin_deg,
            "coarse_step_deg": self.coarse_step_deg,
            "min_separation_deg": self.min_separation_deg,
            "use_true_doas_for_attitude": self.use_true_doas_for_attitude,
            "current_kind": self.current_kind,
            "timing": self.timing,
        }


def config_from_dict(data):
    try:
        scene = scene_from_dict(data["scene"])
        kwargs = {k: data[k] for k in data if k != "scene"}
        kwargs["sweep_values"] = tuple(kwargs.get("sweep_values", ()))
        kwargs["methods"] = tuple(kwargs.get("methods", ("tri",)))
        return ExperimentConfig(scene=scene, **kwargs)
    except (KeyError, TypeError) as exc:
        raise ConfigurationError(f"invalid experiment config: {exc}") from exc


@dataclass
class MetricRecord:
    """Aggregated metrics for one (sweep value, method) cell."""

    sweep_variable: str
    sweep_value: float
    method: str
    mse_theta: float = None
    mse_phi: float = None
    mse_theta_per_target: tuple = None
    mse_phi_per_target: tuple = None
    mae: float = None
    mae_worst: float = None
    ambiguity_rate: float = None
    crlb_theta: float = None
    crlb_phi: float = None
    crlb_theta_per_target: tuple = None
    crlb_phi_per_target: tuple = None
    n_trials: int = 0
    n_failed: int = 0
    wall_seconds: float = field(default=None, compare=False)

    def to_dict(self, include_timing=False):
        doc = {
            "sweep_variable": self.sweep_variable,
            "sweep_value": self.sweep_value,
            "method": self.method,
            "mse_theta": self.mse_theta,
            "mse_phi": self.mse_phi,
            "mse_theta_per_target": list(self.mse_theta_per_target)
            if self.mse_theta_per_target is not None else None,
            "mse_phi_per_target": list(self.mse_phi_per_target)
            if self.mse_phi_per_target is not None else None,
            "mae": self.mae,
            "mae_worst": self.mae_worst,
            "ambiguity_rate": self.ambiguity_rate,
            "crlb_theta": self.crlb_theta,
            "crlb_phi": self.crlb_phi,
            "crlb_theta_per_target": list(self.crlb_theta_per_target)
            if self.crlb_theta_per_target is not None else None,
            "crlb_phi_per_target": list(self.crlb_phi_per_target)
            if self.crlb_phi_per_target is not None else None,
            "n_trials": self.n_trials,
            "n_failed": self.n_failed,
        }
        if include_timing:
            doc["wall_seconds"] = self.wall_seconds
        return doc


def record_from_dict(data):
    kwargs = dict(data)
    for key in ("mse_theta_per_target", "mse_phi_per_target",
                "crlb_theta_per_target", "crlb_phi_per_target"):
        if kwargs.get(key) is not None:
            kwargs[key] = tuple(kwargs[key])
    kwargs.setdefault("wall_seconds", None)
    return MetricRecord(**kwargs)


def trial_seed(master_seed, sweep_index, trial_index):
    """Deterministic child seed for one trial."""
    ss = np.random.SeedSequence((master_seed, sweep_index, trial_index))
    return int(ss.generate_state(1, np.uint64)[0])


def scene_for_value(config, value):
    """Scene and quadrature order realizing one sweep value."""
    scene = config.scene
    order = config.order
    var = config.sweep_variable
    if var == "noise_power":
        scene = scene.replace(noise_power=float(value))
    elif var == "snapshots":
        scene = scene.replace(snapshots=int(value))
    elif var == "quadrature_order":
        order = int(value)
    elif var == "aperture_side":
        ap = scene.aperture
        scene = scene.replace(
            aperture=ApertureConfig(
                length_x=float(value), length_y=float(value),
                wavelength=ap.wavelength, impedance=ap.impedance,
            )
        )
    elif var == "target_count":
        count = int(value)
        if count > scene.n_targets:
            raise ConfigurationError(
                f"scene template has {scene.n_targets} targets, sweep asks for {count}"
            )
        scene = scene.replace(targets=scene.targets[:count])
    return scene, order


def _search_grid(config, scene):
    if config.window_margin_deg is None:
        return None
    margin = np.deg2rad(config.window_margin_deg)
    step = np.deg2rad(config.coarse_step_deg)
    return [window_grid(tuple(doa), margin, step) for doa in scene.doas]


@dataclass(frozen=True)
class _TrialTask:
    scene: Scene
    order: int
    methods: tuple
    attitude_mode: str
    use_true_doas: bool
    current_kind: str
    grid: object
    coarse_step_deg: float
    min_separation_deg: float


def run_single_trial(task):
    """Run all configured methods for one synthesized trial.

    Returns a dict with per-method angle arrays (or error strings) and,
    when enabled, per-target attitude outputs.
    """
    scene = task.scene
    out = {"seed": scene.seed}
    currents = random_currents(scene, kind=task.current_kind)
    snapshots = snapshot_signals(scene, currents)
    import warnings as _warnings
    with _warnings.catch_warnings():
        _warnings.simplefilter("ignore")
        grid, _, fieldsamples = simulate(scene, task.order, currents=currents)
    m = scene.n_targets
    tri_doas = None
    common = dict(grid=task.grid, coarse_step_deg=task.coarse_step_deg,
                  min_separation_deg=task.min_separation_deg)
    if "tri" in task.methods:
        try:
            est = TriPolarizedMusic(n_targets=m, **common).fit(fieldsamples)
            tri_doas = est.doas_
            out["tri"] = est.doas_.angles.tolist()
        except CapaError as exc:
            out["tri_error"] = str(exc)
    if "singlepol" in task.methods:
        try:
            doas = singlepol_music(fieldsamples, m, **common)
            out["singlepol"] = doas.angles.tolist()
        except CapaError as exc:
            out["singlepol_error"] = str(exc)
    if "spda" in task.methods:
        try:
            est = DiscreteArrayMusic(n_targets=m, **common).fit(scene, snapshots=snapshots)
            out["spda"] = est.doas_.angles.tolist()
        except CapaError as exc:
            out["spda_error"] = str(exc)
    if task.attitude_mode != "off":
        doa_input = scene.doas if task.use_true_doas else (
            tri_doas.angles if tri_doas is not None else None
        )
        if doa_input is None:
            out["attitude_error"] = "no DOA estimates available"
        else:
            try:
                kwargs = {}
                if task.attitude_mode == "known":
                    kwargs["snapshots"] = snapshots.signals
                est = AttitudeEstimator(mode=task.attitude_mode).fit(
                    fieldsamples, doas=doa_input, **kwargs
                )
                if task.attitude_mode == "blind":
                    out["attitude"] = [a.perpendicular.tolist() for a in est.attitudes_]
                else:
                    out["attitude"] = [
                        [a.candidates[0].tolist(), a.candidates[1].tolist()]
                        for a in est.attitudes_
                    ]
                # align attitude entries with ground-truth target order
                if not task.use_true_doas and tri_doas is not None:
                    from .metrics import assign_estimates
                    perm = assign_estimates(tri_doas.angles, scene.doas)
                    aligned = [None] * m
                    for i, j in enumerate(perm):
                        aligned[j] = out["attitude"][i]
                    out["attitude"] = aligned
            except CapaError as exc:
                out["attitude_error"] = str(exc)
    return out


def _aggregate(config, sweep_value, scene, trials_out, crlb_report, elapsed):
    records = []
    truths = scene.doas
    for method in config.methods:
        if method == "crlb":
            continue
        estimates = [
            np.asarray(t[method]) if method in t else None for t in trials_out
        ]
        res = mse_metric(truths, estimates)
        rec = MetricRecord(
            sweep_variable=config.sweep_variable,
            sweep_value=float(sweep_value),
            method=method,
            mse_theta=res.mse_theta,
            mse_phi=res.mse_phi,
            mse_theta_per_target=res.per_target_theta,
            mse_phi_per_target=res.per_target_phi,
            n_trials=res.n_used,
            n_failed=res.n_excluded,
            wall_seconds=elapsed,
        )
        if method == "tri" and config.attitude_mode != "off":
            if config.attitude_mode == "blind":
                truth_vecs = [
                    t.polarization / np.linalg.norm(t.polarization)
                    for t in scene.targets
                ]
            else:
                truth_vecs = [t.attitude for t in scene.targets]
            attitude_trials = [t.get("attitude") for t in trials_out]
            mae = mae_metric(truth_vecs, attitude_trials, config.attitude_mode)
            rec.mae = mae.mae
            rec.mae_worst = mae.mae_worst
            rec.ambiguity_rate = mae.ambiguity_rate
        records.append(rec)
    if "crlb" in config.methods and crlb_report is not None:
        records.append(
            MetricRecord(
                sweep_variable=config.sweep_variable,
                sweep_value=float(sweep_value),
                method="crlb",
                crlb_theta=float(np.sum(crlb_report.theta_bounds)),
                crlb_phi=float(np.sum(crlb_report.phi_bounds)),
                crlb_theta_per_target=tuple(map(float, crlb_report.theta_bounds)),
                crlb_phi_per_target=tuple(map(float, crlb_report.phi_bounds)),
                n_trials=config.trials,
                wall_seconds=elapsed,
            )
        )
    return records


def run_trials(config):
    """Execute the full sweep; returns a list of MetricRecord."""
    records = []
    for si, value in enumerate(config.sweep_values):
        start = time.perf_counter()
        scene, order = scene_for_value(config, value)
        grid = _search_grid(config, scene)
        tasks = [
            _TrialTask(
                scene=scene.replace(seed=trial_seed(config.master_seed, si, ti)),
                order=order,
                methods=config.methods,
                attitude_mode=config.attitude_mode,
                use_true_doas=config.use_true_doas_for_attitude,
                current_kind=config.current_kind,
                grid=grid,
                coarse_step_deg=config.coarse_step_deg,
                min_separation_deg=config.min_separation_deg,
            )
            for ti in range(config.trials)
        ]
        if config.workers > 1:
            with ProcessPoolExecutor(max_workers=config.workers) as pool:
                trials_out = list(pool.map(run_single_trial, tasks))
        else:
            trials_out = [run_single_trial(t) for t in tasks]
        crlb_report = None
        if "crlb" in config.methods and scene.noise_power > 0:
            currents = random_currents(tasks[0].scene, kind=config.current_kind)
            snapshots = snapshot_signals(tasks[0].scene, currents)
            crlb_report = crlb(tasks[0].scene, snapshots, order=order)
        elapsed = time.perf_counter() - start
        records.extend(
            _aggregate(config, value, scene, trials_out, crlb_report, elapsed)
        )
    return records


# ---------------------------------------------------------------------------
# Reference scenes and study presets
# ---------------------------------------------------------------------------

def reference_scene(n_targets=2, noise_power=1e-3, snapshots=500, seed=0,
                    aperture_side=2.0):
    """The benchmark two- or three-target scene.

    Positions [-16, -10, 50], [16, -38, 40], [18, 7.5, 18] m with attitudes
    [0.8, 0.6, 0], [-0.1, 0.7, 0.7071], [-0.8, 0.2, -0.57] (normalized at
    construction), aperture 2 m x 2 m, wavelength 0.1 m.
    """
    aperture = ApertureConfig(length_x=aperture_side, length_y=aperture_side,
                              wavelength=0.1)
    specs = [
        ([-16.0, -10.0, 50.0], [0.8, 0.6, 0.0]),
        ([16.0, -38.0, 40.0], [-0.1, 0.7, 0.7071]),
        ([18.0, 7.5, 18.0], [-0.8, 0.2, -0.57]),
    ][:n_targets]
    targets = [Target(position=p, attitude=a) for p, a in specs]
    return Scene(aperture=aperture, targets=targets, noise_power=noise_power,
                 snapshots=snapshots, seed=seed)


def build_preset(name, **overrides):
    """Named study configurations replicating the benchmark sweeps."""
    base = dict(order=16, master_seed=20240501)
    if name == "noise-sweep":
        cfg = dict(
            scene=reference_scene(), sweep_variable="noise_power",
            sweep_values=(1e-4, 1e-3, 1e-2), trials=100,
            methods=("tri", "singlepol", "spda", "crlb"),
        )
    elif name == "snapshot-sweep":
        cfg = dict(
            scene=reference_scene(), sweep_variable="snapshots",
            sweep_values=(500, 1000, 1500), trials=40,
            methods=("tri", "crlb"),
        )
    elif name == "aperture-sweep":
        cfg = dict(
            scene=reference_scene(), sweep_variable="aperture_side",
            sweep_values=(0.5, 1.0, 2.0), trials=20, methods=("tri",),
        )
    elif name == "quadrature-sweep":
        cfg = dict(
            scene=reference_scene(snapshots=100), sweep_variable="quadrature_order",
            sweep_values=tuple(range(5, 21)), trials=50, methods=("tri",),
        )
    elif name == "target-count":
        cfg = dict(
            scene=reference_scene(n_targets=3), sweep_variable="target_count",
            sweep_values=(1, 2, 3), trials=40, methods=("tri",),
        )
    elif name == "attitude-blind":
        cfg = dict(
            scene=reference_scene(snapshots=200), sweep_variable="noise_power",
            sweep_values=(1e-4, 1e-3, 1e-2), trials=50, methods=("tri",),
            attitude_mode="blind",
        )
    elif name == "attitude-known":
        cfg = dict(
            scene=reference_scene(snapshots=200), sweep_variable="noise_power",
            sweep_values=(1e-4, 1e-3, 1e-2), trials=50, methods=("tri",),
            attitude_mode="known",
        )
    else:
        raise ConfigurationError(f"unknown preset {name!r}")
    base.update(cfg)
    base.update(overrides)
    return ExperimentConfig(**base)


PRESET_NAMES = (
    "noise-sweep",
    "snapshot-sweep",
    "aperture-sweep",
    "quadrature-sweep",
    "target-count",
    "attitude-blind",
    "attitude-known",
)
