"""capasense: joint DOA and attitude sensing with tri-polarized
continuous-aperture arrays.

The package simulates the continuous received field of dipole targets on a
rectangular aperture via Gauss-Legendre quadrature, estimates directions of
arrival with an equivalent continuous-discrete MUSIC pipeline over all nine
polarization covariance pairs, recovers target attitudes with and without
known snapshots, and benchmarks against a discrete half-wavelength array,
single-polarization MUSIC and the Cramer-Rao bound.
"""

from .attitude import (AttitudeEstimate, AttitudeEstimator, assemble_gm,
                       estimate_attitude_blind, estimate_attitude_known,
                       estimate_attitudes, estimate_gamma,
                       interleave_snapshots, q_matrix, q_matrix_fft,
                       q_matrix_series, xi_matrix, xi_matrix_matched)
from .baselines import (CrlbReport, DiscreteArrayMusic, SpdaConfig, crlb,
                        sample_discrete_array, singlepol_music, spda_config,
                        spda_music)
from .exceptions import (AttitudeInconsistencyError, CapaError,
                         ConfigurationError, EstimationError, ExportError,
                         IllConditionedRecoveryError, SingularFimError,
                         SingularSystemError, UnderDetectionError,
                         UnidentifiableAttitudeError, UnsupportedModeError,
                         ZeroSnapshotError)
from .experiments import (ExperimentConfig, MetricRecord, PRESET_NAMES,
                          build_preset, config_from_dict, reference_scene,
                          run_trials, trial_seed)
from .export import (export_records_csv, export_records_json,
                     export_spectrum_csv, read_records_json)
from .field import (FieldSamples, POLAR_AXES, UniformFieldSamples,
                    dump_field_csv, dump_field_json, simulate,
                    steering_matrix, steering_sample, synthesize_field,
                    synthesize_field_uniform)
from .geometry import (angular_separation, doa_from_position,
                       polarization_vector, vector_angle, wave_vector,
                       wrap_azimuth)
from .metrics import (MaeResult, MseResult, assign_estimates,
                      half_power_width, mae_metric, mse_metric)
from .music import (DOAEstimate, EquivCov, NoiseSubspace, SpectrumGrid,
                    TriPolarizedMusic, all_polar_pairs, decompose_pairs,
                    equivalent_covariance, estimate_doa, rank_collapsed,
                    scan_spectrum, spectrum_value, subspace_split)
from .quadrature import (NodeGrid, QuadratureRule, build_node_grid,
                         gauss_legendre_rule)
from .scene import (ApertureConfig, Scene, Target, load_scene, save_scene,
                    scene_from_dict)
from .search import GridSpec, window_grid
from .signals import SnapshotSeries, random_currents, snapshot_signals

__version__ = "0.1.0"
