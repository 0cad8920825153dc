"""Time separation, stable time separation and maximizing geodesics on
conformally flat Lorentzian tori."""
from .checks import CheckResult, VerifySettings, run_checks
from .conformal import ConformalFactor, FourierMode, TorusModel
from .config import ConfigError, ModelConfig, load_config, parse_config
from .flow import (GeodesicArc, ShootingResult, integrate, lift_path, project_to_torus,
                   shoot_to_target)
from .geometry import (ConeConstants, ConeSpec, DomainError, Lattice, MinkowskiSpace,
                       causal_lattice_shift, estimate_cone_constants)
from .separation import (AlmostMaximalSpec, CausalPath, DistanceEstimate, SplitResult,
                         broken_path_maximize, burago_split, is_F_almost_maximal,
                         is_G_eps_timelike, separable_oracle_1p1, time_separation)
from .stable import (ConstructionError, CovectorSlice, DualValue, RotationSample, StableNormTable,
                     StableValue, build_table, construct_alpha_maximal, distinct_geodesic_family,
                     dual_stable, htau_direct, htau_estimate, linear_growth_extrapolate,
                     rotation_vector, stable_time_separation, support_set)

__version__ = "0.1.0"
