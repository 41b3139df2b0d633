"""Distributed multi-target tracking with GLMB filters and GCI fusion of SO-GMB densities."""

from .approx import strip_labels, to_fogmb, to_sogmb
from .densities import (GlmbComponent, GlmbDensity, GmbDensity, GmbHypothesis, SoGmbDensity, SoGmbHypothesis,
                        gmb_cardinality, gmb_phd, sogmb_cardinality, sogmb_phd)
from .errors import (DegenerateFusionError, FilterDivergenceError, GmbFusionError, InvalidDensityError,
                     InvalidParameterError, SchemaError)
from .experiment import ExperimentSpec, Tuning, run_config, run_experiment, run_once
from .fusion import FusionMap, FusionWeights, fuse_pair, fuse_sequential
from .gaussian import GaussianMixture, WeightedGaussian, fusion_cross_term, power
from .glmb import BirthModel, GlmbFilter, MeasurementScan, MotionModel, SensorModel, extract_map
from .metrics import OspaParams, monte_carlo, ospa
from .scenario import ScenarioConfig, generate_scans, generate_truth, load_config, scenario1, scenario2

__version__ = "0.1.0"
