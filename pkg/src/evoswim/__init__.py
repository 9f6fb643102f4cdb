"""GA/PSO optimization of light-powered swimming robots on a quantized grid."""

from .engines import make_engine
from .fitness import GaussianSumFitness, SurrogateParams, gaussian_sum
from .ga import GaConfig, GaEngine
from .genome import (
    DimensionSpec,
    EvaluatedIndividual,
    Genotype,
    ParameterSpace,
    SpaceExhaustedError,
    build_default_space,
)
from .pso import PsoConfig, PsoEngine
from .session import Session, SessionStore, compute_speed
from .sweep import SweepSpec, TrialSpec, run_sweep, run_trial

__version__ = "0.1.0"

__all__ = [
    "DimensionSpec",
    "EvaluatedIndividual",
    "GaConfig",
    "GaEngine",
    "GaussianSumFitness",
    "Genotype",
    "ParameterSpace",
    "PsoConfig",
    "PsoEngine",
    "Session",
    "SessionStore",
    "SpaceExhaustedError",
    "SurrogateParams",
    "SweepSpec",
    "TrialSpec",
    "build_default_space",
    "compute_speed",
    "gaussian_sum",
    "make_engine",
    "run_sweep",
    "run_trial",
    "__version__",
]
