"""Homogenization of nonlocal operators with divergence-free drift."""

__version__ = "0.1.0"

from .errors import (CertificationError, ConfigError, ConvergenceError, DomainError,  # noqa: E402
                     LevyHomError, QuadratureError)
from .kernels import Exponential, LevyKernel, PowerLog, Truncated, check_tail_condition  # noqa: E402
from .environment import DriftField, StreamField, drift, shear, synthesize  # noqa: E402
from .grid import TorusGrid, krylov_solve  # noqa: E402
from .corrector import (CorrectorProblem, CorrectorSolution, continuation_solve,  # noqa: E402
                        energy_identity_check, solve_regularized)
from .effective import EffectiveMatrix, compute_effective  # noqa: E402
from .resolvent import ResolventProblem, convergence_sweep, solve_scaled  # noqa: E402
from .montecarlo import SimConfig, effective_diffusivity_mc, simulate  # noqa: E402
from .config import ExperimentConfig, load_config, reference_config  # noqa: E402

__all__ = [
    "LevyHomError", "DomainError", "QuadratureError", "ConvergenceError",
    "CertificationError", "ConfigError",
    "LevyKernel", "PowerLog", "Exponential", "Truncated", "check_tail_condition",
    "StreamField", "DriftField", "synthesize", "shear", "drift",
    "TorusGrid", "krylov_solve",
    "CorrectorProblem", "CorrectorSolution", "solve_regularized", "continuation_solve",
    "energy_identity_check",
    "EffectiveMatrix", "compute_effective",
    "ResolventProblem", "solve_scaled", "convergence_sweep",
    "SimConfig", "simulate", "effective_diffusivity_mc",
    "ExperimentConfig", "load_config", "reference_config",
]
