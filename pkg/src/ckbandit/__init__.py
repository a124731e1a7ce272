"""Constrained kernelized bandits with GP exploration."""

from .environment import BanditEnv, NoiseSpec, generate_synthetic, load_dataset
from .exceptions import (
    CKBError,
    ConfigError,
    DatasetParseError,
    GenerationError,
    InfeasibleError,
    InvalidInputError,
    NumericalDegeneracyError,
)
from .exploration import RandUCB, TS, UCB, BetaSchedule, RandomizerDist, truncate
from .gp import GPPosterior
from .kernels import Domain, KernelSpec, evaluate, gram, information_gain
from .lyapunov import LyapunovCKB
from .metrics import RunRecord, regret_plus, violation_metrics
from .primal_dual import CKB, GPUCB, default_params, run_doubling

__version__ = "0.1.0"
