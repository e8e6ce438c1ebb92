"""Delay heat equation: series solutions, explicit steering controls and a
finite-difference cross-check."""

from .control import ControlSeries, synthesize, verify_moment, verify_steering
from .delayed_exp import DelayedExp, delayed_exp, segment_index
from .errors import (
    CompatibilityViolation,
    ControlBlowup,
    InputError,
    MissingTarget,
    ModeOverflow,
    NumericalFailure,
    ProportionalityViolation,
    QuadratureNonConvergence,
    SingularMode,
    UnstableRun,
)
from .fd_oracle import FdConfig, solve_fd
from .field import Field
from .reduction import OriginalProblem, ProblemData, ReducedProblem, map_data, reduce
from .solution import SeriesSolution, build_solution, evaluate, regularity_check, sample
from .spectral import ModeState, build_mode, mode_constants, mode_solve, mode_solve_steps

__version__ = "0.1.0"
