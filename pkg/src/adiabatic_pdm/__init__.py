"""Instantaneous transition diagnostics and pause-schedule synthesis for
slowly driven two-level (and N-level) Hamiltonians."""

from .core import (
    AngleSweep,
    HamiltonianSchedule,
    HermitianOperator,
    Hold,
    InvalidArgumentError,
    LinearSweepLZ,
    MatrixSweep,
    OutOfRangeError,
    ParameterPath,
    Ramp,
    as_state,
    build_lz_schedule,
    build_waveguide_schedule,
    path_eval,
)
from .spectral import (
    DegenerateSpectrumError,
    EigenFrame,
    StepTooLargeError,
    eigensystem,
    fix_gauge,
)
from .propagator import EvolutionTrace, NumericalError, StepPolicy, decompose, evolve, step_unitary
from .transition import (
    TransitionReport,
    connection,
    eq1_residual,
    ita,
    itp,
    traditional_criterion,
    transition_report,
)
from .pdm import PauseEvent, PdmReport, PdmResult, VerificationError, apply_pauses, synthesize, verify
from .scenarios import IntensityTrace, ScenarioResult, bloch, scenario_fig1, scenario_fig2, scenario_fig3

__version__ = "0.1.0"
