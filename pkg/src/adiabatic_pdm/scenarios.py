"""
Canned Landau-Zener and coupled-waveguide runs at effective-model level.

Two-level conventions: ``|0> = (1, 0)`` is the Bloch north pole and the mode
of waveguide 1; ``|1> = (0, 1)`` is the south pole and waveguide 2.  Band 0
is the lower (``-``) level, band 1 the upper (``+``).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import InvalidArgumentError, build_lz_schedule, build_waveguide_schedule, waveguide_ramp_schedule
from .pdm import PdmReport, PdmResult, synthesize, verify
from .propagator import EvolutionTrace, StepPolicy, evolve
from .transition import TransitionReport, transition_report

LOWER, UPPER = 0, 1
KET_0 = np.array([1.0, 0.0], dtype=complex)
KET_1 = np.array([0.0, 1.0], dtype=complex)

LZ_V = 0.5
LZ_LAMBDA_START = -1.5
LZ_LAMBDA_END = 1.5
LZ_SPEED = 0.2
LZ_STRETCH = 5
LZ_DT = 1e-3
# three half cycles per hold bring the average speed to the 0.04-0.05 range
LZ_HOLD_MULTIPLE = 3

WG_BETA0 = 0.0
WG_DELTA_BETA = 0.0713  # 1/mm
WG_PERIOD = 1.33  # mm
WG_PERIODS = 201
WG_DT = 1e-3 * 2 * np.pi / (2 * WG_DELTA_BETA)


@dataclass(frozen=True, eq=False)
class ScenarioResult:
    name: str
    trace: EvolutionTrace
    report: TransitionReport
    pdm: PdmResult | None = None
    pdm_report: PdmReport | None = None


@dataclass(frozen=True, eq=False)
class IntensityTrace:
    """Power in each uncoupled waveguide along the propagation distance."""

    z: np.ndarray
    I1: np.ndarray
    I2: np.ndarray
    trace: EvolutionTrace

    @property
    def length(self) -> float:
        return float(self.z[-1])


def bloch(trace: EvolutionTrace) -> np.ndarray:
    """Bloch coordinates ``(x, y, z)`` per sample, ``|0>`` at the north pole."""
    if trace.dim != 2:
        raise InvalidArgumentError("Bloch coordinates need a two-level trace")
    return bloch_vectors(trace.states)


def bloch_vectors(states) -> np.ndarray:
    states = np.atleast_2d(np.asarray(states, dtype=complex))
    cross = np.conj(states[:, 0]) * states[:, 1]
    return np.column_stack(
        [2 * cross.real, 2 * cross.imag, np.abs(states[:, 0]) ** 2 - np.abs(states[:, 1]) ** 2]
    )


def _policy(dt: float, policy: StepPolicy | None) -> StepPolicy:
    return policy if policy is not None else StepPolicy(dt=dt)


def _finish(name, trace, pdm=None) -> ScenarioResult:
    return ScenarioResult(name, trace, transition_report(trace), pdm, verify(pdm) if pdm is not None else None)


def lz_base(V: float = LZ_V, speed: float = LZ_SPEED):
    return build_lz_schedule(V, LZ_LAMBDA_START, LZ_LAMBDA_END, speed)


def scenario_fig1(
    variant: str, V: float = LZ_V, policy: StepPolicy | None = None, hold_multiple: int = LZ_HOLD_MULTIPLE
) -> ScenarioResult:
    """Landau-Zener sweep of ``lam`` from -1.5 to 1.5 starting in ``|1>``.

    ``adiabatic`` ramps at 0.2, ``counter`` adds pauses that pump the lower
    band at the same maximum speed, ``stretched`` ramps uniformly at 0.04.
    """
    policy = _policy(LZ_DT, policy)
    if variant == "adiabatic":
        return _finish("fig1-adiabatic", evolve(lz_base(V), KET_1, policy))
    if variant == "stretched":
        return _finish("fig1-stretched", evolve(lz_base(V, LZ_SPEED / LZ_STRETCH), KET_1, policy))
    if variant == "counter":
        res = synthesize(lz_base(V), KET_1, LOWER, "accumulate", policy, hold_multiple=hold_multiple)
        return _finish("fig1-counter", res.trace, res)
    raise InvalidArgumentError(f"unknown fig1 variant {variant!r}")


def waveguide_base(periods: int = WG_PERIODS):
    return build_waveguide_schedule(WG_BETA0, WG_DELTA_BETA, periods, WG_PERIOD)


def scenario_fig2(variant: str, policy: StepPolicy | None = None, mode: str = "accumulate") -> ScenarioResult:
    """Coupled waveguides, ``lam(z) = pi z / (201 p)``, light launched in waveguide 2.

    ``counter`` synthesizes pauses pumping the lower band (``mode`` may be
    switched to ``suppress`` to protect the upper band instead).
    """
    policy = _policy(WG_DT, policy)
    if variant == "adiabatic":
        return _finish("fig2-adiabatic", evolve(waveguide_base(), KET_1, policy))
    if variant == "counter":
        res = synthesize(waveguide_base(), KET_1, LOWER, mode, policy)
        return _finish(f"fig2-counter" if mode == "accumulate" else "fig2-suppress", res.trace, res)
    raise InvalidArgumentError(f"unknown fig2 variant {variant!r}")


def intensities(trace: EvolutionTrace) -> IntensityTrace:
    power = np.abs(trace.states) ** 2
    return IntensityTrace(trace.times, power[:, 0], power[:, 1], trace)


def scenario_fig3(variant: str, policy: StepPolicy | None = None) -> IntensityTrace:
    """Waveguide intensities for the adiabatic, counter and stretched samples.

    ``long_adiabatic`` ramps uniformly over the counter sample's total length.
    """
    policy = _policy(WG_DT, policy)
    if variant == "adiabatic":
        return intensities(scenario_fig2("adiabatic", policy).trace)
    if variant == "counter":
        return intensities(scenario_fig2("counter", policy).trace)
    if variant == "long_adiabatic":
        length = scenario_fig2("counter", policy).trace.schedule.duration
        return intensities(evolve(waveguide_ramp_schedule(WG_BETA0, WG_DELTA_BETA, length), KET_1, policy))
    raise InvalidArgumentError(f"unknown fig3 variant {variant!r}")
