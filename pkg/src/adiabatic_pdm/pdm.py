"""
Phase difference manipulation: pause-augmented schedules that keep the real
part of one band's ITP single-signed.

While the Hamiltonian is frozen the connection vanishes, so ``P = 0``, but the
relative phase of ``c_m conj(c_n)`` keeps rotating at ``E_n - E_m``.  Holding
for an odd number of half cycles flips ``P -> -P`` and sends it back into the
allowed half plane when the ramp resumes.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .core import (
    HamiltonianSchedule,
    Hold,
    InvalidArgumentError,
    ParameterPath,
    Ramp,
    as_state,
    family_derivatives,
    family_matrices,
)
from .propagator import EvolutionTrace, StepPolicy, default_dt, evolve, ramp_states, step_edges, step_unitary
from .spectral import family_eigensystems
from .transition import connection_batch, itp_batch, traditional_criterion, ita

log = logging.getLogger(__name__)

MODES = ("accumulate", "suppress")
TRIGGER_RTOL = 1e-12
CHUNK = 4096
MIN_CHUNK = 64


class VerificationError(AssertionError):
    """A synthesized schedule breaks its sign invariant."""

    def __init__(self, index: int, time: float, value: float, message: str):
        super().__init__(message)
        self.index = index
        self.time = time
        self.value = value


@dataclass(frozen=True)
class PauseEvent:
    """A hold of ``duration`` inserted at base-path time ``t_base``."""

    t_base: float
    duration: float

    def __post_init__(self):
        if not self.duration > 0:
            raise InvalidArgumentError(f"pause duration must be positive, got {self.duration!r}")


@dataclass(frozen=True, eq=False)
class PdmResult:
    schedule: HamiltonianSchedule
    events: tuple
    trace: EvolutionTrace
    mode: str
    target_band: int
    base: HamiltonianSchedule | None = None
    warning: str | None = None
    noop: bool = False


@dataclass(frozen=True, eq=False)
class PdmReport:
    mode: str
    target_band: int
    final_populations: np.ndarray
    ita: np.ndarray
    pause_count: int
    total_duration: float
    average_speed: float
    max_speed: float
    criterion_max: float
    min_signed_itp: float
    warnings: list = field(default_factory=list)


def _sign(mode: str) -> float:
    if mode not in MODES:
        raise InvalidArgumentError(f"mode must be one of {MODES}, got {mode!r}")
    return 1.0 if mode == "accumulate" else -1.0


def apply_pauses(path: ParameterPath, events) -> ParameterPath:
    """Split ``path`` at each ``t_base`` and insert the holds."""
    events = sorted(events, key=lambda e: e.t_base)
    for a, b in zip(events, events[1:]):
        if not b.t_base > a.t_base:
            raise InvalidArgumentError("pause events must have strictly increasing t_base")
    if events and not (0 <= events[0].t_base and events[-1].t_base < path.duration):
        raise InvalidArgumentError("pause events must lie in [0, duration) of the base path")
    segments = []
    i = 0
    for k, seg in enumerate(path.segments):
        start, end = path.starts[k], path.starts[k + 1]
        cursor = start
        while i < len(events) and events[i].t_base < end:
            tb = events[i].t_base
            if tb > cursor:
                segments.append(_piece(seg, tb - cursor))
            segments.append(Hold(events[i].duration))
            cursor = tb
            i += 1
        if end > cursor:
            segments.append(_piece(seg, end - cursor))
    return ParameterPath(tuple(segments), path.lambda0)


def _piece(seg, duration: float):
    return Ramp(seg.slope, duration) if isinstance(seg, Ramp) else Hold(duration)


def _target_itp(family, lams, slope, states, target):
    energies, vectors = family_eigensystems(family, lams)
    c = np.einsum("kin,ki->kn", vectors.conj(), states)
    A = connection_batch(energies, vectors, slope * family_derivatives(family, lams))
    P = itp_batch(c, A)[:, target]
    other = 1 - target
    weight = np.abs(c[:, other] * c[:, target] * A[:, target, other])
    return P, weight


def synthesize(
    base: HamiltonianSchedule,
    psi0,
    target_band: int,
    mode: str = "accumulate",
    policy: StepPolicy | None = None,
    floor: float = 1e-9,
    hold_multiple: int = 1,
    max_pauses: int = 10_000,
) -> PdmResult:
    """Insert holds into ``base`` so that ``Re P_target`` keeps the sign set by ``mode``.

    ``accumulate`` keeps ``Re P_target >= 0`` on every ramp, ``suppress``
    keeps it ``<= 0``.  A hold starts where ``Re P_target`` crosses zero in the
    disallowed direction (bracketed between steps, then located with Brent's
    method and the step re-taken onto it) and lasts ``hold_multiple`` half
    cycles ``pi / |E_1 - E_0|`` of the frozen Hamiltonian.  Crossings where
    ``|c_m c_n A_nm| < floor`` are ignored.
    """
    sgn = _sign(mode)
    if base.dim != 2:
        raise InvalidArgumentError("pause synthesis is implemented for two-level systems only")
    if base.path.has_holds:
        raise InvalidArgumentError("base schedule must not contain holds")
    if target_band not in (0, 1):
        raise InvalidArgumentError(f"target_band must be 0 or 1, got {target_band!r}")
    if int(hold_multiple) != hold_multiple or hold_multiple < 1 or hold_multiple % 2 == 0:
        raise InvalidArgumentError(f"hold_multiple must be a positive odd integer, got {hold_multiple!r}")
    policy = policy or StepPolicy()
    psi0 = as_state(psi0)
    dt = policy.dt if policy.dt is not None else default_dt(base)
    family, path = base.family, base.path

    events: list[PauseEvent] = []
    capped = False
    psi = psi0
    segments = path.segments
    c0 = family_eigensystems(family, np.array([path.lambda0]))[1][0].conj().T @ psi0
    pop = abs(c0[target_band]) ** 2
    if abs(c0[0] * c0[1]) < floor and (pop > 0.5) == (sgn > 0):
        # target already saturated in the requested direction: P vanishes at
        # the start and any seeded transfer could only go the wrong way
        segments = ()
    saturated = 0
    armed = True
    for k, seg in enumerate(segments):
        seg_start, seg_end = path.starts[k], path.starts[k + 1]
        tb = seg_start
        fresh = True
        while True:
            lam0 = path.lambda_starts[k] + seg.slope * (tb - seg_start)
            piece = seg_end - tb
            edges = step_edges(piece, dt)
            found = None
            start_psi = psi
            j0 = 0
            chunk = MIN_CHUNK
            while j0 < edges.size - 1:
                j1 = min(j0 + chunk, edges.size - 1)
                chunk = min(2 * chunk, CHUNK)
                sub = edges[j0 : j1 + 1]
                states = ramp_states(family, lam0, seg.slope, sub, start_psi)
                P, weight = _target_itp(family, lam0 + seg.slope * sub, seg.slope, states, target_band)
                signed = sgn * P.real
                bad = (signed < -TRIGGER_RTOL * np.abs(P)) & (weight >= floor)
                pos = 0 if (fresh and j0 == 0) else 1
                while not capped:
                    if not armed:
                        ok = np.flatnonzero(signed[pos:] >= 0)
                        if not ok.size:
                            break
                        pos += int(ok[0])
                        armed = True
                    hit = np.flatnonzero(bad[pos:])
                    if not hit.size:
                        break
                    j = pos + int(hit[0])
                    if not fresh and j0 == 0 and j == 1:
                        # wrong sign again one step after a hold: the connection
                        # term is re-seeding a saturated target, pausing cannot help
                        saturated += 1
                        armed = False
                        pos = j
                        continue
                    found = (sub, states, signed, P, j)
                    break
                if found is not None:
                    break
                start_psi = states[-1]
                j0 = j1
            if found is None:
                psi = start_psi
                break
            tau, psi_trig = _locate(family, lam0, seg.slope, target_band, sgn, *found)
            if tau >= piece:
                psi = psi_trig
                break
            lam_trig = lam0 + seg.slope * tau
            energies, _ = family_eigensystems(family, np.array([lam_trig]))
            hold = hold_multiple * np.pi / (energies[0, 1] - energies[0, 0])
            psi = step_unitary(family_matrices(family, lam_trig), hold) @ psi_trig
            events.append(PauseEvent(float(tb + tau), float(hold)))
            tb = tb + tau
            fresh = False
            if len(events) >= max_pauses:
                capped = True
                log.warning("pause cap of %d reached; remaining crossings left unmanaged", max_pauses)

    warning = None
    if not segments:
        warning = (
            f"no-op: band {target_band} starts {'full' if sgn > 0 else 'empty'}, "
            f"so P vanishes and any seeded transfer has the wrong sign for {mode}"
        )
    elif capped:
        warning = f"pause cap {max_pauses} reached"
    elif saturated:
        warning = f"target saturated {saturated} time(s); sign left unmanaged until it recovered"
    elif not events:
        warning = "no pauses inserted: the target ITP never left the allowed half plane above the floor"
    schedule = base.with_path(apply_pauses(path, events))
    trace = evolve(schedule, psi0, StepPolicy(dt=dt, refine_on_error=policy.refine_on_error, tol=policy.tol,
                                              samples_per_unit=policy.samples_per_unit))
    return PdmResult(
        schedule, tuple(events), trace, mode, target_band, base=base, warning=warning, noop=not segments
    )


def _locate(family, lam0, slope, target, sgn, sub, states, signed, P, j):
    """Trigger time (local to the piece) and the state there."""
    if j == 0:
        return float(sub[0]), states[0]
    a, b = float(sub[j - 1]), float(sub[j])
    if signed[j - 1] < -TRIGGER_RTOL * abs(P[j - 1]):
        # disallowed already but below the floor before: pause as soon as it counts
        return b, states[j]

    def step_to(tau):
        return ramp_states(family, lam0, slope, np.array([a, tau]), states[j - 1])[-1]

    def f(tau):
        if tau == a:
            return signed[j - 1]
        psi = step_to(tau)
        P_tau, _ = _target_itp(family, np.array([lam0 + slope * tau]), slope, psi[None], target)
        return sgn * P_tau[0].real

    if f(a) <= 0:
        tau = a
    else:
        tau = brentq(f, a, b, xtol=4 * np.finfo(float).eps * max(abs(b), 1.0), rtol=8.9e-16, maxiter=200)
    return tau, (states[j - 1] if tau == a else step_to(tau))


def sign_violations(trace: EvolutionTrace, target_band: int, mode: str, eps_rel: float = 1e-6) -> np.ndarray:
    """Indices of ramp samples where ``Re P_target`` has the wrong sign beyond tolerance."""
    sgn = _sign(mode)
    scale = np.max(np.abs(trace.P)) if len(trace) else 0.0
    signed = sgn * trace.P[:, target_band].real
    return np.flatnonzero(trace.ramp_mask & (signed < -eps_rel * scale))


def verify(result: PdmResult, eps_rel: float = 1e-6) -> PdmReport:
    """Check the sign invariant on every ramp sample and summarise the run.

    Raises :class:`VerificationError` naming the first offending sample.
    A no-op result is summarised without the sign check.
    """
    trace = result.trace
    bad = sign_violations(trace, result.target_band, result.mode, eps_rel)
    if bad.size and not result.noop:
        k = int(bad[0])
        value = float(trace.P[k, result.target_band].real)
        raise VerificationError(
            k,
            float(trace.times[k]),
            value,
            f"{result.mode} invariant broken at sample {k} (t = {trace.times[k]:.6g}): Re P = {value:.3e}",
        )
    path = result.schedule.path
    sgn = _sign(result.mode)
    ramp = trace.ramp_mask
    signed = sgn * trace.P[ramp, result.target_band].real
    return PdmReport(
        mode=result.mode,
        target_band=result.target_band,
        final_populations=trace.final_populations,
        ita=ita(trace),
        pause_count=len(result.events),
        total_duration=path.duration,
        average_speed=path.average_speed,
        max_speed=path.max_speed,
        criterion_max=float(traditional_criterion(trace).max()),
        min_signed_itp=float(signed.min()) if signed.size else 0.0,
        warnings=[result.warning] if result.warning else [],
    )
