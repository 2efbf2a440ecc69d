"""
Time-ordered propagation of ``i d|psi>/dt = H(t)|psi>`` (hbar = 1).

Ramps are integrated with the midpoint-sampled piecewise-constant exponential
(second order).  Steps never straddle a segment join, and holds are evolved
exactly in their frozen eigenbasis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import HamiltonianSchedule, Hold, MatrixSweep, as_matrix, as_state, family_derivatives
from .spectral import EigenFrame, StepTooLargeError, eigh_batch, family_eigensystems, transport_chain
from .transition import connection_batch, itp_batch

MAX_REFINEMENTS = 20


class NumericalError(ArithmeticError):
    """Integration finished but violated a numerical invariant."""


@dataclass(frozen=True)
class StepPolicy:
    """Integration and sampling settings.

    ``dt=None`` picks ``1e-3`` of the shortest characteristic period
    ``2 pi / gap`` along the path.  ``samples_per_unit=None`` records every
    step edge.
    """

    dt: float | None = None
    refine_on_error: bool = True
    tol: float = 1e-8
    samples_per_unit: float | None = None

    def __post_init__(self):
        if self.dt is not None and not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt!r}")
        if not 0 < self.tol <= 1e-2:
            raise ValueError(f"tol must lie in (0, 1e-2], got {self.tol!r}")
        if self.samples_per_unit is not None and not self.samples_per_unit > 0:
            raise ValueError("samples_per_unit must be positive")


@dataclass(frozen=True, eq=False)
class EvolutionTrace:
    """Sampled evolution along a schedule.

    Samples at a segment join appear twice, once closing the left segment and
    once opening the right one, so that one-sided quantities (the connection
    and ITP) stay well defined.  ``segments[k]`` names the segment a sample
    belongs to.
    """

    schedule: HamiltonianSchedule
    dt: float
    times: np.ndarray
    lambdas: np.ndarray
    speeds: np.ndarray
    segments: np.ndarray
    states: np.ndarray
    energies: np.ndarray
    vectors: np.ndarray
    connections: np.ndarray
    c: np.ndarray
    P: np.ndarray
    ita: np.ndarray

    def __len__(self):
        return self.times.shape[0]

    @property
    def dim(self) -> int:
        return self.states.shape[1]

    @property
    def populations(self) -> np.ndarray:
        return np.abs(self.c) ** 2

    @property
    def final_populations(self) -> np.ndarray:
        return self.populations[-1]

    @property
    def final_band(self) -> int:
        """Index of the most populated band at the end."""
        return int(np.argmax(self.final_populations))

    @property
    def ita_final(self) -> np.ndarray:
        return self.ita[-1]

    @property
    def ramp_mask(self) -> np.ndarray:
        return self.speeds != 0

    def frame(self, k: int) -> EigenFrame:
        return EigenFrame(self.energies[k], self.vectors[k], anchored=k > 0)


def step_unitary(H, dt: float) -> np.ndarray:
    """``exp(-i H dt)``; two-level operators use the Pauli closed form."""
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt!r}")
    m = as_matrix(H)
    if m.shape == (2, 2):
        a0 = 0.5 * (m[0, 0] + m[1, 1]).real
        az = 0.5 * (m[0, 0] - m[1, 1]).real
        return pauli_unitaries(a0, m[1, 0].real, m[1, 0].imag, az, dt)
    w, v = np.linalg.eigh(m)
    return (v * np.exp(-1j * w * dt)) @ v.conj().T


def pauli_unitaries(a0, ax, ay, az, h) -> np.ndarray:
    """``exp(-i h (a0 + a.sigma))`` broadcast over arrays."""
    a0, ax, ay, az, h = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (a0, ax, ay, az, h)))
    r = np.sqrt(ax * ax + ay * ay + az * az)
    cos = np.cos(r * h)
    sin_r = h * np.sinc(r * h / np.pi)  # sin(r h) / r, finite at r = 0
    ph = np.exp(-1j * a0 * h)
    u = np.empty(a0.shape + (2, 2), dtype=complex)
    u[..., 0, 0] = ph * (cos - 1j * sin_r * az)
    u[..., 1, 1] = ph * (cos + 1j * sin_r * az)
    u[..., 0, 1] = ph * (-1j * sin_r * ax - sin_r * ay)
    u[..., 1, 0] = ph * (-1j * sin_r * ax + sin_r * ay)
    return u


def step_edges(duration: float, dt: float) -> np.ndarray:
    """Local step edges ``0, dt, 2 dt, ..., duration`` (short last step)."""
    n = int(duration // dt)
    edges = np.arange(n + 1) * dt
    if duration - edges[-1] > 1e-9 * dt:
        edges = np.append(edges, duration)
    elif n == 0:
        edges = np.array([0.0, duration])
    else:
        edges[-1] = duration
    return edges


def midpoint_unitaries(family, lam_start: float, slope: float, edges: np.ndarray) -> np.ndarray:
    """One unitary per interval of ``edges``, with ``H`` sampled at the midpoint."""
    mids = lam_start + slope * (0.5 * (edges[:-1] + edges[1:]))
    h = np.diff(edges)
    if isinstance(family, MatrixSweep):
        w, v = eigh_batch(family.h0 + mids[:, None, None] * family.h1)
        return np.einsum("kin,kn,kjn->kij", v, np.exp(-1j * w * h[:, None]), v.conj())
    return pauli_unitaries(*family.pauli(mids), h)


def chain(unitaries: np.ndarray, psi: np.ndarray) -> np.ndarray:
    """States ``psi_0 .. psi_K`` from ``psi_{k+1} = U_k psi_k``."""
    k = unitaries.shape[0]
    if unitaries.shape[1] == 2:
        u00, u01 = unitaries[:, 0, 0].tolist(), unitaries[:, 0, 1].tolist()
        u10, u11 = unitaries[:, 1, 0].tolist(), unitaries[:, 1, 1].tolist()
        a, b = complex(psi[0]), complex(psi[1])
        out = [(a, b)]
        for j in range(k):
            a, b = u00[j] * a + u01[j] * b, u10[j] * a + u11[j] * b
            out.append((a, b))
        return np.array(out, dtype=complex)
    out = np.empty((k + 1, psi.shape[0]), dtype=complex)
    out[0] = psi
    for j in range(k):
        out[j + 1] = unitaries[j] @ out[j]
    return out


def ramp_states(family, lam_start: float, slope: float, edges: np.ndarray, psi: np.ndarray) -> np.ndarray:
    return chain(midpoint_unitaries(family, lam_start, slope, edges), psi)


def decompose(psi, frame: EigenFrame) -> np.ndarray:
    """Band amplitudes ``c_n = <n|psi>``."""
    return frame.vectors.conj().T @ np.asarray(psi, dtype=complex)


def default_dt(schedule: HamiltonianSchedule) -> float:
    path = schedule.path
    lams = np.concatenate(
        [np.linspace(path.lambda_starts[k], path.lambda_starts[k + 1], 65) for k in range(len(path.segments))]
    )
    energies, _ = family_eigensystems(schedule.family, lams)
    gap = np.max(np.diff(energies, axis=-1))
    return 1e-3 * 2 * np.pi / gap


def _sample_index(n_edges: int, stride: int) -> np.ndarray:
    idx = np.arange(0, n_edges, stride)
    if idx[-1] != n_edges - 1:
        idx = np.append(idx, n_edges - 1)
    return idx


def _evolve(schedule: HamiltonianSchedule, psi0: np.ndarray, dt: float, policy: StepPolicy) -> EvolutionTrace:
    path, family = schedule.path, schedule.family
    stride = 1 if policy.samples_per_unit is None else max(1, math.floor(1.0 / (policy.samples_per_unit * dt)))
    psi = psi0
    anchor = None
    parts = []
    for k, seg in enumerate(path.segments):
        edges = step_edges(seg.duration, dt)
        idx = _sample_index(edges.size, stride)
        taus = edges[idx]
        lam_start = path.lambda_starts[k]
        if isinstance(seg, Hold):
            energies, vectors = family_eigensystems(family, np.array([lam_start]))
            vectors = transport_chain(vectors, anchor)
            c0 = vectors[0].conj().T @ psi
            c = np.exp(-1j * np.outer(taus, energies[0])) * c0
            vectors = np.broadcast_to(vectors[0], (taus.size,) + vectors.shape[1:]).copy()
            energies = np.broadcast_to(energies[0], (taus.size, energies.shape[1])).copy()
            states = c @ vectors[0].T
            lams = np.full(taus.size, lam_start)
            A = np.zeros(vectors.shape, dtype=complex)
        else:
            states = ramp_states(family, lam_start, seg.slope, edges, psi)[idx]
            lams = lam_start + seg.slope * taus
            energies, vectors = family_eigensystems(family, lams)
            vectors = transport_chain(vectors, anchor)
            c = np.einsum("kin,ki->kn", vectors.conj(), states)
            A = connection_batch(energies, vectors, seg.slope * family_derivatives(family, lams))
        anchor = vectors[-1]
        psi = states[-1]
        parts.append(
            dict(
                times=path.starts[k] + taus,
                lambdas=lams,
                speeds=np.full(taus.size, seg.slope),
                segments=np.full(taus.size, k),
                states=states,
                energies=energies,
                vectors=vectors,
                connections=A,
                c=c,
            )
        )
    data = {key: np.concatenate([p[key] for p in parts]) for key in parts[0]}
    data["P"] = itp_batch(data["c"], data["connections"])
    steps = np.diff(data["times"])[:, None]
    increments = 0.5 * (data["P"][1:] + data["P"][:-1]) * steps
    data["ita"] = np.concatenate([np.zeros((1, psi0.size), dtype=complex), np.cumsum(increments, axis=0)])
    norm_drift = abs(np.linalg.norm(psi) - 1.0)
    if norm_drift > policy.tol:
        raise NumericalError(f"norm drift {norm_drift:.3e} exceeds tol {policy.tol:.1e}")
    for arr in data.values():
        arr.setflags(write=False)
    return EvolutionTrace(schedule=schedule, dt=dt, **data)


def evolve(schedule: HamiltonianSchedule, psi0, policy: StepPolicy | None = None) -> EvolutionTrace:
    """Propagate ``psi0`` along ``schedule`` and decompose into the instantaneous bands.

    When neighbouring frames cannot be chained the step is halved, up to 20
    times, before giving up.
    """
    policy = policy or StepPolicy()
    psi0 = as_state(psi0)
    if psi0.size != schedule.dim:
        raise ValueError(f"state has {psi0.size} amplitudes, schedule is {schedule.dim}-level")
    dt = policy.dt if policy.dt is not None else default_dt(schedule)
    for attempt in range(MAX_REFINEMENTS + 1):
        try:
            return _evolve(schedule, psi0, dt, policy)
        except StepTooLargeError:
            if not policy.refine_on_error or attempt == MAX_REFINEMENTS:
                raise
            dt /= 2
    raise AssertionError("unreachable")
