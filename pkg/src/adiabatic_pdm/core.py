"""
Parameter paths, Hamiltonian families and schedules.

A schedule is a piecewise-linear control parameter ``lam(t)`` (ramps and
holds) together with a map ``lam -> H``.  Everything here is immutable and
dimensionless; unit labels only matter for reporting.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

import numpy as np

SIGMA_0 = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)


class InvalidArgumentError(ValueError):
    """Raised when an argument violates a documented precondition."""


class OutOfRangeError(ValueError):
    """Raised when a time lies outside a path's domain."""


@dataclass(frozen=True)
class HermitianOperator:
    """Dense Hermitian matrix.

    For ``dim == 2`` the Pauli decomposition ``H = a0 I + ax X + ay Y + az Z``
    is available through :attr:`pauli`.
    """

    entries: np.ndarray

    def __post_init__(self):
        m = np.array(self.entries, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 2:
            raise InvalidArgumentError(f"expected a square matrix of size >= 2, got shape {m.shape}")
        if np.max(np.abs(m - m.conj().T)) > 1e-12:
            raise InvalidArgumentError("matrix is not Hermitian")
        m.setflags(write=False)
        object.__setattr__(self, "entries", m)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @property
    def pauli(self) -> tuple[float, float, float, float]:
        if self.dim != 2:
            raise InvalidArgumentError("Pauli coefficients exist only for dim == 2")
        m = self.entries
        a0 = 0.5 * (m[0, 0] + m[1, 1]).real
        az = 0.5 * (m[0, 0] - m[1, 1]).real
        ax = m[1, 0].real
        ay = m[1, 0].imag
        return float(a0), float(ax), float(ay), float(az)

    @classmethod
    def from_pauli(cls, a0: float, ax: float, ay: float, az: float) -> "HermitianOperator":
        return cls(a0 * SIGMA_0 + ax * SIGMA_X + ay * SIGMA_Y + az * SIGMA_Z)

    def __array__(self, dtype=None, copy=None):
        return self.entries if dtype is None else self.entries.astype(dtype)


def as_matrix(H) -> np.ndarray:
    if isinstance(H, HermitianOperator):
        return H.entries
    return np.asarray(H, dtype=complex)


def as_state(amps, tol: float = 1e-10) -> np.ndarray:
    """Return ``amps`` as a complex vector, checking it is normalized."""
    psi = np.array(amps, dtype=complex).reshape(-1)
    if psi.size < 2:
        raise InvalidArgumentError("state needs at least two amplitudes")
    norm = np.linalg.norm(psi)
    if abs(norm - 1.0) > tol:
        raise InvalidArgumentError(f"state is not normalized (norm = {norm!r})")
    return psi


# -- parameter paths ---------------------------------------------------------


@dataclass(frozen=True)
class Ramp:
    slope: float
    duration: float

    def __post_init__(self):
        if not self.duration > 0:
            raise InvalidArgumentError(f"ramp duration must be positive, got {self.duration!r}")
        if self.slope == 0 or not np.isfinite(self.slope):
            raise InvalidArgumentError(f"ramp slope must be finite and non-zero, got {self.slope!r}")


@dataclass(frozen=True)
class Hold:
    duration: float

    @property
    def slope(self) -> float:
        return 0.0

    def __post_init__(self):
        if not self.duration > 0:
            raise InvalidArgumentError(f"hold duration must be positive, got {self.duration!r}")


Segment = Union[Ramp, Hold]


@dataclass(frozen=True)
class ParameterPath:
    """Continuous piecewise-linear ``lam(t)`` starting at ``t = 0``."""

    segments: tuple
    lambda0: float = 0.0
    starts: np.ndarray = field(init=False, repr=False, compare=False)
    lambda_starts: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        segs = tuple(self.segments)
        if not segs:
            raise InvalidArgumentError("path needs at least one segment")
        for s in segs:
            if not isinstance(s, (Ramp, Hold)):
                raise InvalidArgumentError(f"unknown segment {s!r}")
        object.__setattr__(self, "segments", segs)
        starts = np.zeros(len(segs) + 1)
        lams = np.zeros(len(segs) + 1)
        lams[0] = self.lambda0
        for k, s in enumerate(segs):
            starts[k + 1] = starts[k] + s.duration
            lams[k + 1] = lams[k] + s.slope * s.duration
        starts.setflags(write=False)
        lams.setflags(write=False)
        object.__setattr__(self, "starts", starts)
        object.__setattr__(self, "lambda_starts", lams)

    @property
    def duration(self) -> float:
        return float(self.starts[-1])

    @property
    def lambda_end(self) -> float:
        return float(self.lambda_starts[-1])

    @property
    def max_speed(self) -> float:
        return max((abs(s.slope) for s in self.segments), default=0.0)

    @property
    def average_speed(self) -> float:
        return (self.lambda_end - self.lambda0) / self.duration

    @property
    def has_holds(self) -> bool:
        return any(isinstance(s, Hold) for s in self.segments)

    def segment_index(self, t: float) -> int:
        """Index of the segment containing ``t`` (left-continuous at joins)."""
        if t < 0 or t > self.duration:
            raise OutOfRangeError(f"t = {t!r} outside [0, {self.duration!r}]")
        k = int(np.searchsorted(self.starts, t, side="left")) - 1
        return min(max(k, 0), len(self.segments) - 1)

    def evaluate(self, t: float) -> tuple[float, float]:
        k = self.segment_index(t)
        seg = self.segments[k]
        lam = self.lambda_starts[k] + seg.slope * (t - self.starts[k])
        return float(lam), float(seg.slope)


def path_eval(path: ParameterPath, t: float) -> tuple[float, float]:
    """Return ``(lam(t), lam'(t))``; the speed is zero inside holds."""
    return path.evaluate(t)


# -- Hamiltonian families ----------------------------------------------------


@dataclass(frozen=True)
class LinearSweepLZ:
    """``H(lam) = V X + lam Z``."""

    V: float

    dim = 2

    def pauli(self, lam):
        lam = np.asarray(lam, dtype=float)
        zero = np.zeros_like(lam)
        return zero, np.full_like(lam, self.V), zero, lam

    def dpauli(self, lam):
        lam = np.asarray(lam, dtype=float)
        zero = np.zeros_like(lam)
        return zero, zero, zero, np.ones_like(lam)


@dataclass(frozen=True)
class AngleSweep:
    """Coupled-waveguide model ``H = b0 I + db sin(lam) X - db cos(lam) Z``."""

    beta0: float
    delta_beta: float

    dim = 2

    def pauli(self, lam):
        lam = np.asarray(lam, dtype=float)
        return (
            np.full_like(lam, self.beta0),
            self.delta_beta * np.sin(lam),
            np.zeros_like(lam),
            -self.delta_beta * np.cos(lam),
        )

    def dpauli(self, lam):
        lam = np.asarray(lam, dtype=float)
        return (
            np.zeros_like(lam),
            self.delta_beta * np.cos(lam),
            np.zeros_like(lam),
            self.delta_beta * np.sin(lam),
        )


@dataclass(frozen=True, eq=False)
class MatrixSweep:
    """Generic N-level pencil ``H(lam) = H0 + lam H1``."""

    h0: np.ndarray
    h1: np.ndarray

    def __post_init__(self):
        h0 = HermitianOperator(self.h0).entries
        h1 = HermitianOperator(self.h1).entries
        if h0.shape != h1.shape:
            raise InvalidArgumentError("H0 and H1 must have the same shape")
        object.__setattr__(self, "h0", h0)
        object.__setattr__(self, "h1", h1)

    @property
    def dim(self) -> int:
        return self.h0.shape[0]


Family = Union[LinearSweepLZ, AngleSweep, MatrixSweep]


def _from_pauli_batch(a0, ax, ay, az) -> np.ndarray:
    a0, ax, ay, az = (np.asarray(a, dtype=float) for a in (a0, ax, ay, az))
    out = np.empty(a0.shape + (2, 2), dtype=complex)
    out[..., 0, 0] = a0 + az
    out[..., 1, 1] = a0 - az
    out[..., 0, 1] = ax - 1j * ay
    out[..., 1, 0] = ax + 1j * ay
    return out


def family_matrices(family: Family, lam) -> np.ndarray:
    """``H(lam)`` for scalar or array ``lam`` (shape ``lam.shape + (N, N)``)."""
    if isinstance(family, MatrixSweep):
        lam = np.asarray(lam, dtype=float)
        return family.h0 + lam[..., None, None] * family.h1
    return _from_pauli_batch(*family.pauli(lam))


def family_derivatives(family: Family, lam) -> np.ndarray:
    """``dH/dlam`` for scalar or array ``lam``."""
    if isinstance(family, MatrixSweep):
        lam = np.asarray(lam, dtype=float)
        return np.broadcast_to(family.h1, lam.shape + family.h1.shape).copy()
    return _from_pauli_batch(*family.dpauli(lam))


@dataclass(frozen=True)
class HamiltonianSchedule:
    path: ParameterPath
    family: Family

    @property
    def dim(self) -> int:
        return self.family.dim

    @property
    def duration(self) -> float:
        return self.path.duration

    def hamiltonian(self, lam: float) -> HermitianOperator:
        return HermitianOperator(family_matrices(self.family, lam))

    def at(self, t: float) -> HermitianOperator:
        lam, _ = self.path.evaluate(t)
        return self.hamiltonian(lam)

    def dhdt(self, t: float) -> np.ndarray:
        lam, speed = self.path.evaluate(t)
        return speed * family_derivatives(self.family, lam)

    def with_path(self, path: ParameterPath) -> "HamiltonianSchedule":
        return HamiltonianSchedule(path, self.family)


def build_lz_schedule(V: float, lambda_start: float, lambda_end: float, speed: float) -> HamiltonianSchedule:
    """Single linear sweep of ``H = V X + lam Z`` at constant ``|lam'| = speed``."""
    if not speed > 0:
        raise InvalidArgumentError(f"speed must be positive, got {speed!r}")
    if V == 0:
        raise InvalidArgumentError("coupling V must be non-zero")
    span = lambda_end - lambda_start
    if span == 0:
        raise InvalidArgumentError("lambda_end equals lambda_start (zero sweep)")
    ramp = Ramp(slope=float(np.sign(span) * speed), duration=abs(span) / speed)
    return HamiltonianSchedule(ParameterPath((ramp,), float(lambda_start)), LinearSweepLZ(float(V)))


def waveguide_ramp_schedule(beta0: float, delta_beta: float, length: float) -> HamiltonianSchedule:
    """``lam: 0 -> pi`` uniformly over ``length``."""
    if not delta_beta > 0:
        raise InvalidArgumentError(f"delta_beta must be positive, got {delta_beta!r}")
    if not length > 0:
        raise InvalidArgumentError(f"length must be positive, got {length!r}")
    ramp = Ramp(slope=np.pi / length, duration=float(length))
    return HamiltonianSchedule(ParameterPath((ramp,), 0.0), AngleSweep(float(beta0), float(delta_beta)))


def build_waveguide_schedule(beta0: float, delta_beta: float, periods: int, period_len: float) -> HamiltonianSchedule:
    """Coupled waveguides with ``lam(z) = pi z / (periods * period_len)``."""
    if int(periods) != periods or periods < 1:
        raise InvalidArgumentError(f"periods must be a positive integer, got {periods!r}")
    if not period_len > 0:
        raise InvalidArgumentError(f"period_len must be positive, got {period_len!r}")
    return waveguide_ramp_schedule(beta0, delta_beta, int(periods) * period_len)
