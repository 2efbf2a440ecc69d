"""
Cross-Berry connections, instantaneous transition probability (ITP) and its
time integral (ITA), plus the traditional adiabaticity ratio.

With band amplitudes ``c_n = <n|psi>`` and connection ``A_nm = i<n|dm/dt>``
the population rate of band ``n`` is

    d|c_n|^2/dt = Re P_n,    P_n = 2i sum_{m != n} c_m conj(c_n) A_nm.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from .core import InvalidArgumentError, family_derivatives
from .spectral import DEGENERACY_RTOL, DegenerateSpectrumError, EigenFrame

if TYPE_CHECKING:
    from .propagator import EvolutionTrace

DEFAULT_THRESHOLD = 0.05


def connection_batch(energies: np.ndarray, vectors: np.ndarray, dhdt: np.ndarray) -> np.ndarray:
    """``A_nm = i <n|H'|m> / (E_m - E_n)`` for stacks of frames; zero diagonal.

    The diagonal is exactly zero in the parallel-transport gauge.
    """
    m = np.einsum("...in,...ij,...jm->...nm", vectors.conj(), dhdt, vectors)
    denom = energies[..., None, :] - energies[..., :, None]
    n = energies.shape[-1]
    eye = np.eye(n, dtype=bool)
    scale = np.max(np.abs(energies), axis=-1)[..., None, None]
    if np.any((np.abs(denom) <= DEGENERACY_RTOL * scale) & ~eye):
        raise DegenerateSpectrumError("connection undefined for degenerate levels")
    denom = np.where(eye, 1.0, denom)
    return np.where(eye, 0.0, 1j * m / denom)


def connection(frame: EigenFrame, dHdt) -> np.ndarray:
    """Cross-Berry connection matrix at one frame given ``dH/dt`` there."""
    return connection_batch(frame.energies, frame.vectors, np.asarray(dHdt, dtype=complex))


def itp_batch(c: np.ndarray, A: np.ndarray) -> np.ndarray:
    return 2j * np.conj(c) * np.einsum("...nm,...m->...n", A, c)


def itp(c, A) -> np.ndarray:
    """Per-band ITP ``P_n`` from amplitudes ``c`` and connection ``A``."""
    return itp_batch(np.asarray(c, dtype=complex), np.asarray(A, dtype=complex))


def itp_in_gauge(trace: "EvolutionTrace", phases: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Recompute ``P`` and the final ITA with every frame column rephased.

    ``phases`` has shape ``(len(trace), N)`` of unit complex numbers.
    """
    vectors = trace.vectors * phases[:, None, :]
    c = np.einsum("kin,ki->kn", vectors.conj(), trace.states)
    dhdt = trace.speeds[:, None, None] * family_derivatives(trace.schedule.family, trace.lambdas)
    P = itp_batch(c, connection_batch(trace.energies, vectors, dhdt))
    return P, _trapezoid(P, trace.times)


def _trapezoid(P: np.ndarray, times: np.ndarray) -> np.ndarray:
    return np.sum(0.5 * (P[1:] + P[:-1]) * np.diff(times)[:, None], axis=0)


def ita(trace: "EvolutionTrace") -> np.ndarray:
    """Trapezoidal ``A_n = int P_n dt`` over the whole trace."""
    if len(trace) < 2:
        raise InvalidArgumentError("ITA needs at least two samples")
    return _trapezoid(trace.P, trace.times)


def is_adiabatic(accumulation: np.ndarray, threshold: float = DEFAULT_THRESHOLD) -> bool:
    return bool(np.max(np.abs(np.real(accumulation))) <= threshold)


def eq1_residual(trace: "EvolutionTrace", c: np.ndarray | None = None) -> float:
    """Max ``|d|c_n|^2/dt - Re P_n|`` over segment-interior samples.

    The derivative is the second-order central difference (non-uniform form
    where the last step of a segment is short).  Samples on a segment join are
    skipped since ``Re P`` may jump there.
    """
    c = trace.c if c is None else c
    if len(trace) < 3:
        raise InvalidArgumentError("residual needs at least three samples")
    pops = np.abs(c) ** 2
    worst = 0.0
    for k in np.unique(trace.segments):
        sel = np.flatnonzero(trace.segments == k)
        if sel.size < 3:
            continue
        t = trace.times[sel]
        deriv = np.gradient(pops[sel], t, axis=0)
        diff = np.abs(deriv[1:-1] - trace.P[sel][1:-1].real)
        worst = max(worst, float(diff.max()))
    return worst


def traditional_criterion(trace: "EvolutionTrace") -> np.ndarray:
    """``max_t |A_nm| / |E_n - E_m|`` for every band pair (symmetric matrix)."""
    gaps = np.abs(trace.energies[:, :, None] - trace.energies[:, None, :])
    n = trace.dim
    eye = np.eye(n, dtype=bool)
    if np.any(gaps[:, ~eye] == 0):
        raise DegenerateSpectrumError("criterion undefined for degenerate levels")
    ratio = np.abs(trace.connections) / np.where(eye, 1.0, gaps)
    return np.where(eye, 0.0, ratio.max(axis=0))


@dataclass(frozen=True, eq=False)
class TransitionReport:
    P: np.ndarray
    ita: np.ndarray
    criterion: np.ndarray
    eq1_residual: float
    threshold: float = DEFAULT_THRESHOLD

    @property
    def adiabatic(self) -> bool:
        return is_adiabatic(self.ita, self.threshold)

    @property
    def verdict(self) -> str:
        return "adiabatic" if self.adiabatic else "non-adiabatic"

    @property
    def criterion_max(self) -> float:
        return float(self.criterion.max())


def transition_report(trace: "EvolutionTrace", threshold: float = DEFAULT_THRESHOLD) -> TransitionReport:
    return TransitionReport(
        P=trace.P,
        ita=ita(trace),
        criterion=traditional_criterion(trace),
        eq1_residual=eq1_residual(trace),
        threshold=threshold,
    )
