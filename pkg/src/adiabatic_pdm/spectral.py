"""
Instantaneous eigensystems with ascending band order and parallel-transport
gauge fixing.

Band index 0 is the lower level (the ``-`` band of a two-level system) and
index 1 the upper (``+``) band.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Family, HermitianOperator, MatrixSweep, as_matrix

DEGENERACY_RTOL = 1e-9
MIN_OVERLAP = 0.5


class DegenerateSpectrumError(ArithmeticError):
    """Two instantaneous levels are closer than the degeneracy tolerance."""


class StepTooLargeError(ArithmeticError):
    """Neighbouring frames overlap too little to be chained; refine the step."""


@dataclass(frozen=True, eq=False)
class EigenFrame:
    """Eigenvalues (ascending) and orthonormal eigenvectors (columns)."""

    energies: np.ndarray
    vectors: np.ndarray
    anchored: bool = False

    @property
    def dim(self) -> int:
        return self.energies.shape[0]

    @property
    def gaps(self) -> np.ndarray:
        return np.diff(self.energies)


def _check_gaps(energies: np.ndarray) -> None:
    scale = np.max(np.abs(energies), axis=-1)
    gaps = np.min(np.diff(energies, axis=-1), axis=-1)
    bad = gaps <= DEGENERACY_RTOL * scale
    if np.any(bad):
        idx = np.flatnonzero(np.atleast_1d(bad))[0]
        raise DegenerateSpectrumError(
            f"degenerate spectrum (gap {np.atleast_1d(gaps)[idx]:.3e}, |H| {np.atleast_1d(scale)[idx]:.3e})"
        )


def eig2_closed_form(a0, ax, ay, az):
    """Closed-form eigensystem of ``a0 I + a . sigma`` (broadcast over arrays).

    Each eigenvector uses whichever of the two null-vector expressions of
    ``H - E`` has the larger norm, ``(E' + az, ax + i ay)`` or
    ``(ax - i ay, E' - az)`` with ``E' = E - a0``.  For ``H = V X + lam Z``
    with ``V > 0`` both reduce to ``(lam + E, V)`` up to a positive factor.
    """
    a0, ax, ay, az = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (a0, ax, ay, az)))
    r = np.sqrt(ax * ax + ay * ay + az * az)
    energies = np.stack([a0 - r, a0 + r], axis=-1)
    vectors = np.empty(a0.shape + (2, 2), dtype=complex)
    off = ax + 1j * ay
    for n, s in enumerate((-r, r)):
        use_a = s * az >= 0
        v0 = np.where(use_a, s + az, np.conj(off))
        v1 = np.where(use_a, off, s - az)
        norm = np.sqrt(2.0 * r * (r + np.abs(az)))
        with np.errstate(invalid="ignore", divide="ignore"):
            vectors[..., 0, n] = v0 / norm
            vectors[..., 1, n] = v1 / norm
    return energies, vectors


def eigh_batch(H: np.ndarray):
    """Ascending eigensystems for a stack of Hermitian matrices; gaps checked."""
    energies, vectors = np.linalg.eigh(H)
    _check_gaps(energies)
    return energies, vectors


def family_eigensystems(family: Family, lam) -> tuple[np.ndarray, np.ndarray]:
    lam = np.asarray(lam, dtype=float)
    if isinstance(family, MatrixSweep):
        return eigh_batch(family.h0 + lam[..., None, None] * family.h1)
    energies, vectors = eig2_closed_form(*family.pauli(lam))
    _check_gaps(energies)
    return energies, vectors


def eigensystem(H) -> EigenFrame:
    """Ascending eigenvalues and unit eigenvectors of a Hermitian matrix.

    Two-level operators use the closed form of :func:`eig2_closed_form`;
    larger ones go through ``numpy.linalg.eigh``.
    """
    op = H if isinstance(H, HermitianOperator) else HermitianOperator(as_matrix(H))
    if op.dim == 2:
        energies, vectors = eig2_closed_form(*op.pauli)
        _check_gaps(energies)
    else:
        energies, vectors = eigh_batch(op.entries)
    return EigenFrame(energies, vectors)


def fix_gauge(prev: EigenFrame, cur: EigenFrame) -> EigenFrame:
    """Rephase ``cur`` so every ``<n_prev|n_cur>`` is real and positive."""
    overlaps = np.einsum("in,in->n", prev.vectors.conj(), cur.vectors)
    mags = np.abs(overlaps)
    if np.any(mags < MIN_OVERLAP):
        raise StepTooLargeError(f"frame overlap {mags.min():.3f} below {MIN_OVERLAP}")
    phases = overlaps.conj() / mags
    # already transported columns are left bit-identical
    phases[np.abs(np.angle(overlaps)) < 1e-14] = 1.0
    return EigenFrame(cur.energies, cur.vectors * phases[None, :], anchored=True)


def transport_chain(vectors: np.ndarray, anchor: np.ndarray | None = None) -> np.ndarray:
    """Parallel-transport a stack of frames ``(K, N, N)`` along its first axis.

    The first frame is rephased against ``anchor`` when given, otherwise kept.
    """
    stack = vectors if anchor is None else np.concatenate([anchor[None], vectors])
    overlaps = np.einsum("kin,kin->kn", stack[:-1].conj(), stack[1:])
    mags = np.abs(overlaps)
    if mags.size and mags.min() < MIN_OVERLAP:
        k = int(np.argmin(mags.min(axis=1)))
        raise StepTooLargeError(f"frame overlap {mags.min():.3f} below {MIN_OVERLAP} at sample {k + 1}")
    steps = overlaps.conj() / mags
    phases = np.cumprod(np.concatenate([np.ones((1, stack.shape[-1])), steps]), axis=0)
    phases /= np.abs(phases)
    fixed = stack * phases[:, None, :]
    return fixed if anchor is None else fixed[1:]
