"""
Static SVG figures for a run.  Output is byte-stable: fixed hash salt and no
creation date in the metadata.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .propagator import EvolutionTrace  # noqa: E402

BAND_NAMES = ("-", "+")
STYLE = {"svg.hashsalt": "adiabatic-pdm", "svg.fonttype": "path", "figure.figsize": (7.0, 3.6)}


def _band_label(n: int, dim: int) -> str:
    return BAND_NAMES[n] if dim == 2 else str(n)


def _shade_holds(ax, trace: EvolutionTrace):
    path = trace.schedule.path
    for k, seg in enumerate(path.segments):
        if seg.slope == 0:
            ax.axvspan(path.starts[k], path.starts[k + 1], color="0.85", lw=0)


def _save(fig, path: Path) -> Path:
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return path


def plot_populations(trace: EvolutionTrace, path, xlabel: str = "t") -> Path:
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        _shade_holds(ax, trace)
        for n in range(trace.dim):
            ax.plot(trace.times, trace.populations[:, n], label=f"|c{_band_label(n, trace.dim)}|^2")
        ax.set_xlabel(xlabel)
        ax.set_ylabel("population")
        ax.set_ylim(-0.02, 1.02)
        ax.legend(loc="best")
        return _save(fig, Path(path))


def plot_itp(trace: EvolutionTrace, path, xlabel: str = "t") -> Path:
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        _shade_holds(ax, trace)
        for n in range(trace.dim):
            ax.plot(trace.times, trace.P[:, n].real, label=f"Re P{_band_label(n, trace.dim)}")
        ax.axhline(0.0, color="k", lw=0.5)
        ax.set_xlabel(xlabel)
        ax.set_ylabel("Re P")
        ax.legend(loc="best")
        return _save(fig, Path(path))


def plot_bloch(xyz: np.ndarray, path) -> Path:
    """Two projections of the trajectory: (x, z) and (y, z)."""
    theta = np.linspace(0, 2 * np.pi, 361)
    with plt.rc_context({**STYLE, "figure.figsize": (7.0, 3.6)}):
        fig, axes = plt.subplots(1, 2)
        for ax, col, name in zip(axes, (0, 1), ("x", "y")):
            ax.plot(np.cos(theta), np.sin(theta), color="0.7", lw=0.8)
            ax.plot(xyz[:, col], xyz[:, 2], lw=1.0)
            ax.plot(xyz[0, col], xyz[0, 2], "o", color="tab:green", label="start")
            ax.plot(xyz[-1, col], xyz[-1, 2], "s", color="tab:red", label="end")
            ax.set_aspect("equal")
            ax.set_xlabel(name)
            ax.set_ylabel("z")
        axes[0].legend(loc="lower left", fontsize="small")
        return _save(fig, Path(path))


def plot_intensity(z, I1, I2, path, xlabel: str = "z") -> Path:
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        ax.plot(z, I1, label="I1")
        ax.plot(z, I2, label="I2")
        ax.set_xlabel(xlabel)
        ax.set_ylabel("intensity")
        ax.set_ylim(-0.02, 1.02)
        ax.legend(loc="best")
        return _save(fig, Path(path))
