"""
Command-line front end.

::

    adiabatic-pdm run <config-or-preset>... [--out DIR] [--dt DT] [--jobs N]
    adiabatic-pdm pdm <config-or-preset> [--out DIR] [--dt DT]
    adiabatic-pdm presets list

Each run writes into ``<out>/<name>/``: ``trace.csv``, ``report.json`` and,
as requested by the config, ``bloch.csv``, ``intensity.csv`` and SVG plots.
``pdm`` additionally writes ``schedule.json``, a config with the synthesized
pauses spelled out; running it reproduces the synthesis trace bit for bit.

Exit codes: 0 success, 2 config error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, RunConfig, load_preset, preset_names, resolve
from .core import InvalidArgumentError
from .pdm import VerificationError, synthesize, verify
from .propagator import EvolutionTrace, evolve
from .scenarios import bloch_vectors, intensities
from .transition import transition_report

OUT_ENV = "ADIABATIC_PDM_OUT"
DEFAULT_OUT = "runs"
REPORT_SCHEMA = "adiabatic-pdm/report/1"
TRACE_SCHEMA = "adiabatic-pdm/trace/1"
EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 2, 3
BAND_NAMES = ("-", "+")


def band_name(n: int, dim: int) -> str:
    return BAND_NAMES[n] if dim == 2 else str(n)


def trace_columns(dim: int) -> list[str]:
    cols = ["segment", "t", "lambda", "speed"]
    for n in range(dim):
        b = band_name(n, dim)
        cols += [f"re_c{b}", f"im_c{b}", f"pop{b}", f"E{b}", f"re_P{b}", f"im_P{b}", f"re_ITA{b}"]
    return cols


def trace_table(trace: EvolutionTrace) -> np.ndarray:
    cols = [trace.segments, trace.times, trace.lambdas, trace.speeds]
    pops = trace.populations
    for n in range(trace.dim):
        cols += [
            trace.c[:, n].real,
            trace.c[:, n].imag,
            pops[:, n],
            trace.energies[:, n],
            trace.P[:, n].real,
            trace.P[:, n].imag,
            trace.ita[:, n].real,
        ]
    return np.column_stack([np.asarray(c, dtype=float) for c in cols])


def results_digest(trace: EvolutionTrace) -> str:
    """SHA-256 over the raw bytes of the numeric trace arrays."""
    h = hashlib.sha256()
    for arr in (trace.times, trace.lambdas, trace.speeds, trace.states, trace.c, trace.P, trace.ita):
        h.update(np.ascontiguousarray(arr).astype(arr.dtype.newbyteorder("<"), copy=False).tobytes())
    return h.hexdigest()


def _write_csv(path: Path, header: list[str], table: np.ndarray):
    np.savetxt(path, table, delimiter=",", header=",".join(header), comments="", fmt="%.17g")


def _complex_pairs(z) -> list[list[float]]:
    return [[float(v.real), float(v.imag)] for v in np.asarray(z)]


def execute(cfg: RunConfig, dt: float | None = None):
    """Run (or synthesize and run) a config.  Returns ``(trace, pdm_result)``."""
    policy = cfg.policy(dt)
    psi0 = cfg.initial_state()
    if cfg.pdm is not None:
        p = cfg.pdm
        res = synthesize(
            cfg.base_schedule(),
            psi0,
            cfg.target_band(),
            p["mode"],
            policy,
            floor=p.get("floor", 1e-9),
            hold_multiple=p.get("hold_multiple", 1),
        )
        return res.trace, res
    return evolve(cfg.schedule(), psi0, policy), None


def build_report(cfg: RunConfig, trace: EvolutionTrace, pdm_result=None) -> dict:
    rep = transition_report(trace, cfg.threshold)
    path = trace.schedule.path
    dim = trace.dim
    pops0 = trace.populations[0]
    report = {
        "schema": REPORT_SCHEMA,
        "trace_schema": TRACE_SCHEMA,
        "version": __version__,
        "name": cfg.name,
        "units": cfg.units,
        "config_digest": cfg.digest(),
        "results_digest": results_digest(trace),
        "dt": trace.dt,
        "samples": len(trace),
        "initial_band": band_name(int(np.argmax(pops0)), dim),
        "final_band": band_name(trace.final_band, dim),
        "final_populations": {band_name(n, dim): float(v) for n, v in enumerate(trace.final_populations)},
        "ita": {band_name(n, dim): [float(v.real), float(v.imag)] for n, v in enumerate(rep.ita)},
        "threshold": rep.threshold,
        "verdict": rep.verdict,
        "criterion_max": rep.criterion_max,
        "eq1_residual": rep.eq1_residual,
        "duration": path.duration,
        "max_speed": path.max_speed,
        "average_speed": path.average_speed,
        "final_state": _complex_pairs(trace.states[-1]),
    }
    if pdm_result is not None:
        events = pdm_result.events
        info = {
            "mode": pdm_result.mode,
            "target": band_name(pdm_result.target_band, dim),
            "warning": pdm_result.warning,
            "noop": pdm_result.noop,
        }
        try:
            pr = verify(pdm_result)
            info.update(verified=True, min_signed_itp=pr.min_signed_itp, base_duration=pdm_result.base.duration)
        except VerificationError as exc:
            info.update(verified=False, error=str(exc))
        report["pdm"] = info
    else:
        events = tuple(cfg.pause_events())
    report["pauses"] = [{"t_base": e.t_base, "duration": e.duration} for e in events]
    report["pause_count"] = len(events)
    if dim == 2 and cfg.data["family"]["type"] == "waveguide":
        power = np.abs(trace.states[-1]) ** 2
        report["final_intensity"] = {"I1": float(power[0]), "I2": float(power[1])}
    return report


def write_outputs(cfg: RunConfig, trace: EvolutionTrace, report: dict, out_dir: Path) -> list[Path]:
    from . import plotting

    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    p = out_dir / "trace.csv"
    _write_csv(p, trace_columns(trace.dim), trace_table(trace))
    written.append(p)
    p = out_dir / "report.json"
    p.write_text(json.dumps(report, indent=2) + "\n")
    written.append(p)
    want = cfg.outputs
    xlabel = "z" if cfg.data["family"]["type"] == "waveguide" else "t"
    if cfg.units:
        xlabel = f"{xlabel} [{cfg.units}]"
    two_level = trace.dim == 2
    if want.get("bloch") and two_level:
        xyz = bloch_vectors(trace.states)
        p = out_dir / "bloch.csv"
        _write_csv(p, ["t", "x", "y", "z"], np.column_stack([trace.times, xyz]))
        written.append(p)
        if want.get("plots"):
            written.append(plotting.plot_bloch(xyz, out_dir / "bloch.svg"))
    if want.get("intensity") and two_level:
        it = intensities(trace)
        p = out_dir / "intensity.csv"
        _write_csv(p, ["z", "I1", "I2"], np.column_stack([it.z, it.I1, it.I2]))
        written.append(p)
        if want.get("plots"):
            written.append(plotting.plot_intensity(it.z, it.I1, it.I2, out_dir / "intensity.svg", xlabel))
    if want.get("plots"):
        written.append(plotting.plot_populations(trace, out_dir / "populations.svg", xlabel))
        written.append(plotting.plot_itp(trace, out_dir / "itp.svg", xlabel))
    return written


def schedule_config(cfg: RunConfig, trace: EvolutionTrace, pdm_result) -> RunConfig:
    """The synthesized schedule as an explicit-pause config with the step pinned."""
    policy = dict(cfg.data.get("policy", {}))
    policy["dt"] = trace.dt
    pauses = [{"t_base": e.t_base, "duration": e.duration} for e in pdm_result.events]
    data = {k: v for k, v in cfg.data.items() if k != "pdm"}
    data.update(name=f"{cfg.name}-schedule", policy=policy, pauses=pauses)
    return RunConfig(data, cfg.source)


def _fail(code: int, message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return code


def _guarded(fn, *args) -> int:
    try:
        return fn(*args)
    except ConfigError as exc:
        return _fail(EXIT_CONFIG, str(exc))
    except InvalidArgumentError as exc:
        return _fail(EXIT_CONFIG, f"invalid run: {exc}")
    except (ArithmeticError, AssertionError) as exc:
        return _fail(EXIT_NUMERICAL, f"numerical failure ({type(exc).__name__}): {exc}")


def _run_one(ref: str, out: str, dt: float | None) -> int:
    cfg = resolve(ref)
    trace, res = execute(cfg, dt)
    report = build_report(cfg, trace, res)
    out_dir = Path(out) / cfg.name
    write_outputs(cfg, trace, report, out_dir)
    line = f"{cfg.name}: verdict={report['verdict']} final_band={report['final_band']} pauses={report['pause_count']}"
    print(f"{line} -> {out_dir}")
    if res is not None and res.warning:
        print(f"warning: {cfg.name}: {res.warning}", file=sys.stderr)
    if report.get("pdm", {}).get("verified") is False:
        return _fail(EXIT_NUMERICAL, report["pdm"]["error"])
    return EXIT_OK


def run_one(ref: str, out: str, dt: float | None = None) -> int:
    return _guarded(_run_one, ref, out, dt)


def cmd_run(args) -> int:
    refs = args.configs
    if args.jobs > 1 and len(refs) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            codes = list(pool.map(run_one, refs, [args.out] * len(refs), [args.dt] * len(refs)))
    else:
        codes = [run_one(s, args.out, args.dt) for s in refs]
    return max(codes)


def _pdm(ref: str, out: str, dt: float | None) -> int:
    cfg = resolve(ref)
    if cfg.pdm is None:
        raise ConfigError("pdm needs a config with a 'pdm' block", "pdm", None, cfg.source)
    trace, res = execute(cfg, dt)
    report = build_report(cfg, trace, res)
    sched = schedule_config(cfg, trace, res)
    out_dir = Path(out) / cfg.name
    write_outputs(cfg, trace, report, out_dir)
    (out_dir / "schedule.json").write_text(sched.dumps())
    print(f"{cfg.name}: {len(res.events)} pause(s) -> {out_dir / 'schedule.json'}")
    if res.warning:
        print(f"warning: {cfg.name}: {res.warning}", file=sys.stderr)
    if report["pdm"]["verified"] is False:
        return _fail(EXIT_NUMERICAL, report["pdm"]["error"])
    return EXIT_OK


def cmd_pdm(args) -> int:
    return _guarded(_pdm, args.config, args.out, args.dt)


def cmd_presets(args) -> int:
    for name in preset_names():
        print(f"{name:22s} {load_preset(name).data.get('description', '')}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "--out",
        default=os.environ.get(OUT_ENV, DEFAULT_OUT),
        help=f"output root; one subdirectory per run (default ${OUT_ENV} or '{DEFAULT_OUT}')",
    )
    common.add_argument("--dt", type=float, default=None, help="override the config's integration step")
    common.add_argument("--seed", type=int, default=None, help="reserved; the pipeline is deterministic")

    parser = argparse.ArgumentParser(prog="adiabatic-pdm", description=__doc__.split("\n\n")[0].strip())
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", parents=[common], help="run configs or shipped presets")
    p.add_argument("configs", nargs="+", metavar="config")
    p.add_argument("--jobs", type=int, default=1, help="run independent configs in parallel")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("pdm", parents=[common], help="synthesize a pause schedule and write it as a config")
    p.add_argument("config")
    p.set_defaults(func=cmd_pdm)

    p = sub.add_parser("presets", help="shipped preset configs")
    p.add_argument("action", choices=["list"])
    p.set_defaults(func=cmd_presets)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "dt", None) is not None and not args.dt > 0:
        return _fail(EXIT_CONFIG, f"--dt must be positive, got {args.dt!r}")
    if getattr(args, "jobs", 1) < 1:
        return _fail(EXIT_CONFIG, "--jobs must be at least 1")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
