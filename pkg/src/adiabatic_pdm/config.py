"""
Run configuration files (JSON).

A config names a Hamiltonian family, a parameter path, the initial state and
step policy, and optionally either a ``pdm`` block (synthesize pauses) or an
explicit ``pauses`` list (replay a synthesized schedule).  Example::

    {
      "name": "fig2-counter",
      "units": "mm",
      "family": {"type": "waveguide", "beta0": 0.0, "delta_beta": 0.0713},
      "path": {"waveguide": {"periods": 201, "period_len": 1.33}},
      "initial_state": "|1>",
      "policy": {"dt": 0.04406...},
      "pdm": {"mode": "accumulate", "target": "-", "floor": 1e-09, "hold_multiple": 1}
    }

Floats are written with ``repr`` precision, so load -> dump -> load is exact.
"""

from __future__ import annotations

import copy
import hashlib
import json
import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .core import (
    HamiltonianSchedule,
    Hold,
    InvalidArgumentError,
    LinearSweepLZ,
    ParameterPath,
    Ramp,
    AngleSweep,
    build_lz_schedule,
    build_waveguide_schedule,
    waveguide_ramp_schedule,
)
from .pdm import PauseEvent, apply_pauses
from .propagator import StepPolicy

BAND_LABELS = {"-": 0, "+": 1}
KETS = {"|0>": [[1.0, 0.0], [0.0, 0.0]], "|1>": [[0.0, 0.0], [1.0, 0.0]]}
TOP_LEVEL = {"name", "description", "units", "family", "path", "initial_state", "policy", "pdm", "pauses", "outputs", "threshold"}


class ConfigError(ValueError):
    """Invalid config; ``line`` points into the source text when known."""

    def __init__(self, message: str, field: str | None = None, line: int | None = None, source: str | None = None):
        self.field = field
        self.line = line
        self.source = source
        where = f"{source or '<config>'}:{line}: " if line is not None else f"{source or '<config>'}: "
        super().__init__(where + message)


@dataclass(frozen=True)
class RunConfig:
    data: dict
    source: str | None = None

    @property
    def name(self) -> str:
        return self.data.get("name", "run")

    @property
    def units(self) -> str:
        return self.data.get("units", "time")

    @property
    def threshold(self) -> float:
        return float(self.data.get("threshold", 0.05))

    @property
    def pdm(self) -> dict | None:
        return self.data.get("pdm")

    @property
    def outputs(self) -> dict:
        return {"bloch": True, "plots": True, "intensity": self.data["family"]["type"] == "waveguide",
                **self.data.get("outputs", {})}

    def digest(self) -> str:
        return hashlib.sha256(canonical_json(self.data).encode()).hexdigest()

    def dumps(self) -> str:
        return json.dumps(self.data, indent=2) + "\n"

    def replace(self, **changes) -> "RunConfig":
        data = copy.deepcopy(self.data)
        for key, value in changes.items():
            if value is None:
                data.pop(key, None)
            else:
                data[key] = value
        return RunConfig(validate(data, self.source), self.source)

    def base_schedule(self) -> HamiltonianSchedule:
        return _base_schedule(self.data)

    def schedule(self) -> HamiltonianSchedule:
        """Base schedule with any explicit pauses applied."""
        base = self.base_schedule()
        events = self.pause_events()
        return base.with_path(apply_pauses(base.path, events)) if events else base

    def pause_events(self) -> list[PauseEvent]:
        return [PauseEvent(float(e["t_base"]), float(e["duration"])) for e in self.data.get("pauses", [])]

    def initial_state(self) -> np.ndarray:
        raw = self.data["initial_state"]
        pairs = KETS[raw] if isinstance(raw, str) else raw
        return np.array([complex(re_, im) for re_, im in pairs])

    def policy(self, dt: float | None = None) -> StepPolicy:
        p = dict(self.data.get("policy", {}))
        if dt is not None:
            p["dt"] = dt
        return StepPolicy(**p)

    def target_band(self) -> int:
        target = self.pdm["target"]
        return BAND_LABELS[target] if isinstance(target, str) else int(target)


def canonical_json(data) -> str:
    return json.dumps(data, sort_keys=True, separators=(",", ":"))


def _line_of(text: str | None, key: str) -> int | None:
    if not text:
        return None
    pattern = re.compile(r'"' + re.escape(key) + r'"\s*:')
    for n, line in enumerate(text.splitlines(), 1):
        if pattern.search(line):
            return n
    return None


class _Validator:
    def __init__(self, text: str | None, source: str | None):
        self.text = text
        self.source = source

    def fail(self, field: str, message: str):
        key = field.split(".")[-1].split("[")[0]
        raise ConfigError(f"{field}: {message}", field, _line_of(self.text, key), self.source)

    def number(self, block: dict, key: str, where: str, positive=False, nonzero=False, optional=False):
        field = f"{where}.{key}"
        if key not in block:
            if optional:
                return None
            self.fail(field, "missing")
        value = block[key]
        if isinstance(value, bool) or not isinstance(value, (int, float)) or not np.isfinite(value):
            self.fail(field, f"expected a finite number, got {value!r}")
        if positive and not value > 0:
            self.fail(field, f"must be positive, got {value!r}")
        if nonzero and value == 0:
            self.fail(field, "must be non-zero")
        return value

    def run(self, data) -> dict:
        if not isinstance(data, dict):
            self.fail("config", "top level must be an object")
        unknown = set(data) - TOP_LEVEL
        if unknown:
            self.fail(sorted(unknown)[0], "unknown key")
        for key in ("family", "path", "initial_state"):
            if key not in data:
                self.fail(key, "missing")
        fam = data["family"]
        if not isinstance(fam, dict) or fam.get("type") not in ("lz", "waveguide"):
            self.fail("family.type", "must be 'lz' or 'waveguide'")
        if fam["type"] == "lz":
            self.number(fam, "V", "family", nonzero=True)
        else:
            self.number(fam, "beta0", "family", optional=True)
            self.number(fam, "delta_beta", "family", positive=True)
        self.path(data["path"], fam["type"])
        self.state(data["initial_state"])
        if "policy" in data:
            pol = data["policy"]
            if not isinstance(pol, dict) or set(pol) - {"dt", "refine_on_error", "tol", "samples_per_unit"}:
                self.fail("policy", "allowed keys: dt, refine_on_error, tol, samples_per_unit")
            if pol.get("dt") is not None:
                self.number(pol, "dt", "policy", positive=True)
            if pol.get("samples_per_unit") is not None:
                self.number(pol, "samples_per_unit", "policy", positive=True)
            if "tol" in pol:
                tol = self.number(pol, "tol", "policy", positive=True)
                if tol > 1e-2:
                    self.fail("policy.tol", "must not exceed 1e-2")
        if "pdm" in data and "pauses" in data:
            self.fail("pauses", "give either a pdm block or explicit pauses, not both")
        if "pdm" in data:
            pdm = data["pdm"]
            if not isinstance(pdm, dict):
                self.fail("pdm", "must be an object")
            if pdm.get("mode") not in ("accumulate", "suppress"):
                self.fail("pdm.mode", "must be 'accumulate' or 'suppress'")
            if pdm.get("target") not in ("-", "+", 0, 1):
                self.fail("pdm.target", "must be '-', '+', 0 or 1")
            self.number(pdm, "floor", "pdm", optional=True)
            mult = pdm.get("hold_multiple", 1)
            if isinstance(mult, bool) or not isinstance(mult, int) or mult < 1 or mult % 2 == 0:
                self.fail("pdm.hold_multiple", f"must be a positive odd integer, got {mult!r}")
        if "pauses" in data:
            if not isinstance(data["pauses"], list):
                self.fail("pauses", "must be a list")
            for i, ev in enumerate(data["pauses"]):
                self.number(ev, "t_base", f"pauses[{i}]")
                self.number(ev, "duration", f"pauses[{i}]", positive=True)
        if "threshold" in data:
            self.number(data, "threshold", "config", positive=True)
        if "outputs" in data and not isinstance(data["outputs"], dict):
            self.fail("outputs", "must be an object")
        try:
            _base_schedule(data)
        except InvalidArgumentError as exc:
            self.fail("path", str(exc))
        return data

    def path(self, path, family: str):
        if not isinstance(path, dict):
            self.fail("path", "must be an object")
        if "sweep" in path:
            sw = path["sweep"]
            if family != "lz":
                self.fail("path.sweep", "linear sweeps belong to the 'lz' family")
            self.number(sw, "lambda_start", "path.sweep")
            self.number(sw, "lambda_end", "path.sweep")
            self.number(sw, "speed", "path.sweep", positive=True)
        elif "waveguide" in path:
            wg = path["waveguide"]
            if family != "waveguide":
                self.fail("path.waveguide", "needs the 'waveguide' family")
            if "length" in wg:
                self.number(wg, "length", "path.waveguide", positive=True)
            else:
                periods = self.number(wg, "periods", "path.waveguide", positive=True)
                if int(periods) != periods:
                    self.fail("path.waveguide.periods", "must be an integer")
                self.number(wg, "period_len", "path.waveguide", positive=True)
        elif "segments" in path:
            self.number(path, "lambda0", "path")
            if not isinstance(path["segments"], list) or not path["segments"]:
                self.fail("path.segments", "must be a non-empty list")
            for i, seg in enumerate(path["segments"]):
                where = f"path.segments[{i}]"
                if not isinstance(seg, dict) or seg.get("type") not in ("ramp", "hold"):
                    self.fail(where, "type must be 'ramp' or 'hold'")
                self.number(seg, "duration", where, positive=True)
                if seg["type"] == "ramp":
                    self.number(seg, "slope", where, nonzero=True)
        else:
            self.fail("path", "needs one of 'sweep', 'waveguide' or 'segments'")

    def state(self, raw):
        if isinstance(raw, str):
            if raw not in KETS:
                self.fail("initial_state", f"unknown label {raw!r} (use '|0>' or '|1>' or [[re, im], ...])")
            return
        if not isinstance(raw, list) or len(raw) != 2:
            self.fail("initial_state", "expected two [re, im] pairs")
        for pair in raw:
            if not isinstance(pair, list) or len(pair) != 2 or not all(isinstance(v, (int, float)) for v in pair):
                self.fail("initial_state", "expected two [re, im] pairs")
        norm = sum(a * a + b * b for a, b in raw)
        if abs(norm - 1.0) > 1e-10:
            self.fail("initial_state", f"not normalized (|psi|^2 = {norm!r})")


def _family(fam: dict):
    if fam["type"] == "lz":
        return LinearSweepLZ(float(fam["V"]))
    return AngleSweep(float(fam.get("beta0", 0.0)), float(fam["delta_beta"]))


def _base_schedule(data: dict) -> HamiltonianSchedule:
    fam, path = data["family"], data["path"]
    if "sweep" in path:
        sw = path["sweep"]
        return build_lz_schedule(fam["V"], sw["lambda_start"], sw["lambda_end"], sw["speed"])
    if "waveguide" in path:
        wg = path["waveguide"]
        if "length" in wg:
            return waveguide_ramp_schedule(fam.get("beta0", 0.0), fam["delta_beta"], wg["length"])
        return build_waveguide_schedule(fam.get("beta0", 0.0), fam["delta_beta"], wg["periods"], wg["period_len"])
    segs = tuple(
        Ramp(float(s["slope"]), float(s["duration"])) if s["type"] == "ramp" else Hold(float(s["duration"]))
        for s in path["segments"]
    )
    return HamiltonianSchedule(ParameterPath(segs, float(path["lambda0"])), _family(fam))


def validate(data, source: str | None = None, text: str | None = None) -> dict:
    return _Validator(text, source).run(data)


def loads(text: str, source: str | None = None) -> RunConfig:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(exc.msg, None, exc.lineno, source) from None
    return RunConfig(validate(data, source, text), source)


def load(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", source=str(path)) from None
    return loads(text, str(path))


def preset_names() -> list[str]:
    files = resources.files(__package__).joinpath("presets").iterdir()
    return sorted(f.name[: -len(".json")] for f in files if f.name.endswith(".json"))


def load_preset(name: str) -> RunConfig:
    ref = resources.files(__package__).joinpath("presets", f"{name}.json")
    if not ref.is_file():
        raise ConfigError(f"unknown preset {name!r}; see `presets list`")
    return loads(ref.read_text(), f"preset:{name}")


def resolve(ref: str) -> RunConfig:
    """A config file path, or the name of a shipped preset."""
    if Path(ref).is_file():
        return load(ref)
    if ref in preset_names():
        return load_preset(ref)
    return load(ref)
