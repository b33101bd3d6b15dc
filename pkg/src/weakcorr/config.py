"""JSON run configuration.

Example::

    {
      "grid": {"n1": 256, "n2": 256, "x1_min": -8, "x1_max": 8, "x2_min": -8, "x2_max": 8},
      "physics": {"hbar": 1, "m1": 1, "m2": 1},
      "state": {"kind": "general_gaussian", "a": 0.5, "b": 0.2, "lambda": 0.3},
      "analysis": {"tau": 0.001, "eps_rel": 1e-8, "scheme": "fd4", "representation": "position"},
      "outputs": {"report_path": "report.json", "fields_dir": "fields",
                  "sweep": {"parameter": "lambda", "values": [0, 0.1, 0.2, 0.3], "path": "sweep.csv"}}
    }

Every block except ``state`` is optional (``verify`` ignores it). Relative
output paths resolve against the output directory, relative state-file
paths against the directory holding the config.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from .detector import DEFAULT_TAU, check_tau
from .exceptions import ConfigurationError, InputFormatError, UsageError
from .grid import DEFAULT_EPS_REL, SCHEMES, GridSpec, PhysicsParams
from .states import StateSpec

ANALYSIS_REPRESENTATIONS = ("position", "momentum", "both")
_TOP_KEYS = {"grid", "physics", "state", "analysis", "outputs"}


@dataclass(frozen=True)
class AnalysisOptions:
    tau: float = DEFAULT_TAU
    eps_rel: float = DEFAULT_EPS_REL
    scheme: str = "fd4"
    representation: str = "position"
    tol: float | None = None  # identity-suite tolerance; None picks it from the grid size

    def __post_init__(self):
        try:
            check_tau(self.tau)
        except UsageError as exc:
            raise ConfigurationError(str(exc)) from None
        if not (isinstance(self.eps_rel, (int, float)) and 0 < self.eps_rel <= 1e-2):
            raise ConfigurationError(f"eps_rel must lie in (0, 1e-2], got {self.eps_rel!r}")
        if self.scheme not in SCHEMES:
            raise ConfigurationError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        if self.representation not in ANALYSIS_REPRESENTATIONS:
            raise ConfigurationError(
                f"representation must be one of {ANALYSIS_REPRESENTATIONS}, got {self.representation!r}")
        if self.tol is not None and not (isinstance(self.tol, (int, float)) and self.tol > 0):
            raise ConfigurationError(f"tol must be a positive number, got {self.tol!r}")

    def to_dict(self) -> dict:
        d = {"tau": self.tau, "eps_rel": self.eps_rel, "scheme": self.scheme,
             "representation": self.representation}
        if self.tol is not None:
            d["tol"] = self.tol
        return d


@dataclass(frozen=True)
class SweepOptions:
    parameter: str
    values: tuple
    path: str = "sweep.csv"

    def to_dict(self) -> dict:
        return {"parameter": self.parameter, "values": list(self.values), "path": self.path}


@dataclass(frozen=True)
class Outputs:
    report_path: str = "report.json"
    fields_dir: str | None = None
    sweep: SweepOptions | None = None

    def to_dict(self) -> dict:
        d = {"report_path": self.report_path}
        if self.fields_dir is not None:
            d["fields_dir"] = self.fields_dir
        if self.sweep is not None:
            d["sweep"] = self.sweep.to_dict()
        return d


@dataclass(frozen=True)
class RunConfig:
    grid: GridSpec = field(default_factory=GridSpec)
    physics: PhysicsParams = field(default_factory=PhysicsParams)
    state: StateSpec | None = None
    analysis: AnalysisOptions = field(default_factory=AnalysisOptions)
    outputs: Outputs = field(default_factory=Outputs)
    base_dir: Path = Path(".")     # where relative output paths land
    config_dir: Path = Path(".")   # where relative state-file paths are looked up

    def resolve(self, path) -> Path:
        path = Path(path)
        return path if path.is_absolute() else self.base_dir / path

    def resolve_input(self, path) -> Path:
        path = Path(path)
        return path if path.is_absolute() else self.config_dir / path

    def require_state(self) -> StateSpec:
        if self.state is None:
            raise ConfigurationError("config has no 'state' block")
        return self.state

    def to_dict(self) -> dict:
        return {"grid": self.grid.to_dict(), "physics": self.physics.to_dict(),
                "state": None if self.state is None else self.state.to_dict(),
                "analysis": self.analysis.to_dict(), "outputs": self.outputs.to_dict()}


def _block(d: dict, key: str) -> dict:
    value = d.get(key, {})
    if not isinstance(value, dict):
        raise ConfigurationError(f"'{key}' must be a JSON object")
    return value


def _build(cls, kwargs: dict, name: str):
    try:
        return cls(**kwargs)
    except TypeError as exc:
        raise ConfigurationError(f"invalid '{name}' block: {exc}") from None


def _state(d) -> StateSpec:
    if not isinstance(d, dict):
        raise ConfigurationError("'state' must be a JSON object")
    try:
        return StateSpec.from_dict(d)
    except TypeError as exc:
        raise ConfigurationError(f"invalid 'state' block: {exc}") from None


def parse_config(d: dict, base_dir=".", config_dir=None) -> RunConfig:
    if not isinstance(d, dict):
        raise ConfigurationError("config must be a JSON object")
    unknown = set(d) - _TOP_KEYS
    if unknown:
        raise ConfigurationError(f"unknown config blocks: {sorted(unknown)}")
    grid = _build(GridSpec, _block(d, "grid"), "grid")
    physics = _build(PhysicsParams, _block(d, "physics"), "physics")
    state = _state(d["state"]) if d.get("state") is not None else None
    analysis = _build(AnalysisOptions, _block(d, "analysis"), "analysis")
    out = dict(_block(d, "outputs"))
    sweep = out.pop("sweep", None)
    if sweep is not None:
        if not isinstance(sweep, dict) or "parameter" not in sweep or "values" not in sweep:
            raise ConfigurationError("'outputs.sweep' needs 'parameter' and 'values'")
        values = sweep["values"]
        if not isinstance(values, list) or not all(
                isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v) for v in values):
            raise ConfigurationError("'outputs.sweep.values' must be a list of finite numbers")
        extra = set(sweep) - {"parameter", "values", "path"}
        if extra:
            raise ConfigurationError(f"unknown sweep keys: {sorted(extra)}")
        sweep = SweepOptions(str(sweep["parameter"]), tuple(float(v) for v in values),
                             str(sweep.get("path", "sweep.csv")))
    outputs = _build(Outputs, {**out, "sweep": sweep}, "outputs")
    return RunConfig(grid, physics, state, analysis, outputs, Path(base_dir),
                     Path(base_dir if config_dir is None else config_dir))


def load_config(path, base_dir=None) -> RunConfig:
    path = Path(path)
    if not path.exists():
        raise InputFormatError(f"config file not found: {path}")
    try:
        d = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise InputFormatError(f"{path}: malformed JSON ({exc})") from None
    return parse_config(d, path.parent if base_dir is None else base_dir, path.parent)
