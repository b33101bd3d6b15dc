"""Normalized two-particle wavefunctions.

The analytic test family (product, amplitude-correlated, phase-correlated
and general Gaussians, plus a two-lobe cat state) and plain-text file I/O.
Every constructor returns a :class:`WaveFunction` normalized on its grid.
"""

from __future__ import annotations

import csv
import json
import math
import warnings
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Callable

import numpy as np

from .exceptions import ConfigurationError, InputFormatError, UsageError
from .grid import (
    Grid,
    GridSpec,
    PhysicsParams,
    boundary_decay,
    decays_at_boundary,
    default_grid,
    integrate,
    make_grid,
)

REPRESENTATIONS = ("position", "momentum")
STATE_KINDS = ("product_gaussian", "correlated_gaussian", "phase_gaussian",
               "general_gaussian", "cat", "file")
GAUSSIAN_KINDS = STATE_KINDS[:4]

Amplitude = Callable[[np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True, eq=False)
class WaveFunction:
    """Complex amplitude sampled on a grid.

    ``amplitude``, when present, evaluates the same normalized state at
    arbitrary points; analytic factory states carry it so that the oracle can
    resample them and the weak probe can shift them exactly.
    """

    psi: np.ndarray
    grid: Grid
    physics: PhysicsParams = field(default_factory=PhysicsParams)
    representation: str = "position"
    amplitude: Amplitude | None = None
    label: str = ""
    boundary_decay_ok: bool = True
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        psi = np.asarray(self.psi, dtype=complex)
        if psi.shape != self.grid.shape:
            raise UsageError(f"psi shape {psi.shape} does not match grid {self.grid.shape}")
        if self.representation not in REPRESENTATIONS:
            raise UsageError(f"representation must be one of {REPRESENTATIONS}")
        psi.setflags(write=False)
        object.__setattr__(self, "psi", psi)

    @property
    def rho(self) -> np.ndarray:
        return self.psi.real ** 2 + self.psi.imag ** 2

    @property
    def norm(self) -> float:
        return integrate(self.rho, self.grid)

    @property
    def is_analytic(self) -> bool:
        return self.amplitude is not None

    def __repr__(self):
        return (f"WaveFunction(label={self.label!r}, representation={self.representation!r}, "
                f"grid={self.grid.spec!r})")


@dataclass(frozen=True)
class StateSpec:
    """Declarative description of a state, as found in run configs.

    Only the parameters relevant to ``kind`` are used; ``lam`` is the phase
    coupling (``"lambda"`` in config files).
    """

    kind: str
    sigma1: float = 1.0
    sigma2: float = 1.0
    sigma: float = 1.0
    a: float = 0.5
    b: float = 0.2
    lam: float = 0.3
    c: float = 2.0
    parity: int = 1
    path: str | None = None

    def __post_init__(self):
        if self.kind not in STATE_KINDS:
            raise ConfigurationError(f"unknown state kind {self.kind!r}; expected one of {STATE_KINDS}")
        if self.kind in ("correlated_gaussian", "general_gaussian") and not self.a > abs(self.b):
            raise ConfigurationError(f"{self.kind} requires a > |b| (got a={self.a}, b={self.b})")
        if self.kind == "phase_gaussian" and not self.sigma > 0:
            raise ConfigurationError("phase_gaussian requires sigma > 0")
        if self.kind == "product_gaussian" and not (self.sigma1 > 0 and self.sigma2 > 0):
            raise ConfigurationError("product_gaussian requires sigma1, sigma2 > 0")
        if self.kind == "cat" and not (self.c > 0 and self.sigma > 0):
            raise ConfigurationError("cat requires c > 0 and sigma > 0")
        if self.kind == "cat" and self.parity not in (1, -1):
            raise ConfigurationError("cat parity must be +1 or -1")
        if self.kind == "file" and not self.path:
            raise ConfigurationError("file state requires a path")

    @classmethod
    def from_dict(cls, d: dict) -> "StateSpec":
        d = dict(d)
        if "lambda" in d:
            d["lam"] = d.pop("lambda")
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigurationError(f"unknown state parameters: {sorted(unknown)}")
        if "kind" not in d:
            raise ConfigurationError("state block needs a 'kind'")
        return cls(**d)

    def with_param(self, name: str, value) -> "StateSpec":
        name = "lam" if name == "lambda" else name
        if name not in {f.name for f in fields(self)} or name in ("kind", "path"):
            raise ConfigurationError(f"cannot sweep state parameter {name!r}")
        return replace(self, **{name: value})

    def to_dict(self) -> dict:
        keys = {
            "product_gaussian": ("sigma1", "sigma2"),
            "correlated_gaussian": ("a", "b"),
            "phase_gaussian": ("sigma", "lam"),
            "general_gaussian": ("a", "b", "lam"),
            "cat": ("c", "sigma", "parity"),
            "file": ("path",),
        }[self.kind]
        out = {"kind": self.kind}
        for k in keys:
            out["lambda" if k == "lam" else k] = getattr(self, k)
        return out


def _resolve(grid: Grid | None, physics: PhysicsParams | None):
    return (grid if grid is not None else default_grid(),
            physics if physics is not None else PhysicsParams())


def from_amplitude(amplitude: Amplitude, grid: Grid | None = None,
                   physics: PhysicsParams | None = None, label: str = "",
                   require_decay: bool = True, meta: dict | None = None) -> WaveFunction:
    """Sample an (unnormalized) amplitude on the grid and normalize it."""
    grid, physics = _resolve(grid, physics)
    raw = np.asarray(amplitude(grid.X1, grid.X2), dtype=complex)
    norm = integrate(np.abs(raw) ** 2, grid)
    if not norm > 0 or not math.isfinite(norm):
        raise ConfigurationError(f"state {label!r} has zero or non-finite norm on this grid")
    scale = 1.0 / math.sqrt(norm)
    psi = raw * scale
    ok = decays_at_boundary(np.abs(psi) ** 2)
    if require_decay and not ok:
        raise ConfigurationError(
            f"state {label!r} does not decay at the domain edge "
            f"(edge/peak density {boundary_decay(np.abs(psi) ** 2):.2e}); enlarge the grid"
        )

    def normalized(x1, x2, _f=amplitude, _s=scale):
        return _f(x1, x2) * _s

    return WaveFunction(psi, grid, physics, amplitude=normalized, label=label,
                        boundary_decay_ok=ok, meta=dict(meta or {}))


def _gaussian(m11: float, m12: float, m22: float, lam: float, grid, physics, label):
    # rho ∝ exp(-x^T M x), S = lam * x1 * x2
    def amp(x1, x2):
        return np.exp(-0.5 * (m11 * x1 ** 2 + 2.0 * m12 * x1 * x2 + m22 * x2 ** 2)
                      + 1j * lam * x1 * x2)

    return from_amplitude(amp, grid, physics, label, meta={"gaussian": (m11, m12, m22, lam)})


def product_gaussian(sigma1: float = 1.0, sigma2: float = 1.0, grid: Grid | None = None,
                     physics: PhysicsParams | None = None) -> WaveFunction:
    """Minimum-uncertainty product state with position spreads ``sigma1``, ``sigma2``."""
    StateSpec("product_gaussian", sigma1=sigma1, sigma2=sigma2)
    return _gaussian(1 / (2 * sigma1 ** 2), 0.0, 1 / (2 * sigma2 ** 2), 0.0, grid, physics,
                     f"product_gaussian({sigma1:g},{sigma2:g})")


def correlated_gaussian(a: float = 0.5, b: float = 0.2, grid: Grid | None = None,
                        physics: PhysicsParams | None = None) -> WaveFunction:
    """Real state with rho ∝ exp(-a(x1² + x2²) - 2b x1 x2): amplitude entanglement only."""
    StateSpec("correlated_gaussian", a=a, b=b)
    return _gaussian(a, b, a, 0.0, grid, physics, f"correlated_gaussian({a:g},{b:g})")


def phase_gaussian(sigma: float = 1.0, lam: float = 0.3, grid: Grid | None = None,
                   physics: PhysicsParams | None = None) -> WaveFunction:
    """Factorized density with the non-additive phase ``lam * x1 * x2``."""
    StateSpec("phase_gaussian", sigma=sigma, lam=lam)
    m = 1 / (2 * sigma ** 2)
    return _gaussian(m, 0.0, m, lam, grid, physics, f"phase_gaussian({sigma:g},{lam:g})")


def general_gaussian(a: float = 0.5, b: float = 0.2, lam: float = 0.3, grid: Grid | None = None,
                     physics: PhysicsParams | None = None) -> WaveFunction:
    StateSpec("general_gaussian", a=a, b=b, lam=lam)
    return _gaussian(a, b, a, lam, grid, physics, f"general_gaussian({a:g},{b:g},{lam:g})")


def cat_state(c: float = 2.0, sigma: float = 0.5, grid: Grid | None = None,
              physics: PhysicsParams | None = None, parity: int = 1) -> WaveFunction:
    """g(x1 - c) g(x2 - c) + parity * g(x1 + c) g(x2 + c) with g(x) = exp(-x²/4σ²).

    The even state (``parity=1``) is real and positive with a low-density
    saddle between the lobes; the odd one has a nodal line x1 + x2 = 0.
    """
    StateSpec("cat", c=c, sigma=sigma, parity=parity)
    s = 4.0 * sigma ** 2

    def amp(x1, x2):
        return (np.exp(-((x1 - c) ** 2 + (x2 - c) ** 2) / s)
                + parity * np.exp(-((x1 + c) ** 2 + (x2 + c) ** 2) / s))

    return from_amplitude(amp, grid, physics, f"cat_state({c:g},{sigma:g},{parity:+d})")


def make_state(spec: StateSpec, grid: Grid | None = None,
               physics: PhysicsParams | None = None) -> WaveFunction:
    """Build the state a :class:`StateSpec` describes."""
    if spec.kind == "product_gaussian":
        return product_gaussian(spec.sigma1, spec.sigma2, grid, physics)
    if spec.kind == "correlated_gaussian":
        return correlated_gaussian(spec.a, spec.b, grid, physics)
    if spec.kind == "phase_gaussian":
        return phase_gaussian(spec.sigma, spec.lam, grid, physics)
    if spec.kind == "general_gaussian":
        return general_gaussian(spec.a, spec.b, spec.lam, grid, physics)
    if spec.kind == "cat":
        return cat_state(spec.c, spec.sigma, grid, physics, parity=spec.parity)
    return load_wavefunction(spec.path)


def multiply_phase(wf: WaveFunction, phase: Callable[[np.ndarray, np.ndarray], np.ndarray],
                   label: str | None = None) -> WaveFunction:
    """Return ``wf`` multiplied pointwise by ``exp(1j * phase(x1, x2))``."""
    factor = np.exp(1j * phase(wf.grid.X1, wf.grid.X2))
    amp = None
    if wf.amplitude is not None:
        def amp(x1, x2, _f=wf.amplitude):
            return _f(x1, x2) * np.exp(1j * phase(x1, x2))
    return WaveFunction(wf.psi * factor, wf.grid, wf.physics, wf.representation, amp,
                        label if label is not None else wf.label, wf.boundary_decay_ok)


def boost(wf: WaveFunction, k: float, axis: int = 1) -> WaveFunction:
    """Galilean boost ψ -> ψ exp(i k x_axis)."""
    if axis == 1:
        return multiply_phase(wf, lambda x1, x2: k * x1, f"{wf.label}*exp(i{k:g}x1)")
    return multiply_phase(wf, lambda x1, x2: k * x2, f"{wf.label}*exp(i{k:g}x2)")


def global_phase(wf: WaveFunction, theta: float) -> WaveFunction:
    return multiply_phase(wf, lambda x1, x2: np.full(np.shape(x1), theta), wf.label)


def swap_particles(wf: WaveFunction) -> WaveFunction:
    """Exchange the particle labels (transpose the grid, masses and amplitude)."""
    s = wf.grid.spec
    spec = GridSpec(s.n2, s.n1, s.x2_min, s.x2_max, s.x1_min, s.x1_max, s.periodic)
    physics = PhysicsParams(wf.physics.hbar, wf.physics.m2, wf.physics.m1)
    amp = None
    if wf.amplitude is not None:
        def amp(x1, x2, _f=wf.amplitude):
            return _f(x2, x1)
    return WaveFunction(wf.psi.T.copy(), make_grid(spec), physics, wf.representation, amp,
                        f"swap({wf.label})", wf.boundary_decay_ok)


# ---------------------------------------------------------------------------
# file format: <stem>.json header + <stem>.csv body with rows "i,j,re,im"

HEADER_KEYS = ("n1", "n2", "x1_min", "x1_max", "x2_min", "x2_max", "hbar", "m1", "m2")
NORM_WARN_TOL = 1e-6


def _paths(path) -> tuple[Path, Path]:
    path = Path(path)
    return path.with_suffix(".json"), path.with_suffix(".csv")


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def save_wavefunction(wf: WaveFunction, path) -> tuple[Path, Path]:
    """Write ``wf`` as a JSON header plus CSV body; returns both paths."""
    header_path, body_path = _paths(path)
    header = {**wf.grid.spec.to_dict(), **wf.physics.to_dict()}
    if wf.representation != "position":
        header["representation"] = wf.representation
    header_path.write_text(json.dumps(header, indent=2, sort_keys=True) + "\n")
    n1, n2 = wf.grid.shape
    with body_path.open("w", newline="") as fh:
        fh.write("i,j,re,im\n")
        re, im = wf.psi.real, wf.psi.imag
        for i in range(n1):
            fh.write("".join(f"{i},{j},{_fmt(re[i, j])},{_fmt(im[i, j])}\n" for j in range(n2)))
    return header_path, body_path


def load_wavefunction(path, renormalize: bool = True) -> WaveFunction:
    """Read a wavefunction written by :func:`save_wavefunction`.

    States whose norm differs from 1 by more than 1e-6 are renormalized with a
    warning; states that do not decay at the domain edge load with a warning
    and ``boundary_decay_ok=False``.
    """
    header_path, body_path = _paths(path)
    for p in (header_path, body_path):
        if not p.exists():
            raise InputFormatError(f"wavefunction file not found: {p}")
    try:
        header = json.loads(header_path.read_text())
    except json.JSONDecodeError as exc:
        raise InputFormatError(f"{header_path}: malformed JSON header ({exc})") from None
    if not isinstance(header, dict):
        raise InputFormatError(f"{header_path}: header must be a JSON object")
    missing = [k for k in HEADER_KEYS if k not in header]
    if missing:
        raise InputFormatError(f"{header_path}: header is missing {missing}")
    try:
        spec = GridSpec(header["n1"], header["n2"], header["x1_min"], header["x1_max"],
                        header["x2_min"], header["x2_max"], bool(header.get("periodic", False)))
        physics = PhysicsParams(header["hbar"], header["m1"], header["m2"])
    except (ConfigurationError, TypeError, ValueError) as exc:
        raise InputFormatError(f"{header_path}: invalid header ({exc})") from None
    representation = header.get("representation", "position")
    if representation not in REPRESENTATIONS:
        raise InputFormatError(f"{header_path}: unknown representation {representation!r}")

    n1, n2 = spec.n1, spec.n2
    psi = np.full((n1, n2), np.nan + 0j)
    seen = np.zeros((n1, n2), dtype=bool)
    with body_path.open(newline="") as fh:
        reader = csv.reader(fh)
        first = next(reader, None)
        if first is None or [c.strip() for c in first] != ["i", "j", "re", "im"]:
            raise InputFormatError(f"{body_path}, line 1: expected header row 'i,j,re,im'")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 4:
                raise InputFormatError(f"{body_path}, line {lineno}: expected 4 columns, got {len(row)}")
            try:
                i, j = int(row[0]), int(row[1])
                re, im = float(row[2]), float(row[3])
            except ValueError:
                raise InputFormatError(f"{body_path}, line {lineno}: cannot parse {row!r}") from None
            if not (0 <= i < n1 and 0 <= j < n2):
                raise InputFormatError(
                    f"{body_path}, line {lineno}: index ({i},{j}) outside the {n1}x{n2} grid")
            if not (math.isfinite(re) and math.isfinite(im)):
                raise InputFormatError(f"{body_path}, line {lineno}: non-finite value at index ({i},{j})")
            if seen[i, j]:
                raise InputFormatError(f"{body_path}, line {lineno}: duplicate index ({i},{j})")
            seen[i, j] = True
            psi[i, j] = complex(re, im)
    if not seen.all():
        i, j = (int(k) for k in np.argwhere(~seen)[0])
        raise InputFormatError(f"{body_path}: {int((~seen).sum())} grid points missing, first at index ({i},{j})")

    grid = make_grid(spec)
    norm = integrate(np.abs(psi) ** 2, grid)
    if not norm > 0:
        raise InputFormatError(f"{body_path}: wavefunction vanishes identically")
    if renormalize and abs(norm - 1.0) > NORM_WARN_TOL:
        warnings.warn(f"{body_path}: norm {norm:.8g} != 1, renormalizing", stacklevel=2)
        psi = psi / math.sqrt(norm)
    ok = decays_at_boundary(np.abs(psi) ** 2)
    if not ok:
        warnings.warn(f"{body_path}: state does not decay at the domain edge "
                      f"(edge/peak density {boundary_decay(np.abs(psi) ** 2):.2e})", stacklevel=2)
    return WaveFunction(psi, grid, physics, representation, label=f"file:{body_path.name}",
                        boundary_decay_ok=ok)
