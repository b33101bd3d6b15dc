"""Discretized two-particle configuration space.

One spatial dimension per particle, so the joint configuration space is a
uniform 2-D grid with ``x1`` along axis 0 and ``x2`` along axis 1 (``ij``
indexing). This module holds the numerical substrate used everywhere else:
trapezoidal quadrature, partial derivatives and the low-density mask.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .exceptions import (
    ConfigurationError,
    DegenerateStateError,
    NumericalDomainError,
    UsageError,
)

SCHEMES = ("fd4", "spectral")

#: Default relative density threshold below which quotient fields are not trusted.
DEFAULT_EPS_REL = 1e-8
#: Smallest fraction of unmasked points accepted before a state is called degenerate.
MIN_UNMASKED_FRACTION = 0.1
#: Edge-to-peak density ratio below which a state counts as decayed at the boundary.
BOUNDARY_DECAY_TOL = 1e-10


@dataclass(frozen=True)
class GridSpec:
    """Point counts and bounds of the configuration-space box.

    With ``periodic=False`` (the default) both endpoints are grid points and
    ``h = (max - min) / (n - 1)``. A periodic grid drops the upper endpoint,
    giving ``h = (max - min) / n``.
    """

    n1: int = 256
    n2: int = 256
    x1_min: float = -8.0
    x1_max: float = 8.0
    x2_min: float = -8.0
    x2_max: float = 8.0
    periodic: bool = False

    def __post_init__(self):
        for name in ("n1", "n2"):
            n = getattr(self, name)
            if isinstance(n, bool) or int(n) != n or n < 16:
                raise ConfigurationError(f"{name} must be an integer >= 16, got {n!r}")
            object.__setattr__(self, name, int(n))
        for axis in (1, 2):
            lo = float(getattr(self, f"x{axis}_min"))
            hi = float(getattr(self, f"x{axis}_max"))
            if not (math.isfinite(lo) and math.isfinite(hi)):
                raise ConfigurationError(f"x{axis} bounds must be finite, got [{lo}, {hi}]")
            if hi <= lo:
                raise ConfigurationError(f"x{axis}_max must exceed x{axis}_min, got [{lo}, {hi}]")
            object.__setattr__(self, f"x{axis}_min", lo)
            object.__setattr__(self, f"x{axis}_max", hi)

    @property
    def h1(self) -> float:
        return (self.x1_max - self.x1_min) / (self.n1 if self.periodic else self.n1 - 1)

    @property
    def h2(self) -> float:
        return (self.x2_max - self.x2_min) / (self.n2 if self.periodic else self.n2 - 1)

    def refined(self, factor: int) -> "GridSpec":
        """Same box with every cell split into ``factor`` cells."""
        if self.periodic:
            return GridSpec(self.n1 * factor, self.n2 * factor, self.x1_min, self.x1_max,
                            self.x2_min, self.x2_max, periodic=True)
        return GridSpec((self.n1 - 1) * factor + 1, (self.n2 - 1) * factor + 1,
                        self.x1_min, self.x1_max, self.x2_min, self.x2_max)

    def to_dict(self) -> dict:
        d = {"n1": self.n1, "n2": self.n2, "x1_min": self.x1_min, "x1_max": self.x1_max,
             "x2_min": self.x2_min, "x2_max": self.x2_max}
        if self.periodic:
            d["periodic"] = True
        return d


@dataclass(frozen=True)
class PhysicsParams:
    hbar: float = 1.0
    m1: float = 1.0
    m2: float = 1.0

    def __post_init__(self):
        for name in ("hbar", "m1", "m2"):
            value = float(getattr(self, name))
            if not (math.isfinite(value) and value > 0):
                raise ConfigurationError(f"{name} must be finite and > 0, got {value!r}")
            object.__setattr__(self, name, value)

    def mass(self, i: int) -> float:
        return self.m1 if check_axis(i) == 1 else self.m2

    def to_dict(self) -> dict:
        return {"hbar": self.hbar, "m1": self.m1, "m2": self.m2}


class Grid:
    """A :class:`GridSpec` with its axes, spacings and quadrature weights."""

    def __init__(self, spec: GridSpec):
        self.spec = spec
        self.h1 = spec.h1
        self.h2 = spec.h2
        self.x1 = spec.x1_min + self.h1 * np.arange(spec.n1)
        self.x2 = spec.x2_min + self.h2 * np.arange(spec.n2)
        self.w1 = _trapezoid_weights(spec.n1, self.h1, spec.periodic)
        self.w2 = _trapezoid_weights(spec.n2, self.h2, spec.periodic)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.spec.n1, self.spec.n2)

    @property
    def periodic(self) -> bool:
        return self.spec.periodic

    @cached_property
    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.x1, self.x2, indexing="ij")

    @property
    def X1(self) -> np.ndarray:
        return self.mesh[0]

    @property
    def X2(self) -> np.ndarray:
        return self.mesh[1]

    def spacing(self, axis: int) -> float:
        return self.h1 if check_axis(axis) == 1 else self.h2

    def coords(self, axis: int) -> np.ndarray:
        """Coordinate of every grid point along ``axis`` (full 2-D array)."""
        return self.X1 if check_axis(axis) == 1 else self.X2

    def __eq__(self, other):
        return isinstance(other, Grid) and other.spec == self.spec

    def __hash__(self):
        return hash(self.spec)

    def __repr__(self):
        return f"Grid({self.spec!r})"


def make_grid(spec: GridSpec | None = None, **kwargs) -> Grid:
    """Build a :class:`Grid` from a spec (or from ``GridSpec`` keyword arguments)."""
    if spec is None:
        spec = GridSpec(**kwargs)
    elif kwargs:
        raise UsageError("pass either a GridSpec or keyword arguments, not both")
    return Grid(spec)


def default_grid() -> Grid:
    """256 x 256 points on [-8, 8]^2."""
    return make_grid(GridSpec())


def check_axis(axis) -> int:
    if axis not in (1, 2) or isinstance(axis, bool):
        raise UsageError(f"axis must be 1 or 2, got {axis!r}")
    return int(axis)


def _trapezoid_weights(n: int, h: float, periodic: bool) -> np.ndarray:
    w = np.full(n, h)
    if not periodic:
        w[0] = w[-1] = h / 2
    return w


def integrate(f: np.ndarray, grid: Grid, mask: np.ndarray | None = None):
    """Trapezoidal integral of ``f`` over the whole grid.

    Points where ``mask`` is False contribute zero and may hold any value.
    Returns a float for real input and a complex for complex input.
    """
    f = np.asarray(f)
    if f.shape != grid.shape:
        raise UsageError(f"field shape {f.shape} does not match grid {grid.shape}")
    if mask is not None:
        f = np.where(mask, f, 0)
    if not np.all(np.isfinite(f)):
        bad = tuple(int(k) for k in np.argwhere(~np.isfinite(f))[0])
        raise NumericalDomainError(f"non-finite integrand at index {bad}")
    value = grid.w1 @ f @ grid.w2
    return complex(value) if np.iscomplexobj(value) else float(value)


# 4th-order one-sided stencils for the first two and last two rows.
_FD4_LEFT = np.array([[-25.0, 48.0, -36.0, 16.0, -3.0],
                      [-3.0, -10.0, 18.0, -6.0, 1.0]]) / 12.0


def _fd4(f: np.ndarray, h: float) -> np.ndarray:
    # derivative along axis 0
    out = np.empty_like(f)
    out[2:-2] = (f[:-4] - 8.0 * f[1:-3] + 8.0 * f[3:-1] - f[4:]) / (12.0 * h)
    head = f[:5]
    tail = f[-5:][::-1]
    for row in range(2):
        c = _FD4_LEFT[row].reshape((5,) + (1,) * (f.ndim - 1))
        out[row] = (c * head).sum(axis=0) / h
        out[-1 - row] = -(c * tail).sum(axis=0) / h
    return out


def _spectral(f: np.ndarray, h: float) -> np.ndarray:
    # derivative along axis 0, treating the samples as one period of length n*h
    n = f.shape[0]
    k = 2.0 * np.pi * np.fft.fftfreq(n, d=h)
    if n % 2 == 0:
        k[n // 2] = 0.0
    k = k.reshape((n,) + (1,) * (f.ndim - 1))
    df = np.fft.ifft(1j * k * np.fft.fft(f, axis=0), axis=0)
    return df if np.iscomplexobj(f) else df.real


def partial_derivative(f: np.ndarray, axis: int, grid: Grid, scheme: str = "fd4") -> np.ndarray:
    """Partial derivative of ``f`` with respect to ``x_axis``.

    ``fd4`` is 4th-order central differences with 4th-order one-sided stencils
    in the two outermost rows. ``spectral`` differentiates the DFT and is only
    accurate for fields that are periodic on the grid or decay to zero at both
    edges.
    """
    axis = check_axis(axis)
    f = np.asarray(f)
    if f.shape != grid.shape:
        raise UsageError(f"field shape {f.shape} does not match grid {grid.shape}")
    h = grid.spacing(axis)
    g = np.moveaxis(f, axis - 1, 0)
    if scheme == "fd4":
        d = _fd4(g, h)
    elif scheme == "spectral":
        d = _spectral(g, h)
    else:
        raise UsageError(f"unknown differentiation scheme {scheme!r}; expected one of {SCHEMES}")
    return np.moveaxis(d, 0, axis - 1)


def build_mask(rho: np.ndarray, eps_rel: float = DEFAULT_EPS_REL,
               min_fraction: float = MIN_UNMASKED_FRACTION) -> np.ndarray:
    """Boolean array that is True where ``rho >= eps_rel * max(rho)``.

    True marks unmasked points, i.e. points where quotients by ``rho`` are
    trusted.
    """
    rho = np.asarray(rho, dtype=float)
    if not 0.0 < eps_rel <= 1e-2:
        raise UsageError(f"eps_rel must lie in (0, 1e-2], got {eps_rel!r}")
    if not np.all(np.isfinite(rho)) or np.any(rho < 0):
        raise NumericalDomainError("density must be finite and non-negative")
    peak = rho.max()
    if peak <= 0:
        raise DegenerateStateError("density vanishes everywhere; every point is masked")
    mask = rho >= eps_rel * peak
    fraction = mask.mean()
    if fraction < min_fraction:
        raise DegenerateStateError(
            f"only {fraction:.1%} of grid points are unmasked (need >= {min_fraction:.0%}); "
            "the state is too narrow for this grid"
        )
    return mask


STENCIL_HALF_WIDTH = 2  # fd4 reaches two points either side


def erode_mask(mask: np.ndarray, width: int = STENCIL_HALF_WIDTH) -> np.ndarray:
    """Unmasked points whose axis-aligned stencil of half-width ``width`` is fully unmasked.

    Points beyond the grid edge count as unmasked, since one-sided edge
    stencils never leave the grid.
    """
    mask = np.asarray(mask, dtype=bool)
    out = mask.copy()
    for s in range(1, width + 1):
        out[s:, :] &= mask[:-s, :]
        out[:-s, :] &= mask[s:, :]
        out[:, s:] &= mask[:, :-s]
        out[:, :-s] &= mask[:, s:]
    return out


def derived_mask(rho: np.ndarray, eps_rel: float = DEFAULT_EPS_REL) -> np.ndarray:
    """Mask for fields built from derivatives of quotient fields such as ∂_i u_j.

    A finite-difference stencil that touches a masked point picks up the
    unbounded quotient there, so such points are dropped as well.
    """
    mask = erode_mask(build_mask(rho, eps_rel))
    if not mask.any():
        raise DegenerateStateError("no grid point has a fully unmasked differentiation stencil")
    return mask


def boundary_decay(rho: np.ndarray) -> float:
    """Largest edge density divided by the peak density."""
    rho = np.asarray(rho)
    edge = max(rho[0].max(), rho[-1].max(), rho[:, 0].max(), rho[:, -1].max())
    return float(edge / rho.max())


def decays_at_boundary(rho: np.ndarray, tol: float = BOUNDARY_DECAY_TOL) -> bool:
    return boundary_decay(rho) <= tol
