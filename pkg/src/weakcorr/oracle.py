"""Independent reference values.

``gaussian_truth`` gives closed forms for the Gaussian family

    ψ ∝ exp(-½ xᵀMx + iλ x1 x2),   ρ ∝ exp(-xᵀMx),   Σ = ⟨x xᵀ⟩ = (2M)⁻¹,

so that u_i = -(ħ/m_i)(Mx)_i and v_i = (ħ/m_i) λ x_j. ``brute_force_expectation``
recomputes ρ-weighted means on a resampled, optionally finer grid with
second-order stencils applied to log ψ. It shares no differentiation or
masking code with the main pipeline.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .exceptions import UnsupportedError, UsageError
from .grid import Grid, PhysicsParams, make_grid
from .states import GAUSSIAN_KINDS, StateSpec, WaveFunction


def gaussian_matrix(spec: StateSpec) -> tuple[float, float, float, float]:
    """(M11, M12, M22, λ) of a Gaussian-family spec."""
    if spec.kind not in GAUSSIAN_KINDS:
        raise UnsupportedError(f"no closed forms for state kind {spec.kind!r}")
    if spec.kind == "product_gaussian":
        return 1 / (2 * spec.sigma1 ** 2), 0.0, 1 / (2 * spec.sigma2 ** 2), 0.0
    if spec.kind == "phase_gaussian":
        m = 1 / (2 * spec.sigma ** 2)
        return m, 0.0, m, spec.lam
    lam = spec.lam if spec.kind == "general_gaussian" else 0.0
    return spec.a, spec.b, spec.a, lam


@dataclass(frozen=True)
class GaussianClosedForms:
    m11: float
    m12: float
    m22: float
    lam: float
    hbar: float
    m1: float
    m2: float
    mean_u1u2: float
    mean_u1v2: float
    mean_u2v1: float
    mean_u1_sq: float
    mean_u2_sq: float
    mean_v1_sq: float
    mean_v2_sq: float
    re_cw: float
    im_cw: float
    c_p1p2: float
    sigma2_p1: float
    sigma2_p2: float
    vq_origin: float
    mean_vq: float
    mean_du12: float      # ⟨∂1 u2⟩
    mean_dv12: float      # ⟨∂1 v2⟩
    iA_mean: float
    iA_sup: float
    iP_mean: float
    iP_sup: float

    def to_dict(self) -> dict:
        return asdict(self)


def gaussian_truth(spec: StateSpec, physics: PhysicsParams | None = None) -> GaussianClosedForms:
    physics = physics or PhysicsParams()
    hbar, m1, m2 = physics.hbar, physics.m1, physics.m2
    a11, a12, a22, lam = gaussian_matrix(spec)
    det = a11 * a22 - a12 ** 2
    # Σ = (2M)⁻¹
    s11, s12, s22 = a22 / (2 * det), -a12 / (2 * det), a11 / (2 * det)
    h2 = hbar ** 2
    u1u2 = h2 * a12 / (2 * m1 * m2)
    u1v2 = -h2 * lam / (2 * m1 * m2)
    u1sq = h2 * a11 / (2 * m1 ** 2)
    u2sq = h2 * a22 / (2 * m2 ** 2)
    v1sq = h2 * lam ** 2 * s22 / m1 ** 2
    v2sq = h2 * lam ** 2 * s11 / m2 ** 2
    sig1 = h2 * lam ** 2 * s22 + h2 * a11 / 2
    sig2 = h2 * lam ** 2 * s11 + h2 * a22 / 2
    natural = m1 * m2 * math.sqrt(u1sq * u2sq)

    def ip(aii, ajj, sii):
        return (abs(lam) / 2) / (math.sqrt(aii / 2) * math.sqrt(lam ** 2 * sii + ajj / 2))

    return GaussianClosedForms(
        m11=a11, m12=a12, m22=a22, lam=lam, hbar=hbar, m1=m1, m2=m2,
        mean_u1u2=u1u2, mean_u1v2=u1v2, mean_u2v1=u1v2,
        mean_u1_sq=u1sq, mean_u2_sq=u2sq, mean_v1_sq=v1sq, mean_v2_sq=v2sq,
        re_cw=h2 * a12, im_cw=-h2 * lam,
        c_p1p2=h2 * lam ** 2 * s12 + h2 * a12 / 2,
        sigma2_p1=sig1, sigma2_p2=sig2,
        vq_origin=h2 * a11 / (2 * m1) + h2 * a22 / (2 * m2),
        mean_vq=m1 * u1sq / 2 + m2 * u2sq / 2,
        mean_du12=-hbar * a12 / m2, mean_dv12=hbar * lam / m2,
        iA_mean=abs(a12) / math.sqrt(a11 * a22),
        iA_sup=h2 * abs(a12) / natural,
        iP_mean=max(ip(a11, a22, s11), ip(a22, a11, s22)),
        iP_sup=h2 * abs(lam) / natural,
    )


# ---------------------------------------------------------------- brute force

INTEGRANDS = (
    "u1", "u2", "v1", "v2",
    "u1u2", "u1v2", "u2v1", "v1v2",
    "u1^2", "u2^2", "v1^2", "v2^2",
    "du12", "dv12", "du21", "dv21",
    "x1u1", "x2u2", "vq",
    "sigma2_p1", "sigma2_p2",
)


def _log_derivative(psi: np.ndarray, h: float, axis: int) -> np.ndarray:
    """Second-order ∂ log ψ from ratios of neighbouring samples (no branch cuts)."""
    f = np.moveaxis(psi, axis, 0)
    out = np.zeros_like(f)
    with np.errstate(divide="ignore", invalid="ignore"):
        out[1:-1] = np.log(f[2:] / f[:-2]) / (2 * h)
        out[0] = (4 * np.log(f[1] / f[0]) - np.log(f[2] / f[0])) / (2 * h)
        out[-1] = -(4 * np.log(f[-2] / f[-1]) - np.log(f[-3] / f[-1])) / (2 * h)
    out[~np.isfinite(out)] = 0.0
    return np.moveaxis(out, 0, axis)


def _d2(f: np.ndarray, h: float, axis: int) -> np.ndarray:
    """Second-order first derivative of a real field."""
    return np.gradient(f, h, axis=axis, edge_order=2)


def _trapezoid(f: np.ndarray, grid: Grid) -> float:
    return float(np.trapezoid(np.trapezoid(f, dx=grid.h2, axis=1), dx=grid.h1))


def _resample(wf: WaveFunction, refine: int) -> tuple[np.ndarray, Grid]:
    if refine not in (1, 2, 3):
        raise UsageError(f"refine must be 1, 2 or 3, got {refine!r}")
    if wf.amplitude is None:
        raise UnsupportedError("brute-force expectations need an analytic state (file states cannot be refined)")
    if wf.representation != "position":
        raise UnsupportedError("brute-force expectations are defined for position-representation states")
    grid = make_grid(wf.grid.spec.refined(refine))
    psi = np.asarray(wf.amplitude(grid.X1, grid.X2), dtype=complex)
    psi = psi / math.sqrt(_trapezoid(np.abs(psi) ** 2, grid))
    return psi, grid


def _momentum_dispersion_fft(psi: np.ndarray, grid: Grid, hbar: float, axis: int) -> float:
    # |φ(p)|² on the FFT momentum lattice; the box is taken as one period
    prob = np.abs(np.fft.fft2(psi)) ** 2
    n, h = psi.shape[axis], grid.spacing(axis + 1)
    p = 2 * np.pi * hbar * np.fft.fftfreq(n, d=h)
    shape = [1, 1]
    shape[axis] = n
    p = p.reshape(shape)
    total = prob.sum()
    mean = (p * prob).sum() / total
    return float(((p - mean) ** 2 * prob).sum() / total)


def brute_force_expectation(wf: WaveFunction, integrand_id: str, refine: int = 1) -> float:
    """ρ-weighted mean of a named integrand on a ``refine``-times finer grid.

    Velocities come from second-order log-ratio stencils (exact for
    Gaussians up to rounding), derivatives of velocities from second-order
    central differences. ``sigma2_p1``/``sigma2_p2`` use an FFT of ψ instead.
    """
    if integrand_id not in INTEGRANDS:
        raise UsageError(f"unknown integrand {integrand_id!r}; expected one of {INTEGRANDS}")
    psi, grid = _resample(wf, refine)
    ph = wf.physics
    hbar, m = ph.hbar, {1: ph.m1, 2: ph.m2}
    if integrand_id.startswith("sigma2_p"):
        return _momentum_dispersion_fft(psi, grid, hbar, int(integrand_id[-1]) - 1)
    rho = np.abs(psi) ** 2
    h = {1: grid.h1, 2: grid.h2}
    g = {i: _log_derivative(psi, h[i], i - 1) for i in (1, 2)}
    u = {i: hbar / m[i] * g[i].real for i in (1, 2)}
    v = {i: hbar / m[i] * g[i].imag for i in (1, 2)}
    x = {1: grid.X1, 2: grid.X2}
    fields = {
        "u1": lambda: u[1], "u2": lambda: u[2], "v1": lambda: v[1], "v2": lambda: v[2],
        "u1u2": lambda: u[1] * u[2], "u1v2": lambda: u[1] * v[2], "u2v1": lambda: u[2] * v[1],
        "v1v2": lambda: v[1] * v[2],
        "u1^2": lambda: u[1] ** 2, "u2^2": lambda: u[2] ** 2,
        "v1^2": lambda: v[1] ** 2, "v2^2": lambda: v[2] ** 2,
        "du12": lambda: _d2(u[2], h[1], 0), "dv12": lambda: _d2(v[2], h[1], 0),
        "du21": lambda: _d2(u[1], h[2], 1), "dv21": lambda: _d2(v[1], h[2], 1),
        "x1u1": lambda: x[1] * u[1], "x2u2": lambda: x[2] * u[2],
        "vq": lambda: sum(-0.5 * (m[i] * u[i] ** 2 + hbar * _d2(u[i], h[i], i - 1)) for i in (1, 2)),
    }
    return _trapezoid(rho * fields[integrand_id](), grid)


def momentum_dispersion_fft(wf: WaveFunction, i: int, refine: int = 1) -> float:
    """σ²_{p_i} from the FFT of ψ (shorthand for ``brute_force_expectation(wf, "sigma2_p<i>")``)."""
    return brute_force_expectation(wf, f"sigma2_p{int(i)}", refine)
