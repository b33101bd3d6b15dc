"""Flow and osmotic velocities, quantum potential and momentum statistics.

For a position-representation state ψ = √ρ e^{iS} the log-derivative
∂_iψ/ψ = ∂_iρ/2ρ + i∂_iS carries everything: the osmotic velocity
u_i = (ħ/m_i) Re(∂_iψ/ψ) and the flow velocity v_i = (ħ/m_i) Im(∂_iψ/ψ).
The phase is never unwrapped.

ρ-weighted means are integrated over the full grid from bounded products
(ρ·u_i = (ħ/m_i) Re(ψ*∂_iψ) and the like); exported fields are zeroed on
masked points.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .exceptions import InvariantViolation, NumericalConsistencyError, UnsupportedError
from .grid import (
    DEFAULT_EPS_REL,
    boundary_decay,
    build_mask,
    check_axis,
    derived_mask,
    integrate,
    partial_derivative,
)
from .states import WaveFunction

# Quotients by ψ are evaluated only where ρ exceeds this fraction of its peak;
# elsewhere they are set to 0 (their ρ-weight underflows anyway).
_QUOTIENT_FLOOR = 1e-200

# Guard tolerance for pointwise two-route fields. The identity suite reports
# the actual residual against the tighter contract tolerance.
POINTWISE_GUARD = 1e-2


def _require_position(wf: WaveFunction):
    if wf.representation != "position":
        raise UnsupportedError("velocity fields are defined for position-representation states")


def safe_divide(num: np.ndarray, psi: np.ndarray) -> np.ndarray:
    rho = np.abs(psi) ** 2
    ok = rho > _QUOTIENT_FLOOR * rho.max()
    out = np.zeros(np.broadcast_shapes(num.shape, psi.shape), dtype=np.result_type(num, psi))
    np.divide(num, psi, out=out, where=ok)
    return out


# The spectral scheme treats the box as one period; it is only accurate when
# the amplitude has died out at the edge.
SPECTRAL_DECAY_TOL = 1e-12


def derivative(wf: WaveFunction, axis: int, scheme: str = "fd4") -> np.ndarray:
    """∂ψ/∂x_axis with the chosen scheme."""
    if scheme == "spectral" and not wf.grid.periodic:
        edge = np.sqrt(boundary_decay(wf.rho))
        if edge > SPECTRAL_DECAY_TOL:
            warnings.warn(f"spectral derivative on a state whose edge amplitude is {edge:.1e} of its peak "
                          f"(> {SPECTRAL_DECAY_TOL:g}); expect wrap-around error", RuntimeWarning,
                          stacklevel=2)
    return partial_derivative(wf.psi, axis, wf.grid, scheme)


def log_derivative(wf: WaveFunction, axis: int, scheme: str = "fd4") -> np.ndarray:
    """Unmasked ∂_iψ/ψ (zero only where ψ underflows)."""
    return safe_divide(derivative(wf, axis, scheme), wf.psi)


def rho_mean(wf: WaveFunction, field: np.ndarray):
    """⟨field⟩ = ∫ field ρ dx1 dx2."""
    return integrate(wf.rho * field, wf.grid)


def field_derivative(f: np.ndarray, axis: int, wf: WaveFunction) -> np.ndarray:
    # Quotient fields (u, v, weak values) neither decay nor repeat at the
    # edges, so they are always differentiated with fd4.
    return partial_derivative(f, axis, wf.grid, "fd4")


@dataclass(frozen=True, eq=False)
class VelocityFields:
    """u_i, v_i (zero on masked points), the currents j_i = ρv_i, and the mask."""

    u1: np.ndarray
    u2: np.ndarray
    v1: np.ndarray
    v2: np.ndarray
    j1: np.ndarray
    j2: np.ndarray
    mask: np.ndarray

    def u(self, i: int) -> np.ndarray:
        return self.u1 if check_axis(i) == 1 else self.u2

    def v(self, i: int) -> np.ndarray:
        return self.v1 if check_axis(i) == 1 else self.v2

    @property
    def masked_fraction(self) -> float:
        return float(1.0 - self.mask.mean())


class Velocities:
    """Raw (unmasked) velocity fields of one state, shared by the routines below."""

    def __init__(self, wf: WaveFunction, scheme: str = "fd4"):
        _require_position(wf)
        self.wf = wf
        self.scheme = scheme
        self.hbar = wf.physics.hbar
        self.m = {1: wf.physics.m1, 2: wf.physics.m2}
        self.dpsi = {i: derivative(wf, i, scheme) for i in (1, 2)}
        g = {i: safe_divide(self.dpsi[i], wf.psi) for i in (1, 2)}
        self.u = {i: self.hbar / self.m[i] * g[i].real for i in (1, 2)}
        self.v = {i: self.hbar / self.m[i] * g[i].imag for i in (1, 2)}
        # bounded products ρu_i, ρv_i formed without dividing by ψ
        cross = {i: np.conj(wf.psi) * self.dpsi[i] for i in (1, 2)}
        self.rho_u = {i: self.hbar / self.m[i] * cross[i].real for i in (1, 2)}
        self.rho_v = {i: self.hbar / self.m[i] * cross[i].imag for i in (1, 2)}

    def mean(self, field: np.ndarray) -> float:
        return rho_mean(self.wf, field)

    def mean_u(self, i: int) -> float:
        return integrate(self.rho_u[i], self.wf.grid)

    def mean_v(self, i: int) -> float:
        return integrate(self.rho_v[i], self.wf.grid)

    def du(self, i: int, j: int) -> np.ndarray:
        """∂_i u_j."""
        return field_derivative(self.u[j], i, self.wf)

    def dv(self, i: int, j: int) -> np.ndarray:
        """∂_i v_j."""
        return field_derivative(self.v[j], i, self.wf)


def velocity_fields(wf: WaveFunction, *, scheme: str = "fd4",
                    eps_rel: float = DEFAULT_EPS_REL) -> VelocityFields:
    """Osmotic and flow velocities u_i = (ħ/m_i)Re(∂_iψ/ψ), v_i = (ħ/m_i)Im(∂_iψ/ψ)."""
    vel = Velocities(wf, scheme)
    mask = build_mask(wf.rho, eps_rel)

    def m(f):
        return np.where(mask, f, 0.0)

    return VelocityFields(m(vel.u[1]), m(vel.u[2]), m(vel.v[1]), m(vel.v[2]),
                          vel.rho_v[1], vel.rho_v[2], mask)


@dataclass(frozen=True)
class MomentumExpectation:
    operator: complex
    kinematic: float

    @property
    def residual(self) -> float:
        return abs(self.operator - self.kinematic)


def _momentum_scale(vel: Velocities, i: int) -> float:
    return vel.m[i] * np.sqrt(vel.mean(vel.u[i] ** 2 + vel.v[i] ** 2))


def momentum_expectation(wf: WaveFunction, i: int, *, scheme: str = "fd4",
                         rtol: float = 1e-8) -> MomentumExpectation:
    """⟨p̂_i⟩ two ways: ∫ψ*(-iħ∂_i)ψ and m_i⟨v_i⟩.

    The imaginary part of the operator route is -m_i⟨u_i⟩, so agreement also
    checks that the osmotic velocity averages to zero.
    """
    i = check_axis(i)
    vel = Velocities(wf, scheme)
    op = integrate(np.conj(wf.psi) * (-1j * vel.hbar) * vel.dpsi[i], wf.grid)
    kin = vel.m[i] * vel.mean_v(i)
    result = MomentumExpectation(op, kin)
    scale = _momentum_scale(vel, i)
    if result.residual > rtol * scale:
        raise NumericalConsistencyError(
            f"<p{i}> routes disagree: operator {op:.12g}, kinematic {kin:.12g}")
    return result


@dataclass(frozen=True)
class MomentumCorrelation:
    direct: float
    decomposed: float
    flow_term: float   # m1 m2 C_{v1,v2}
    osmotic_term: float  # m1 m2 <u1 u2>
    direct_imag: float  # Im of the operator-route <p1 p2>; equals <π^uv_12>, should vanish
    scale: float

    @property
    def residual(self) -> float:
        return abs(self.direct - self.decomposed) / self.scale


def momentum_correlation(wf: WaveFunction, *, scheme: str = "fd4",
                         rtol: float = 1e-6) -> MomentumCorrelation:
    """C_{p1,p2} from the mixed second derivative of ψ and from the velocity split."""
    vel = Velocities(wf, scheme)
    hbar, m1, m2 = vel.hbar, vel.m[1], vel.m[2]
    d12 = partial_derivative(vel.dpsi[2], 1, wf.grid, scheme)
    p12 = integrate(np.conj(wf.psi) * (-hbar ** 2) * d12, wf.grid)
    p1 = integrate(np.conj(wf.psi) * (-1j * hbar) * vel.dpsi[1], wf.grid)
    p2 = integrate(np.conj(wf.psi) * (-1j * hbar) * vel.dpsi[2], wf.grid)
    direct = (p12 - p1 * p2).real
    flow = m1 * m2 * (vel.mean(vel.v[1] * vel.v[2]) - vel.mean_v(1) * vel.mean_v(2))
    osmotic = m1 * m2 * vel.mean(vel.u[1] * vel.u[2])
    scale = _momentum_scale(vel, 1) * _momentum_scale(vel, 2)
    result = MomentumCorrelation(direct, flow + osmotic, flow, osmotic, p12.imag, scale)
    if result.residual > rtol:
        raise NumericalConsistencyError(
            f"C_p1p2 routes disagree: direct {direct:.12g}, decomposed {flow + osmotic:.12g}")
    return result


@dataclass(frozen=True)
class MomentumDispersion:
    sigma2_p: float
    m2_sigma2_v: float
    m2_mean_u2: float
    two_m_mean_vq: float

    @property
    def residual(self) -> float:
        return abs(self.sigma2_p - self.m2_sigma2_v - self.m2_mean_u2) / self.sigma2_p

    @property
    def vq_residual(self) -> float:
        return abs(self.sigma2_p - self.m2_sigma2_v - self.two_m_mean_vq) / self.sigma2_p


def momentum_dispersion(wf: WaveFunction, i: int, *, scheme: str = "fd4",
                        rtol: float = 1e-6) -> MomentumDispersion:
    """σ²_{p_i} from ∫ψ*(-ħ²∂_i²)ψ - ⟨p_i⟩², split into flow and osmotic parts.

    Also returns 2m_i⟨V_Qi⟩ from -(ħ²/2m_i)∂_i²√ρ/√ρ, which must equal the
    osmotic part.
    """
    i = check_axis(i)
    vel = Velocities(wf, scheme)
    hbar, m = vel.hbar, vel.m[i]
    d2 = partial_derivative(vel.dpsi[i], i, wf.grid, scheme)
    p2 = integrate(np.conj(wf.psi) * (-hbar ** 2) * d2, wf.grid).real
    p = integrate(np.conj(wf.psi) * (-1j * hbar) * vel.dpsi[i], wf.grid).real
    mean_v = vel.mean_v(i)
    m2_var_v = m ** 2 * (vel.mean(vel.v[i] ** 2) - mean_v ** 2)
    m2_u2 = m ** 2 * vel.mean(vel.u[i] ** 2)
    if not m2_u2 > 0:
        raise InvariantViolation(f"<u{i}^2> = {m2_u2 / m ** 2!r} must be strictly positive")
    # ⟨V_Qi⟩ from the amplitude form, integrated as the bounded product √ρ ∂²√ρ
    amp = np.abs(wf.psi)
    d2amp = partial_derivative(partial_derivative(amp, i, wf.grid, scheme), i, wf.grid, scheme)
    mean_vq = -(hbar ** 2 / (2 * m)) * integrate(amp * d2amp, wf.grid)
    result = MomentumDispersion(p2 - p ** 2, m2_var_v, m2_u2, 2 * m * mean_vq)
    if result.residual > rtol:
        raise NumericalConsistencyError(
            f"sigma^2_p{i} = {result.sigma2_p:.12g} but m^2 var(v) + m^2 <u^2> = "
            f"{m2_var_v + m2_u2:.12g}")
    return result


@dataclass(frozen=True, eq=False)
class QuantumPotentialFields:
    """V_Qi = -(m_i u_i² + ħ∂_i u_i)/2 and their sum, zeroed on masked points.

    ``defining_*`` hold the second form -(ħ²/2m_i)∂_i²√ρ/√ρ on the same mask.
    """

    vq1: np.ndarray
    vq2: np.ndarray
    vq_total: np.ndarray
    defining1: np.ndarray
    defining2: np.ndarray
    mask: np.ndarray

    def residual(self, i: int | None = None) -> float:
        """Largest pointwise route difference over the field's sup norm."""
        pairs = [(self.vq1, self.defining1), (self.vq2, self.defining2)]
        if i is not None:
            pairs = [pairs[check_axis(i) - 1]]
        worst = 0.0
        for a, b in pairs:
            scale = max(np.abs(a).max(), np.abs(b).max())
            worst = max(worst, float(np.abs(a - b).max() / scale))
        return worst


def quantum_potential(wf: WaveFunction, *, scheme: str = "fd4", eps_rel: float = DEFAULT_EPS_REL,
                      rtol: float = POINTWISE_GUARD) -> QuantumPotentialFields:
    vel = Velocities(wf, scheme)
    mask = derived_mask(wf.rho, eps_rel)
    amp = np.abs(wf.psi)
    vq, defining = {}, {}
    for i in (1, 2):
        m = vel.m[i]
        vq[i] = np.where(mask, -0.5 * (m * vel.u[i] ** 2 + vel.hbar * vel.du(i, i)), 0.0)
        d2 = partial_derivative(partial_derivative(amp, i, wf.grid, scheme), i, wf.grid, scheme)
        defining[i] = np.where(mask, -(vel.hbar ** 2 / (2 * m)) * safe_divide(d2, amp), 0.0)
    result = QuantumPotentialFields(vq[1], vq[2], vq[1] + vq[2], defining[1], defining[2], mask)
    if result.residual() > rtol:
        raise NumericalConsistencyError(
            f"quantum potential routes disagree (relative residual {result.residual():.3e})")
    return result


@dataclass(frozen=True, eq=False)
class PiTerms:
    """π^uu_12 and π^uv_12 fields (zero on masked points)."""

    pi_uu: np.ndarray
    pi_uv: np.ndarray
    mask: np.ndarray


def pi_terms(wf: WaveFunction, *, scheme: str = "fd4", eps_rel: float = DEFAULT_EPS_REL) -> PiTerms:
    vel = Velocities(wf, scheme)
    mask = derived_mask(wf.rho, eps_rel)
    pi_uu, pi_uv = _pi_raw(vel, 1, 2)
    return PiTerms(np.where(mask, pi_uu, 0.0), np.where(mask, pi_uv, 0.0), mask)


def _pi_raw(vel: Velocities, i: int, j: int):
    hbar, mi, mj = vel.hbar, vel.m[i], vel.m[j]
    u, v = vel.u, vel.v
    pi_uu = -mi * mj * u[i] * u[j] - hbar * mj * vel.du(i, j)
    pi_uv = -mi * mj * (v[j] * u[i] + v[i] * u[j]) - hbar * mj * vel.dv(i, j)
    return pi_uu, pi_uv


@dataclass(frozen=True)
class CommutatorCheck:
    lhs: complex  # <x p - p x> from the operator route
    rhs: complex  # -2 i m <x u>

    @property
    def residual(self) -> float:
        return abs(self.lhs - self.rhs)


def commutator_check(wf: WaveFunction, i: int, *, scheme: str = "fd4",
                     atol: float = 1e-6) -> CommutatorCheck:
    """⟨x_i p_i - p_i x_i⟩ (operator route, ideally iħ) against -2i m_i ⟨x_i u_i⟩."""
    i = check_axis(i)
    vel = Velocities(wf, scheme)
    hbar, m = vel.hbar, vel.m[i]
    x = wf.grid.coords(i)
    psi_c = np.conj(wf.psi)
    xp = integrate(psi_c * x * (-1j * hbar) * vel.dpsi[i], wf.grid)
    px = integrate(psi_c * (-1j * hbar) * partial_derivative(x * wf.psi, i, wf.grid, scheme), wf.grid)
    rhs = -2j * m * integrate(x * vel.rho_u[i], wf.grid)
    result = CommutatorCheck(xp - px, rhs)
    if result.residual > atol * hbar:
        raise NumericalConsistencyError(
            f"commutator routes disagree: {result.lhs:.12g} vs {result.rhs:.12g}")
    return result


@dataclass(frozen=True)
class IntegrationByParts:
    """Both sides of ⟨∂_i g⟩ = -(2m_i/ħ)⟨g u_i⟩ for g = u_j and g = v_j.

    Keys are ``"uu_ij"`` and ``"uv_ij"``; values are (⟨∂_i g_j⟩, -(2m_i/ħ)⟨u_i g_j⟩).
    """

    sides: dict
    scales: dict

    def residual(self, key: str) -> float:
        lhs, rhs = self.sides[key]
        return abs(lhs - rhs) / self.scales[key]

    @property
    def max_residual(self) -> float:
        return max(self.residual(k) for k in self.sides)


def integration_by_parts_check(wf: WaveFunction, *, scheme: str = "fd4") -> IntegrationByParts:
    vel = Velocities(wf, scheme)
    sides, scales = {}, {}
    u2 = {k: vel.mean(vel.u[k] ** 2) for k in (1, 2)}
    v2 = {k: vel.mean(vel.v[k] ** 2) for k in (1, 2)}
    for i, j in ((1, 2), (2, 1)):
        c = 2 * vel.m[i] / vel.hbar
        sides[f"uu_{i}{j}"] = (vel.mean(vel.du(i, j)), -c * vel.mean(vel.u[i] * vel.u[j]))
        scales[f"uu_{i}{j}"] = c * np.sqrt(u2[i] * u2[j])
        sides[f"uv_{i}{j}"] = (vel.mean(vel.dv(i, j)), -c * vel.mean(vel.u[i] * vel.v[j]))
        scales[f"uv_{i}{j}"] = c * np.sqrt(u2[i] * (u2[j] + v2[j]))
    return IntegrationByParts(sides, scales)
