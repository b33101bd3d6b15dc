"""Weak values with position (or momentum) postselection.

For a postselection basis |α β⟩ and local operators Â, B̂ acting as
Â_α = ∓iħ ∂_α, the weak value is the field ⟨Â⟩_w = Â_α ψ / ψ. In the
position representation this is the momentum weak value
⟨p̂_i⟩_w = m_i (v_i - i u_i); in the momentum representation the local
operator is x̂ = +iħ ∂_p. ``representation_sign`` returns +1 or -1 for
the two cases and every formula below is written in terms of it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import (
    ConfigurationError,
    NumericalConsistencyError,
    UnsupportedError,
    UsageError,
)
from .grid import (
    DEFAULT_EPS_REL,
    GridSpec,
    build_mask,
    check_axis,
    decays_at_boundary,
    derived_mask,
    integrate,
    make_grid,
    partial_derivative,
)
from .kinematics import (
    POINTWISE_GUARD,
    Velocities,
    derivative,
    field_derivative,
    quantum_potential,
    rho_mean,
    safe_divide,
)
from .states import WaveFunction


def representation_sign(wf: WaveFunction) -> int:
    """+1 when the local operator is -iħ∂ (position basis), -1 when it is +iħ∂ (momentum basis)."""
    return 1 if wf.representation == "position" else -1


class _WeakData:
    """Raw (unmasked) weak-value fields of one state."""

    def __init__(self, wf: WaveFunction, scheme: str = "fd4"):
        self.wf = wf
        self.scheme = scheme
        self.hbar = wf.physics.hbar
        self.s = representation_sign(wf)
        self.op = -self.s * 1j * self.hbar  # local operator = op * ∂
        self.dpsi = {i: derivative(wf, i, scheme) for i in (1, 2)}
        self.w = {i: self.op * safe_divide(self.dpsi[i], wf.psi) for i in (1, 2)}
        self.d12psi = partial_derivative(self.dpsi[2], 1, wf.grid, scheme)

    def product_field(self) -> np.ndarray:
        """⟨Â1 Â2⟩_w = Â1 Â2 ψ / ψ."""
        return self.op ** 2 * safe_divide(self.d12psi, self.wf.psi)

    def definition(self) -> np.ndarray:
        return self.product_field() - self.w[1] * self.w[2]

    def closed_form(self, i: int = 1, j: int = 2) -> np.ndarray:
        """±ħ ∂_i Im⟨B̂⟩_w ∓ iħ ∂_i Re⟨B̂⟩_w with B̂ the local operator of particle j."""
        dw = field_derivative(self.w[j], i, self.wf)
        return self.s * self.hbar * (dw.imag - 1j * dw.real)

    def natural_scale(self) -> float:
        """rms(Im w1) * rms(Im w2): m1 m2 ũ1 ũ2 in the position basis."""
        return math.sqrt(rho_mean(self.wf, self.w[1].imag ** 2) * rho_mean(self.wf, self.w[2].imag ** 2))


@dataclass(frozen=True, eq=False)
class WeakMomentumFields:
    """⟨p̂_i⟩_w = -iħ∂_iψ/ψ on unmasked points (zero elsewhere)."""

    wp1: np.ndarray
    wp2: np.ndarray
    mask: np.ndarray

    def wp(self, i: int) -> np.ndarray:
        return self.wp1 if check_axis(i) == 1 else self.wp2


def weak_momentum(wf: WaveFunction, *, scheme: str = "fd4",
                  eps_rel: float = DEFAULT_EPS_REL) -> WeakMomentumFields:
    """Momentum weak values, cross-checked against m_i(v_i - i u_i)."""
    if wf.representation != "position":
        raise UnsupportedError("momentum weak values need a position-representation state")
    data = _WeakData(wf, scheme)
    vel = Velocities(wf, scheme)
    mask = build_mask(wf.rho, eps_rel)
    out = {}
    for i in (1, 2):
        wp = data.w[i]
        kin = vel.m[i] * (vel.v[i] - 1j * vel.u[i])
        scale = np.abs(wp[mask]).max()
        if np.abs(wp - kin)[mask].max() > 1e-10 * scale:
            raise NumericalConsistencyError(f"weak momentum {i} disagrees with m(v - iu)")
        out[i] = np.where(mask, wp, 0.0)
    return WeakMomentumFields(out[1], out[2], mask)


def weak_mean(wf: WaveFunction, i: int, *, scheme: str = "fd4") -> complex:
    """ρ-weighted mean of ⟨Â_i⟩_w, formed as ∫ψ* Â_i ψ (no division by ψ)."""
    i = check_axis(i)
    op = -representation_sign(wf) * 1j * wf.physics.hbar
    return integrate(np.conj(wf.psi) * op * derivative(wf, i, scheme), wf.grid)


@dataclass(frozen=True, eq=False)
class WeakProductField:
    field: np.ndarray
    mask: np.ndarray
    mean: complex            # ∫ψ* Â1Â2ψ, the ρ-weighted mean of the field formed without division
    expectation: complex     # ⟨Â1 Â2⟩_q as ∫(Â1ψ)*(Â2ψ), no second derivatives
    scale: float

    @property
    def residual(self) -> float:
        return abs(self.mean - self.expectation) / self.scale


def weak_momentum_product(wf: WaveFunction, *, scheme: str = "fd4", eps_rel: float = DEFAULT_EPS_REL,
                          rtol: float = 1e-6) -> WeakProductField:
    """⟨Â1 Â2⟩_w = Â1Â2ψ/ψ; in the position basis (-ħ²∂1∂2ψ)/ψ."""
    data = _WeakData(wf, scheme)
    mask = build_mask(wf.rho, eps_rel)
    field = np.where(mask, data.product_field(), 0.0)
    mean = integrate(np.conj(wf.psi) * data.op ** 2 * data.d12psi, wf.grid)
    expectation = abs(data.op) ** 2 * integrate(np.conj(data.dpsi[1]) * data.dpsi[2], wf.grid)
    scale = max(abs(expectation), data.natural_scale())
    result = WeakProductField(field, mask, mean, expectation, scale)
    if result.residual > rtol:
        raise NumericalConsistencyError(
            f"mean weak product {mean:.12g} differs from <A1 A2>_q {expectation:.12g}")
    return result


@dataclass(frozen=True, eq=False)
class WeakCorrelationField:
    """The weak correlation C^w = ⟨Â1Â2⟩_w - ⟨Â1⟩_w⟨Â2⟩_w on unmasked points.

    ``cw`` is the closed form built from derivatives of the weak value of
    particle 2 along axis 1; ``definition`` is the defining difference and
    ``partner`` the closed form with the particles exchanged.
    """

    cw: np.ndarray
    definition: np.ndarray
    partner: np.ndarray
    mask: np.ndarray
    mean: complex
    natural_scale: float

    @property
    def sup_re(self) -> float:
        return float(np.abs(self.cw.real[self.mask]).max())

    @property
    def sup_im(self) -> float:
        return float(np.abs(self.cw.imag[self.mask]).max())

    @property
    def scale(self) -> float:
        return max(float(np.abs(self.cw[self.mask]).max()), self.natural_scale)

    @property
    def route_residual(self) -> float:
        """max |definition - closed form| / scale over unmasked points."""
        return float(np.abs(self.definition - self.cw)[self.mask].max() / self.scale)

    @property
    def exchange_residual(self) -> float:
        return float(np.abs(self.partner - self.cw)[self.mask].max() / self.scale)

    def route_rms(self, rho: np.ndarray) -> float:
        """ρ-weighted rms of the route difference over unmasked points, relative to ``scale``."""
        d2 = np.abs(self.definition - self.cw)[self.mask] ** 2
        w = rho[self.mask]
        return float(np.sqrt((w * d2).sum() / w.sum()) / self.scale)

    def exchange_residual_part(self, part: str) -> float:
        """Exchange residual of the real ('uu') or imaginary ('uv') part alone."""
        diff = self.partner - self.cw
        d = diff.real if part == "uu" else diff.imag
        return float(np.abs(d[self.mask]).max() / self.scale)


def weak_correlation(wf: WaveFunction, *, scheme: str = "fd4", eps_rel: float = DEFAULT_EPS_REL,
                     rtol: float = POINTWISE_GUARD) -> WeakCorrelationField:
    """Weak correlation of the two local operators, by definition and in closed form.

    In the position basis the closed form is -ħ m2 (∂1 u2 + i ∂1 v2).
    """
    data = _WeakData(wf, scheme)
    mask = derived_mask(wf.rho, eps_rel)
    closed = data.closed_form(1, 2)
    definition = data.definition()
    partner = data.closed_form(2, 1)

    def m(f):
        return np.where(mask, f, 0.0)

    result = WeakCorrelationField(m(closed), m(definition), m(partner), mask,
                                  rho_mean(wf, closed), data.natural_scale())
    worst = max(result.route_residual, result.exchange_residual)
    if worst > rtol:
        raise NumericalConsistencyError(
            f"weak correlation routes disagree (relative residual {worst:.3e})")
    return result


@dataclass(frozen=True)
class CorrelationDecomposition:
    """C_{A,B} = C_{Re,Re} - C_{Im,Im} + Re⟨C^w⟩ for the two local operators."""

    term_ReRe: float
    term_ImIm: float
    term_ReCw: float
    C_direct: float
    scale: float

    @property
    def closure(self) -> float:
        return self.term_ReRe - self.term_ImIm + self.term_ReCw

    @property
    def residual(self) -> float:
        return abs(self.closure - self.C_direct) / self.scale


def correlation_decomposition(wf: WaveFunction, *, scheme: str = "fd4",
                              rtol: float = 1e-6) -> CorrelationDecomposition:
    data = _WeakData(wf, scheme)
    w1, w2 = data.w[1], data.w[2]

    def mean(f):
        return rho_mean(wf, f)

    def cov(a, b):
        return mean(a * b) - mean(a) * mean(b)

    re_re = cov(w1.real, w2.real)
    im_im = cov(w1.imag, w2.imag)
    re_cw = mean(data.closed_form(1, 2).real)
    psi_c = np.conj(wf.psi)
    ab = integrate(psi_c * data.op ** 2 * data.d12psi, wf.grid)
    a = integrate(psi_c * data.op * data.dpsi[1], wf.grid)
    b = integrate(psi_c * data.op * data.dpsi[2], wf.grid)
    direct = (ab - a * b).real
    scale = math.sqrt(mean(np.abs(w1) ** 2) * mean(np.abs(w2) ** 2))
    result = CorrelationDecomposition(re_re, im_im, re_cw, direct, scale)
    if result.residual > rtol:
        raise NumericalConsistencyError(
            f"correlation decomposition does not close: {result.closure:.12g} vs {direct:.12g}")
    return result


@dataclass(frozen=True, eq=False)
class KineticEnergyField:
    field: np.ndarray       # Re of the kinetic-energy weak value
    kinematic: np.ndarray   # ½m1v1² + ½m2v2² + V_Q
    mask: np.ndarray

    @property
    def residual(self) -> float:
        scale = max(np.abs(self.field).max(), np.abs(self.kinematic).max())
        return float(np.abs(self.field - self.kinematic).max() / scale)


def weak_kinetic_energy(wf: WaveFunction, *, scheme: str = "fd4", eps_rel: float = DEFAULT_EPS_REL,
                        rtol: float = POINTWISE_GUARD) -> KineticEnergyField:
    """Re⟨p1²/2m1 + p2²/2m2⟩_w, checked against ½m1v1² + ½m2v2² + V_Q."""
    if wf.representation != "position":
        raise UnsupportedError("kinetic-energy weak value needs a position-representation state")
    vel = Velocities(wf, scheme)
    mask = derived_mask(wf.rho, eps_rel)
    hbar = vel.hbar
    lap = sum(-(hbar ** 2) / (2 * vel.m[i])
              * partial_derivative(vel.dpsi[i], i, wf.grid, scheme) for i in (1, 2))
    field = np.where(mask, safe_divide(lap, wf.psi).real, 0.0)
    vq = quantum_potential(wf, scheme=scheme, eps_rel=eps_rel, rtol=np.inf).vq_total
    kin = np.where(mask, 0.5 * vel.m[1] * vel.v[1] ** 2 + 0.5 * vel.m[2] * vel.v[2] ** 2 + vq, 0.0)
    result = KineticEnergyField(field, kin, mask)
    if result.residual > rtol:
        raise NumericalConsistencyError(
            f"kinetic-energy weak value disagrees with v and V_Q ({result.residual:.3e})")
    return result


@dataclass(frozen=True, eq=False)
class ProbeResult:
    """Outcome of a weak unitary kick e^{-iαp̂_i} followed by position postselection."""

    alpha: float
    ratio_field: np.ndarray      # P_α/P_0 on the probe window (1 elsewhere)
    residual_field: np.ndarray   # |ratio - (1 + 2α Im⟨p̂_i⟩_w)| on the window (0 elsewhere)
    window: np.ndarray

    @property
    def first_order_residual(self) -> float:
        return float(self.residual_field[self.window].max())


# 5-point Lagrange basis on nodes -2..2
def _lagrange5(t: float) -> np.ndarray:
    nodes = np.arange(-2, 3, dtype=float)
    w = np.ones(5)
    for k in range(5):
        for m in range(5):
            if m != k:
                w[k] *= (t - nodes[m]) / (nodes[k] - nodes[m])
    return w


def _shifted_density(wf: WaveFunction, i: int, shift: float) -> np.ndarray:
    """ρ(x - shift e_i), exactly for analytic states, by 4th-order interpolation otherwise."""
    grid = wf.grid
    if wf.amplitude is not None:
        x1, x2 = grid.X1, grid.X2
        if i == 1:
            x1 = x1 - shift
        else:
            x2 = x2 - shift
        return np.abs(wf.amplitude(x1, x2)) ** 2
    rho = np.moveaxis(wf.rho, i - 1, 0)
    weights = _lagrange5(-shift / grid.spacing(i))
    out = np.full_like(rho, np.nan)
    out[2:-2] = sum(weights[k] * rho[k:rho.shape[0] - 4 + k] for k in range(5))
    return np.moveaxis(out, 0, i - 1)


def weak_probe(wf: WaveFunction, i: int, alpha: float, *, scheme: str = "fd4",
               eps_rel: float = DEFAULT_EPS_REL, window_sigmas: float = 2.0) -> ProbeResult:
    """Compare the exact postselection ratio P_α/P_0 with its first-order weak-value form.

    With Â = p̂_i the kick is a translation by αħ, so P_α(x)/P_0(x) =
    ρ(x - αħe_i)/ρ(x) ≈ 1 + 2α Im⟨p̂_i⟩_w. The residual is evaluated on the
    central window |x_k - ⟨x_k⟩| <= window_sigmas σ_k (both axes).
    """
    i = check_axis(i)
    if wf.representation != "position":
        raise UnsupportedError("the weak probe is implemented for position postselection")
    shift = alpha * wf.physics.hbar
    if abs(shift) >= wf.grid.spacing(i):
        raise ConfigurationError(
            f"probe shift |alpha*hbar| = {abs(shift):.3g} must stay below the grid spacing "
            f"{wf.grid.spacing(i):.3g}")
    mask = build_mask(wf.rho, eps_rel)
    window = mask.copy()
    for k in (1, 2):
        x = wf.grid.coords(k)
        mu = rho_mean(wf, x)
        sd = math.sqrt(rho_mean(wf, (x - mu) ** 2))
        window &= np.abs(x - mu) <= window_sigmas * sd
    if not window.any():
        raise ConfigurationError("probe window is empty")
    vel = Velocities(wf, scheme)
    im_wp = -vel.m[i] * vel.u[i]
    shifted = _shifted_density(wf, i, shift)
    ratio = np.ones(wf.grid.shape)
    ratio[window] = shifted[window] / wf.rho[window]
    predicted = 1.0 + 2.0 * alpha * im_wp
    residual = np.where(window, np.abs(ratio - predicted), 0.0)
    return ProbeResult(float(alpha), ratio, residual, window)


def momentum_representation(wf: WaveFunction, *, scheme: str = "fd4",
                            n_sigma: float = 8.0) -> WaveFunction:
    """Fourier transform ψ(x1, x2) onto a momentum grid.

    φ(p1, p2) = (2πħ)^{-1} ∬ e^{-i(p1x1 + p2x2)/ħ} ψ dx1 dx2, evaluated by
    trapezoidal quadrature on a momentum grid with the same point counts,
    spanning ⟨p_i⟩ ± n_sigma σ_{p_i}. The Parseval norm before
    renormalization is stored in ``meta["parseval_norm"]``.
    """
    if wf.representation != "position":
        raise UsageError("state is already in the momentum representation")
    if not wf.boundary_decay_ok or not decays_at_boundary(wf.rho):
        raise ConfigurationError("state does not decay at the domain edge; the transform is unreliable")
    hbar = wf.physics.hbar
    grid = wf.grid
    psi_c = np.conj(wf.psi)
    bounds = []
    for i in (1, 2):
        d = derivative(wf, i, scheme)
        p = integrate(psi_c * (-1j * hbar) * d, grid).real
        p2 = integrate(psi_c * (-hbar ** 2) * partial_derivative(d, i, grid, scheme), grid).real
        sd = math.sqrt(max(p2 - p * p, 0.0))
        lo, hi = p - n_sigma * sd, p + n_sigma * sd
        nyquist = math.pi * hbar / grid.spacing(i)
        if max(abs(lo), abs(hi)) >= nyquist:
            raise ConfigurationError(
                f"momentum range [{lo:.3g}, {hi:.3g}] exceeds the grid's Nyquist limit {nyquist:.3g}")
        bounds += [lo, hi]
    n1, n2 = grid.shape
    pgrid = make_grid(GridSpec(n1, n2, *bounds))
    f1 = _dft_matrix(pgrid.x1, grid.x1, grid.w1, hbar)
    f2 = _dft_matrix(pgrid.x2, grid.x2, grid.w2, hbar)
    phi = f1 @ wf.psi @ f2.T
    norm = integrate(np.abs(phi) ** 2, pgrid)
    phi = phi / math.sqrt(norm)
    ok = decays_at_boundary(np.abs(phi) ** 2)
    if not ok:
        raise ConfigurationError("momentum-space state does not decay at the edge of the momentum grid")
    return WaveFunction(phi, pgrid, wf.physics, "momentum", label=f"momentum({wf.label})",
                        boundary_decay_ok=ok, meta={"parseval_norm": norm, "source": wf.label})


def _dft_matrix(p: np.ndarray, x: np.ndarray, w: np.ndarray, hbar: float) -> np.ndarray:
    return w[None, :] * np.exp(-1j * np.outer(p, x) / hbar) / math.sqrt(2 * math.pi * hbar)


def conjugate_pair_weak_correlation(wf_p: WaveFunction, *, scheme: str = "fd4",
                                    eps_rel: float = DEFAULT_EPS_REL,
                                    rtol: float = POINTWISE_GUARD) -> WeakCorrelationField:
    """Weak correlation of x̂1, x̂2 with momentum postselection (x̂ = +iħ∂_p)."""
    if wf_p.representation != "momentum":
        raise UsageError("expected a momentum-representation state; see momentum_representation()")
    return weak_correlation(wf_p, scheme=scheme, eps_rel=eps_rel, rtol=rtol)
