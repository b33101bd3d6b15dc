"""Entanglement indicators, classification and the identity suite.

Two mechanisms are distinguished. A non-factorizable amplitude √ρ shows up
as a nonzero real part of the weak correlation (equivalently ⟨u1 u2⟩ ≠ 0);
a non-additive phase shows up as a nonzero imaginary part (⟨u_i v_j⟩ ≠ 0).
Each mechanism has a mean-type and a sup-type indicator, all dimensionless.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import InvariantViolation, UsageError
from .grid import DEFAULT_EPS_REL, build_mask
from .kinematics import (
    Velocities,
    _pi_raw,
    commutator_check,
    integration_by_parts_check,
    momentum_correlation,
    momentum_dispersion,
    momentum_expectation,
    quantum_potential,
    rho_mean,
)
from .states import WaveFunction
from .weak_values import (
    WeakCorrelationField,
    _WeakData,
    correlation_decomposition,
    weak_correlation,
    weak_kinetic_energy,
    weak_momentum_product,
)

DEFAULT_TAU = 1e-3
INDICATOR_NAMES = ("iA_mean", "iA_sup", "iP_mean", "iP_sup")


class Label(str, enum.Enum):
    PRODUCT = "PRODUCT"
    A_ONLY = "A_ONLY"
    P_ONLY = "P_ONLY"
    AP = "AP"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class EntanglementIndicators:
    """The four dimensionless indicators.

    iA_mean = |⟨Im w1 Im w2⟩| / √(⟨(Im w1)²⟩⟨(Im w2)²⟩), which is
    |⟨u1 u2⟩| / √(⟨u1²⟩⟨u2²⟩) for position postselection.
    iP_mean = max over (i, j) of |⟨Im w_i Re w_j⟩| / √(⟨(Im w_i)²⟩ (var Re w_j + ⟨(Im w_j)²⟩)).
    iA_sup, iP_sup = sup |Re C^w|, sup |Im C^w| over unmasked points divided by
    rms(Im w1) rms(Im w2) = m1 m2 ũ1 ũ2.
    """

    iA_mean: float
    iA_sup: float
    iP_mean: float
    iP_sup: float

    def as_array(self) -> np.ndarray:
        return np.array([self.iA_mean, self.iA_sup, self.iP_mean, self.iP_sup])

    def to_dict(self) -> dict:
        return {name: getattr(self, name) for name in INDICATOR_NAMES}


@dataclass(frozen=True)
class Verdict:
    label: Label
    tau: float
    flags: dict
    a_flag: bool
    p_flag: bool
    # d = 1 per particle: the criterion is necessary as well as sufficient
    is_1d_iff_applicable: bool = True

    @property
    def entangled(self) -> bool:
        return self.label is not Label.PRODUCT

    def to_dict(self) -> dict:
        return {"class": self.label.value, "tau": self.tau, "flags": dict(self.flags),
                "a_flag": self.a_flag, "p_flag": self.p_flag,
                "is_1d_iff_applicable": self.is_1d_iff_applicable}


def indicators(wf: WaveFunction, cwf: WeakCorrelationField | None = None, *, scheme: str = "fd4",
               eps_rel: float = DEFAULT_EPS_REL) -> EntanglementIndicators:
    """Indicators of a position- or momentum-representation state.

    ``cwf`` may be passed to reuse an already computed weak correlation; it
    must share the state's mask.
    """
    data = _WeakData(wf, scheme)
    if cwf is None:
        # diagnostic evaluation: route agreement is judged by identity_suite
        cwf = weak_correlation(wf, scheme=scheme, eps_rel=eps_rel, rtol=np.inf)
    elif cwf.cw.shape != wf.psi.shape:
        raise UsageError("weak correlation field does not belong to this state")
    im = {i: data.w[i].imag for i in (1, 2)}
    re = {i: data.w[i].real for i in (1, 2)}
    im2 = {i: rho_mean(wf, im[i] ** 2) for i in (1, 2)}
    for i in (1, 2):
        if not (im2[i] > 0 and math.isfinite(im2[i])):
            raise InvariantViolation(f"<(Im w{i})^2> = {im2[i]!r} must be strictly positive")
    var_re = {i: max(rho_mean(wf, re[i] ** 2) - rho_mean(wf, re[i]) ** 2, 0.0) for i in (1, 2)}
    ia_mean = abs(rho_mean(wf, im[1] * im[2])) / math.sqrt(im2[1] * im2[2])
    ip_mean = max(abs(rho_mean(wf, im[i] * re[j])) / math.sqrt(im2[i] * (var_re[j] + im2[j]))
                  for i, j in ((1, 2), (2, 1)))
    scale = math.sqrt(im2[1] * im2[2])
    return EntanglementIndicators(float(ia_mean), cwf.sup_re / scale,
                                  float(ip_mean), cwf.sup_im / scale)


def classify(ind: EntanglementIndicators, tau: float = DEFAULT_TAU) -> Verdict:
    check_tau(tau)
    flags = {name: bool(getattr(ind, name) > tau) for name in INDICATOR_NAMES}
    a = flags["iA_mean"] or flags["iA_sup"]
    p = flags["iP_mean"] or flags["iP_sup"]
    label = {(False, False): Label.PRODUCT, (True, False): Label.A_ONLY,
             (False, True): Label.P_ONLY, (True, True): Label.AP}[(a, p)]
    return Verdict(label, float(tau), flags, a, p)


def check_tau(tau) -> float:
    if not (isinstance(tau, (int, float)) and 0.0 < tau <= 0.1):
        raise UsageError(f"tau must lie in (0, 0.1], got {tau!r}")
    return float(tau)


@dataclass(frozen=True, eq=False)
class Analysis:
    indicators: EntanglementIndicators
    verdict: Verdict
    weak_correlation: WeakCorrelationField
    mask_fraction: float   # fraction of grid points that are unmasked


def analyze(wf: WaveFunction, *, tau: float = DEFAULT_TAU, scheme: str = "fd4",
            eps_rel: float = DEFAULT_EPS_REL) -> Analysis:
    """Indicators and verdict for one state."""
    check_tau(tau)
    cwf = weak_correlation(wf, scheme=scheme, eps_rel=eps_rel, rtol=np.inf)
    ind = indicators(wf, cwf, scheme=scheme, eps_rel=eps_rel)
    return Analysis(ind, classify(ind, tau), cwf, mask_fraction(wf, eps_rel))


# ---------------------------------------------------------------- identity suite


@dataclass(frozen=True)
class Residual:
    name: str
    value: float
    tol: float
    kind: str            # "mean" or "pointwise"
    rms: float | None = None  # ρ-weighted rms for pointwise residuals (informational)

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.value) and self.value <= self.tol)

    def to_dict(self) -> dict:
        d = {"name": self.name, "value": self.value, "tol": self.tol, "kind": self.kind,
             "passed": self.passed}
        if self.rms is not None:
            d["rms"] = self.rms
        return d


@dataclass(frozen=True)
class IdentityReport:
    residuals: tuple = field(default_factory=tuple)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.residuals)

    @property
    def failures(self) -> list:
        return [r for r in self.residuals if not r.passed]

    def __getitem__(self, name: str) -> Residual:
        for r in self.residuals:
            if r.name == name:
                return r
        raise KeyError(name)

    def names(self) -> list:
        return [r.name for r in self.residuals]

    def to_list(self) -> list:
        return [r.to_dict() for r in self.residuals]


def default_tolerance(wf_or_grid) -> float:
    """1e-5 at the default resolution, 1e-4 on coarser grids (fewer than 256 points per axis)."""
    grid = getattr(wf_or_grid, "grid", wf_or_grid)
    return 1e-5 if min(grid.shape) >= 256 else 1e-4


def identity_suite(wf: WaveFunction, tol: float | None = None, *, scheme: str = "fd4",
                   eps_rel: float = DEFAULT_EPS_REL) -> IdentityReport:
    """Evaluate every identity between velocity fields, weak values and moments.

    Nothing is raised for failed identities; each residual is relative to a
    per-quantity scale and compared against ``tol``.
    """
    tol = default_tolerance(wf) if tol is None else float(tol)
    inf = np.inf
    out = []

    def add(name, value, kind="mean", rms=None):
        out.append(Residual(name, float(value), tol, kind, None if rms is None else float(rms)))

    data = _WeakData(wf, scheme)
    cwf = weak_correlation(wf, scheme=scheme, eps_rel=eps_rel, rtol=inf)
    im2 = {i: rho_mean(wf, data.w[i].imag ** 2) for i in (1, 2)}
    for i in (1, 2):
        add(f"weak_mean_imag_{i}", abs(rho_mean(wf, data.w[i].imag)) / math.sqrt(im2[i]))
    add("weak_product_mean", weak_momentum_product(wf, scheme=scheme, eps_rel=eps_rel,
                                                   rtol=inf).residual)
    add("correlation_decomposition", correlation_decomposition(wf, scheme=scheme, rtol=inf).residual)
    add("weak_correlation_routes", cwf.route_residual, "pointwise", cwf.route_rms(wf.rho))
    add("exchange_uu", cwf.exchange_residual_part("uu"), "pointwise")
    add("exchange_uv", cwf.exchange_residual_part("uv"), "pointwise")

    if wf.representation != "position":
        if "parseval_norm" in wf.meta:
            add("parseval", abs(wf.meta["parseval_norm"] - 1.0))
        return IdentityReport(tuple(out))

    vel = Velocities(wf, scheme)
    hbar = vel.hbar
    u2 = {i: vel.mean(vel.u[i] ** 2) for i in (1, 2)}
    for i in (1, 2):
        add(f"mean_u_{i}", abs(vel.mean_u(i)) / math.sqrt(u2[i]))
    for i in (1, 2):
        me = momentum_expectation(wf, i, scheme=scheme, rtol=inf)
        add(f"momentum_expectation_{i}", me.residual / (vel.m[i] * math.sqrt(u2[i] + vel.mean(vel.v[i] ** 2))))
    ibp = integration_by_parts_check(wf, scheme=scheme)
    for key in sorted(ibp.sides):
        add(f"integration_by_parts_{key}", ibp.residual(key))
    add("momentum_correlation", momentum_correlation(wf, scheme=scheme, rtol=inf).residual)
    for i in (1, 2):
        disp = momentum_dispersion(wf, i, scheme=scheme, rtol=inf)
        add(f"dispersion_{i}", disp.residual)
        add(f"dispersion_vq_{i}", disp.vq_residual)
    qp = quantum_potential(wf, scheme=scheme, eps_rel=eps_rel, rtol=inf)
    for i in (1, 2):
        add(f"quantum_potential_routes_{i}", qp.residual(i), "pointwise")
    mask = qp.mask
    for i in (1, 2):
        pi_ii, _ = _pi_raw(vel, i, i)
        vqi = qp.vq1 if i == 1 else qp.vq2
        diff = np.abs(np.where(mask, pi_ii, 0.0) - 2 * vel.m[i] * vqi)[mask]
        add(f"pi_uu_diagonal_{i}", diff.max() / max(np.abs(pi_ii[mask]).max(), vel.m[i] ** 2 * u2[i]),
            "pointwise")
    pi_uu, pi_uv = _pi_raw(vel, 1, 2)
    pi_scale = vel.m[1] * vel.m[2] * math.sqrt(u2[1] * u2[2])
    add("pi_uu_mean", abs(vel.mean(pi_uu) - vel.m[1] * vel.m[2] * vel.mean(vel.u[1] * vel.u[2])) / pi_scale)
    add("pi_uv_mean", abs(vel.mean(pi_uv)) / pi_scale)
    for i in (1, 2):
        cc = commutator_check(wf, i, scheme=scheme, atol=inf)
        add(f"commutator_{i}", max(abs(cc.lhs - 1j * hbar), abs(cc.rhs - 1j * hbar)) / hbar)
    ke = weak_kinetic_energy(wf, scheme=scheme, eps_rel=eps_rel, rtol=inf)
    add("kinetic_energy", ke.residual, "pointwise")
    return IdentityReport(tuple(out))


def mask_fraction(wf: WaveFunction, eps_rel: float = DEFAULT_EPS_REL) -> float:
    return float(build_mask(wf.rho, eps_rel).mean())
