"""Entanglement detection for two-particle pure states from velocity fields and weak values.

The osmotic and flow velocities u_i, v_i of ψ = √ρ e^{iS} are the (scaled)
imaginary and real parts of the momentum weak value with position
postselection. Correlations between them, and the weak correlation
C^w = ⟨p̂1p̂2⟩_w - ⟨p̂1⟩_w⟨p̂2⟩_w, separate amplitude (A) from phase (P)
entanglement.
"""

__version__ = "0.1.0"

from .detector import (
    DEFAULT_TAU,
    Analysis,
    EntanglementIndicators,
    IdentityReport,
    Label,
    Residual,
    Verdict,
    analyze,
    classify,
    identity_suite,
    indicators,
)
from .estimator import EntanglementDetector
from .exceptions import (
    ConfigurationError,
    DegenerateStateError,
    InputFormatError,
    InvariantViolation,
    NumericalConsistencyError,
    NumericalDomainError,
    NumericalError,
    UnsupportedError,
    UsageError,
    WeakCorrError,
)
from .grid import (
    DEFAULT_EPS_REL,
    Grid,
    GridSpec,
    PhysicsParams,
    build_mask,
    default_grid,
    integrate,
    make_grid,
    partial_derivative,
)
from .kinematics import (
    commutator_check,
    integration_by_parts_check,
    momentum_correlation,
    momentum_dispersion,
    momentum_expectation,
    pi_terms,
    quantum_potential,
    velocity_fields,
)
from .oracle import brute_force_expectation, gaussian_truth
from .states import (
    StateSpec,
    WaveFunction,
    boost,
    cat_state,
    correlated_gaussian,
    from_amplitude,
    general_gaussian,
    global_phase,
    load_wavefunction,
    make_state,
    phase_gaussian,
    product_gaussian,
    save_wavefunction,
    swap_particles,
)
from .weak_values import (
    conjugate_pair_weak_correlation,
    correlation_decomposition,
    momentum_representation,
    weak_correlation,
    weak_kinetic_energy,
    weak_momentum,
    weak_momentum_product,
    weak_probe,
)
