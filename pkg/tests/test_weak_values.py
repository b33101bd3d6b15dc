import numpy as np
import pytest

from weakcorr import (
    GridSpec,
    WaveFunction,
    boost,
    conjugate_pair_weak_correlation,
    correlation_decomposition,
    load_wavefunction,
    make_grid,
    momentum_correlation,
    momentum_expectation,
    momentum_representation,
    phase_gaussian,
    product_gaussian,
    save_wavefunction,
    weak_correlation,
    weak_kinetic_energy,
    weak_momentum,
    weak_momentum_product,
    weak_probe,
)
from weakcorr.exceptions import ConfigurationError, NumericalConsistencyError, UsageError
from weakcorr.kinematics import quantum_potential
from weakcorr.weak_values import representation_sign, weak_mean

from conftest import index_of


@pytest.fixture(scope="module")
def lattice():
    """Grid with spacing 1/16 that contains the integer points."""
    return make_grid(GridSpec(257, 257))


class TestWeakMomentum:
    def test_product_at_unit_point(self, lattice):
        wp = weak_momentum(product_gaussian(1.0, 1.0, lattice))
        i, j = index_of(lattice, 1.0, 0.0)
        assert wp.wp1[i, j] == pytest.approx(0.5j, abs=1e-6)

    def test_phase_at_unit_point(self, lattice):
        wp = weak_momentum(phase_gaussian(1.0, 0.3, lattice))
        i, j = index_of(lattice, 1.0, 1.0)
        assert wp.wp2[i, j] == pytest.approx(0.3 + 0.5j, abs=1e-6)

    def test_mean_is_expectation(self, any_state):
        for i in (1, 2):
            wm = weak_mean(any_state, i)
            assert wm == pytest.approx(momentum_expectation(any_state, i).operator, abs=1e-8)
            assert abs(wm.imag) < 1e-8

    def test_boosted_mean(self, battery):
        assert weak_mean(boost(battery["phase"], 0.7), 1) == pytest.approx(0.7, abs=5e-6)

    def test_masked_points_zero(self, battery):
        wp = weak_momentum(battery["cat"])
        assert np.all(wp.wp1[~wp.mask] == 0) and np.all(wp.wp(2)[~wp.mask] == 0)


class TestWeakProduct:
    def test_product_state_factorizes(self, battery):
        wf = battery["product"]
        prod = weak_momentum_product(wf)
        wp = weak_momentum(wf)
        m = prod.mask
        np.testing.assert_allclose(prod.field[m], (wp.wp1 * wp.wp2)[m], rtol=0,
                                   atol=1e-10 * np.abs(prod.field[m]).max())

    def test_correlated_mean(self, battery):
        prod = weak_momentum_product(battery["correlated"])
        assert prod.mean == pytest.approx(0.1, abs=1e-6)
        assert prod.residual <= 1e-6

    def test_phase_mean_is_real(self, battery):
        prod = weak_momentum_product(battery["phase"])
        assert abs(prod.mean.imag) < 1e-8

    def test_means_close(self, any_state):
        assert weak_momentum_product(any_state).residual <= 1e-6


class TestWeakCorrelation:
    @pytest.mark.parametrize("name, expected", [
        ("correlated", 0.2 + 0j),
        ("phase", -0.3j),
        ("general", 0.2 - 0.3j),
        ("product", 0j),
    ])
    def test_gaussian_fields_are_uniform(self, battery, name, expected):
        cwf = weak_correlation(battery[name])
        m = cwf.mask
        assert cwf.mean == pytest.approx(expected, abs=1e-6)
        # uniform over the well-sampled core
        core = m & (battery[name].rho > 1e-4 * battery[name].rho.max())
        np.testing.assert_allclose(cwf.cw[core], expected, rtol=0, atol=1e-5)
        np.testing.assert_allclose(cwf.cw[m], expected, rtol=0, atol=1e-4)

    def test_definition_route(self, battery):
        cwf = weak_correlation(battery["general"])
        core = cwf.mask & (battery["general"].rho > 1e-4 * battery["general"].rho.max())
        np.testing.assert_allclose(cwf.definition[core], 0.2 - 0.3j, rtol=0, atol=5e-5)

    def test_cat_is_real(self, battery):
        cwf = weak_correlation(battery["cat"])
        assert cwf.sup_im == 0.0 and cwf.sup_re > 1.0

    def test_odd_cat_nodal_line_excluded(self, grid):
        from weakcorr import cat_state

        wf = cat_state(2.0, 0.5, grid, parity=-1)
        cwf = weak_correlation(wf, rtol=np.inf)
        # the node and every point whose stencil reaches it
        assert not cwf.mask[np.abs(grid.X1 + grid.X2) < 2.5 * grid.h1].any()
        assert np.isfinite(cwf.sup_re) and cwf.sup_re < 1e3

    def test_route_residual_is_small_but_nonzero(self, battery):
        cwf = weak_correlation(battery["correlated"])
        assert 0 < cwf.route_residual < 1e-3
        assert cwf.route_rms(battery["correlated"].rho) < 1e-5

    def test_noise_is_flagged(self, battery):
        wf = battery["correlated"]
        rng = np.random.default_rng(7)
        noisy = WaveFunction(wf.psi * np.exp(1e-2j * rng.standard_normal(wf.psi.shape)), wf.grid)
        with pytest.raises(NumericalConsistencyError, match="routes disagree"):
            weak_correlation(noisy)

    @pytest.mark.parametrize("name", ["correlated", "phase", "general"])
    def test_exchange(self, battery, name):
        from weakcorr import swap_particles

        a = weak_correlation(battery[name])
        b = weak_correlation(swap_particles(battery[name]))
        assert b.mean == pytest.approx(a.mean, abs=1e-8)
        assert a.exchange_residual < 1e-3


class TestDecomposition:
    def test_correlated(self, battery):
        d = correlation_decomposition(battery["correlated"])
        assert d.term_ReRe == pytest.approx(0.0, abs=1e-12)
        assert d.term_ImIm == pytest.approx(0.1, abs=1e-6)
        assert d.term_ReCw == pytest.approx(0.2, abs=1e-6)
        assert d.closure == pytest.approx(0.1, abs=1e-6)
        assert d.C_direct == pytest.approx(momentum_correlation(battery["correlated"]).direct, abs=1e-12)

    def test_phase(self, battery):
        d = correlation_decomposition(battery["phase"])
        for term in (d.term_ReRe, d.term_ImIm, d.term_ReCw, d.C_direct):
            assert abs(term) < 1e-8

    def test_product(self, battery):
        d = correlation_decomposition(battery["product"])
        assert max(abs(d.term_ReRe), abs(d.term_ImIm), abs(d.term_ReCw)) < 1e-10

    def test_closes(self, any_state):
        assert correlation_decomposition(any_state).residual <= 1e-6


class TestKineticEnergy:
    def test_product_origin(self, lattice):
        ke = weak_kinetic_energy(product_gaussian(1.0, 1.0, lattice))
        i, j = index_of(lattice, 0.0, 0.0)
        assert ke.field[i, j] == pytest.approx(0.5, abs=5e-6)

    def test_phase_unit_point(self, lattice):
        wf = phase_gaussian(1.0, 0.3, lattice)
        ke = weak_kinetic_energy(wf)
        vq = quantum_potential(wf).vq_total
        i, j = index_of(lattice, 1.0, 1.0)
        assert ke.field[i, j] == pytest.approx(0.09 + vq[i, j], abs=1e-6)
        # V_Q(1, 1) = 0.5 - (1 + 1)/8 for the unit Gaussian
        assert vq[i, j] == pytest.approx(0.25, abs=1e-6)

    def test_boost_adds_constant(self, battery):
        wf = battery["product"]
        a = weak_kinetic_energy(wf)
        b = weak_kinetic_energy(boost(wf, 0.5))
        core = a.mask & (wf.rho > 1e-4 * wf.rho.max())
        np.testing.assert_allclose(b.field[core] - a.field[core], 0.125, rtol=0, atol=5e-5)


class TestProbe:
    def test_first_order(self, battery, grid):
        res = weak_probe(battery["product"], 1, 1e-3)
        w = res.window
        np.testing.assert_allclose(res.ratio_field[w], 1 + 1e-3 * grid.X1[w], rtol=0, atol=1e-5)
        assert res.first_order_residual < 5e-6

    def test_second_order_scaling(self, battery):
        a = weak_probe(battery["product"], 1, 1e-3).first_order_residual
        b = weak_probe(battery["product"], 1, 5e-4).first_order_residual
        assert 3.5 <= a / b <= 4.5

    def test_zero_kick(self, battery):
        res = weak_probe(battery["general"], 2, 0.0)
        np.testing.assert_allclose(res.ratio_field, 1.0, rtol=0, atol=1e-14)
        assert res.first_order_residual < 1e-14

    def test_shift_beyond_cell(self, battery):
        with pytest.raises(ConfigurationError):
            weak_probe(battery["product"], 1, 0.1)

    def test_file_state_interpolates(self, tmp_path):
        wf = product_gaussian(1.0, 1.0, make_grid(GridSpec()))
        save_wavefunction(wf, tmp_path / "p")
        loaded = load_wavefunction(tmp_path / "p.json")
        exact = weak_probe(wf, 1, 1e-3).first_order_residual
        interp = weak_probe(loaded, 1, 1e-3).first_order_residual
        assert interp == pytest.approx(exact, rel=0.05)
        assert interp < 5e-6


class TestMomentumRepresentation:
    def test_parseval(self, any_state):
        wp = momentum_representation(any_state)
        assert abs(wp.meta["parseval_norm"] - 1) < 1e-8
        assert wp.norm == pytest.approx(1.0, abs=1e-12)
        assert wp.representation == "momentum"

    def test_product_stays_product(self, battery):
        wp = momentum_representation(battery["product"])
        s = np.linalg.svd(wp.psi, compute_uv=False)
        assert s[1] / s[0] < 1e-10
        cwf = conjugate_pair_weak_correlation(wp)
        assert max(cwf.sup_re, cwf.sup_im) < 1e-8

    def test_product_width(self, battery):
        wp = momentum_representation(battery["product"])
        p1 = wp.grid.X1
        # σ_p = ħ/(2σ) = 1/2
        assert np.sum(p1 ** 2 * wp.rho) * wp.grid.h1 * wp.grid.h2 == pytest.approx(0.25, rel=1e-8)

    def test_sign_convention(self, battery):
        assert representation_sign(battery["product"]) == 1
        assert representation_sign(momentum_representation(battery["product"])) == -1

    def test_correlated_in_momentum_space(self, battery):
        # φ ∝ exp(-½pᵀM⁻¹p/ħ²), so the momentum-space matrix is M⁻¹ and Re C^w = (M⁻¹)₁₂ at ħ = 1
        cwf = conjugate_pair_weak_correlation(momentum_representation(battery["correlated"]), rtol=np.inf)
        inv12 = -0.2 / (0.5 ** 2 - 0.2 ** 2)
        assert cwf.mean.real == pytest.approx(inv12, rel=1e-4)
        assert abs(cwf.mean.imag) < 1e-8

    def test_needs_momentum_state(self, battery):
        with pytest.raises(UsageError):
            conjugate_pair_weak_correlation(battery["product"])
        with pytest.raises(UsageError):
            momentum_representation(momentum_representation(battery["product"]))

    def test_undersampled_grid_rejected(self):
        coarse = make_grid(GridSpec(32, 32, -8, 8, -8, 8))
        with pytest.raises(ConfigurationError, match="Nyquist"):
            momentum_representation(product_gaussian(0.5, 0.5, coarse))
