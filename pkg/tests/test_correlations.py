import numpy as np
import pytest

from triquanta import (
    DensityMatrix,
    basis_state,
    build_h_dressed,
    build_space,
    cross_g2,
    emission_spectrum,
    expectation,
    ladder_operator,
    liouvillian,
    number_operator,
    standard_channels,
    steady_state,
    two_time_correlation,
)
from triquanta.correlations import CorrelationSeries


@pytest.fixture(scope="module")
def damped_mode():
    """Single damped mode: H = omega0 a+a, one photon channel."""
    space = build_space(3, 1)
    omega0, kappa = 1.3, 0.8
    a = ladder_operator(space, "photon")
    h = omega0 * (a.dag() @ a)
    from triquanta import CollapseChannel

    l = liouvillian(h, [CollapseChannel(a, kappa, "photon")])
    return space, omega0, kappa, a, l


@pytest.fixture(scope="module")
def fig3a_steady(fig3a_params, space6):
    h = build_h_dressed(fig3a_params, space6)
    l = liouvillian(h, standard_channels(fig3a_params, space6))
    return l, steady_state(l)


class TestTwoTimeCorrelation:
    def test_vacuum_gives_zero(self, damped_mode):
        space, _, _, a, l = damped_mode
        rho = basis_state(space, 0, 0, 0).to_density()
        corr = two_time_correlation(l, rho, a, np.linspace(0, 5, 51))
        assert np.abs(corr.values).max() < 1e-12

    def test_analytic_damped_oscillator(self, damped_mode):
        space, omega0, kappa, a, l = damped_mode
        rho = basis_state(space, 0, 1, 0).to_density()
        tau = np.linspace(0.0, 6.0, 121)
        corr = two_time_correlation(l, rho, a, tau, check_stationary=False)
        expected = np.exp((-1j * omega0 - kappa / 2) * tau)
        np.testing.assert_allclose(corr.values, expected, atol=1e-6)

    def test_tau_zero_equals_occupation(self, fig3a_steady, space6):
        l, rho = fig3a_steady
        a = ladder_operator(space6, "photon")
        corr = two_time_correlation(l, rho, a, np.linspace(0.0, 1.0, 5))
        n = expectation(number_operator(space6, "photon"), rho).real
        assert corr.values[0].real == pytest.approx(n, abs=1e-10)
        assert abs(corr.values[0].imag) < 1e-10

    def test_rejects_non_stationary_input(self, damped_mode):
        space, _, _, a, l = damped_mode
        rho = basis_state(space, 0, 1, 0).to_density()
        with pytest.raises(ValueError, match="stationary"):
            two_time_correlation(l, rho, a, np.linspace(0, 1, 5))


def lorentzian_series(omega0, kappa, tau_max, n):
    tau = np.linspace(0.0, tau_max, n)
    return CorrelationSeries(tau, np.exp((-1j * omega0 - kappa / 2) * tau))


class TestEmissionSpectrum:
    def test_lorentzian_peak_and_width(self):
        omega0, kappa = 1.3, 0.2
        corr = lorentzian_series(omega0, kappa, 20.0 / kappa * 5, 16384)
        grid = np.arange(0.5, 2.2, 0.002)
        spec = emission_spectrum(corr, grid)
        assert spec.peak_frequency() == pytest.approx(omega0, abs=0.002)
        peak = spec.values.max()
        assert peak == pytest.approx(4.0 / kappa, rel=1e-3)
        above = grid[spec.values >= peak / 2]
        fwhm = above[-1] - above[0]
        assert fwhm == pytest.approx(kappa, rel=0.05)

    def test_zero_series_gives_zero(self):
        corr = CorrelationSeries(np.linspace(0, 10, 101), np.zeros(101, complex))
        spec = emission_spectrum(corr, np.linspace(0, 2, 21))
        assert np.all(spec.values == 0.0)

    def test_rejects_undecayed_series(self):
        corr = lorentzian_series(1.0, 0.2, 5.0, 301)  # |C| only down to ~0.6
        with pytest.raises(ValueError, match="not decayed"):
            emission_spectrum(corr, np.linspace(0.5, 1.5, 11))

    def test_step_halving_invariance(self):
        omega0, kappa = 1.3, 0.25
        grid = np.arange(0.8, 1.8, 0.005)
        coarse = emission_spectrum(lorentzian_series(omega0, kappa, 400.0, 16385), grid)
        fine = emission_spectrum(lorentzian_series(omega0, kappa, 400.0, 32769), grid)
        rel = np.abs(coarse.values - fine.values).max() / fine.values.max()
        assert rel < 1e-6


class TestCrossG2:
    def test_product_state_is_uncorrelated(self):
        space = build_space(2, 2)
        diag_a = np.array([0.7, 0.2, 0.1])
        diag_b = np.array([0.5, 0.3, 0.2])
        rho_atom = np.diag([1.0, 0.0])
        rho = np.kron(rho_atom, np.kron(np.diag(diag_a), np.diag(diag_b)))
        g2 = cross_g2(DensityMatrix(space, rho))
        assert g2 == pytest.approx(1.0, rel=1e-12)

    def test_pair_mixture(self):
        # p |1,1><1,1| + (1-p) |0,0><0,0| in the boson sector -> g2 = 1/p
        space = build_space(1, 1)
        p = 0.1
        rho = (p * basis_state(space, 0, 1, 1).to_density().matrix
               + (1 - p) * basis_state(space, 0, 0, 0).to_density().matrix)
        assert cross_g2(DensityMatrix(space, rho)) == pytest.approx(10.0, rel=1e-12)

    def test_phase_rotation_invariance(self, fig3a_steady, space6):
        _, rho = fig3a_steady
        base = cross_g2(rho)
        n_a, n_b = space6.boson_numbers()
        phases = np.exp(1j * (0.7 * n_a + 0.2 * n_b))
        rotated = DensityMatrix(
            space6, (phases[:, None] * rho.matrix) * phases.conj()[None, :])
        assert cross_g2(rotated) == pytest.approx(base, rel=1e-12)

    def test_vanishing_occupation_rejected(self):
        space = build_space(1, 1)
        vac = basis_state(space, 0, 0, 0).to_density()
        with pytest.raises(ValueError, match="vanishing"):
            cross_g2(vac)

    def test_steady_state_is_bunched(self, fig3a_steady):
        _, rho = fig3a_steady
        assert cross_g2(rho) > 1.0
