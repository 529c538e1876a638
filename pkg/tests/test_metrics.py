import numpy as np
import pytest

from spectro.metrics import fidelity, mse
from spectro.spectra import TWO_PI, FrequencyGrid, SpectralDensity, integrate_on_grid

SIGMA = TWO_PI * 30e3
NU = TWO_PI * 200e3


def grid_for(*densities, step=SIGMA / 50):
    edge = max(sd.support_edge() for sd in densities)
    return FrequencyGrid(omega_max=edge, delta_omega=step)


class TestMse:
    def test_identical_spectra(self):
        sd = SpectralDensity.gaussian(1e8, NU, SIGMA)
        grid = grid_for(sd)
        s = sd.evaluate(grid.values)
        assert mse(s, s, grid) == 0.0

    def test_zero_estimate_gives_signal_energy(self):
        sd = SpectralDensity.gaussian(1e8, NU, SIGMA)
        grid = grid_for(sd)
        s = sd.evaluate(grid.values)
        assert mse(s, np.zeros_like(s), grid) == pytest.approx(
            integrate_on_grid(s**2, grid, two_sided=True))

    def test_shifted_gaussian_ratio(self):
        # quadrature oracle: mse(S, S shifted by sigma) / mse(S, 0)
        #   = 2 * (1 - exp(-1/4)) ~= 0.44240  (Gaussian product integral)
        sd = SpectralDensity.gaussian(1e8, NU, SIGMA)
        shifted = SpectralDensity.gaussian(1e8, NU + SIGMA, SIGMA)
        grid = grid_for(sd, shifted)
        s = sd.evaluate(grid.values)
        sh = shifted.evaluate(grid.values)
        ratio = mse(s, sh, grid) / mse(s, np.zeros_like(s), grid)
        assert ratio == pytest.approx(2.0 * (1.0 - np.exp(-0.25)), rel=0.01)

    def test_nonnegative_and_zero_only_on_equality(self):
        rng = np.random.default_rng(3)
        grid = FrequencyGrid(omega_max=100.0, delta_omega=1.0)
        a = rng.uniform(0, 1, grid.size)
        b = a.copy()
        b[3] += 1e-3
        assert mse(a, b, grid) > 0
        assert mse(a, a, grid) == 0.0

    def test_length_mismatch(self):
        grid = FrequencyGrid(omega_max=10.0, delta_omega=1.0)
        with pytest.raises(ValueError):
            mse(np.ones(grid.size), np.ones(grid.size - 1), grid)


class TestFidelity:
    def test_scaled_copy_scores_one(self):
        sd = SpectralDensity.gaussian(1e8, NU, SIGMA)
        grid = grid_for(sd)
        s = sd.evaluate(grid.values)
        assert fidelity(s, 3.7 * s, grid) == pytest.approx(1.0, abs=1e-12)

    def test_disjoint_supports_score_zero(self):
        grid = FrequencyGrid(omega_max=100.0, delta_omega=1.0)
        a = np.zeros(grid.size)
        b = np.zeros(grid.size)
        a[10:20] = 1.0
        b[40:50] = 1.0
        assert fidelity(a, b, grid) == 0.0

    def test_zero_estimate_scores_zero(self):
        grid = FrequencyGrid(omega_max=100.0, delta_omega=1.0)
        a = np.ones(grid.size)
        assert fidelity(a, np.zeros(grid.size), grid) == 0.0

    def test_two_sigma_separated_gaussians(self):
        # quadrature oracle: cos angle of two equal-width Gaussians a
        # distance d apart is exp(-d^2 / (4 sigma^2)); d = 2 sigma -> e^-1
        sd1 = SpectralDensity.gaussian(1e8, NU, SIGMA)
        sd2 = SpectralDensity.gaussian(1e8, NU + 2 * SIGMA, SIGMA)
        grid = grid_for(sd1, sd2)
        f = fidelity(sd1.evaluate(grid.values), sd2.evaluate(grid.values), grid)
        assert f == pytest.approx(np.exp(-1.0), rel=0.01)

    def test_symmetry_and_scale_invariance(self):
        rng = np.random.default_rng(5)
        grid = FrequencyGrid(omega_max=50.0, delta_omega=1.0)
        a = rng.uniform(0, 1, grid.size)
        b = rng.uniform(0, 1, grid.size)
        assert fidelity(a, b, grid) == pytest.approx(fidelity(b, a, grid), rel=1e-12)
        assert fidelity(a, 5.0 * b, grid) == pytest.approx(fidelity(a, b, grid), rel=1e-12)

    def test_bounded_for_nonnegative_inputs(self):
        rng = np.random.default_rng(6)
        grid = FrequencyGrid(omega_max=50.0, delta_omega=1.0)
        for _ in range(25):
            a = rng.uniform(0, 1, grid.size)
            b = rng.uniform(0, 1, grid.size)
            f = fidelity(a, b, grid)
            assert 0.0 <= f <= 1.0 + 1e-12

    def test_one_only_for_proportional(self):
        grid = FrequencyGrid(omega_max=50.0, delta_omega=1.0)
        rng = np.random.default_rng(7)
        a = rng.uniform(0.1, 1, grid.size)
        b = a.copy()
        b[5] *= 1.5
        assert fidelity(a, b, grid) < 1.0 - 1e-6

    def test_literal_convention_raw_ratio(self):
        grid = FrequencyGrid(omega_max=10.0, delta_omega=1.0)
        a = np.ones(grid.size)
        b = 2.0 * np.ones(grid.size)
        expected = (integrate_on_grid(a * b, grid, two_sided=True)
                    / (integrate_on_grid(a, grid, two_sided=True)
                       * integrate_on_grid(b, grid, two_sided=True)))
        assert fidelity(a, b, grid, convention="literal") == pytest.approx(expected)
        # literal is dimensionful: a perfect flat match scores 1/span, not 1
        assert expected == pytest.approx(1.0 / (2.0 * grid.last))

    def test_errors(self):
        grid = FrequencyGrid(omega_max=10.0, delta_omega=1.0)
        with pytest.raises(ValueError):
            fidelity(np.zeros(grid.size), np.ones(grid.size), grid)
        with pytest.raises(ValueError):
            fidelity(np.ones(grid.size), np.ones(grid.size - 1), grid)
        with pytest.raises(ValueError):
            fidelity(np.ones(grid.size), np.ones(grid.size), grid, convention="bogus")
