import numpy as np
import pytest

from spectro.controls import (ControlSequence, bod_sequences, bod_tau_sequence,
                              build_filter_bank, control_signal, design_bod,
                              filter_function_analytic_pdd,
                              filter_function_numeric, fourier_transform,
                              gramian_entry, scaled_amplitude)
from spectro.spectra import TWO_PI, FrequencyGrid, GridCoverageError


def parseval_grid(seq):
    """Wide, fine grid: resolves every harmonic lobe and reaches far enough
    that the 1/w^2 tail beyond it carries well under 0.5% of the power."""
    return FrequencyGrid(
        omega_max=161 * np.pi / seq.tau,
        delta_omega=np.pi / (4 * seq.n_flips * seq.tau),
    )


class TestControlSequence:
    def test_flip_times(self):
        pdd = ControlSequence("pdd", 1.0, 4, 1.0)
        assert np.allclose(pdd.flip_times(), [1, 2, 3, 4])
        cp = ControlSequence("cp", 1.0, 4, 1.0)
        assert np.allclose(cp.flip_times(), [0.5, 1.5, 2.5, 3.5])
        assert pdd.duration == cp.duration == 4.0

    def test_signal_values(self):
        pdd = ControlSequence("pdd", 1.0, 4, 1.0)
        assert control_signal(pdd, 0.5) == 1.0
        assert control_signal(pdd, 1.5) == -1.0
        cp = ControlSequence("cp", 1.0, 4, 1.0)
        assert control_signal(cp, 0.4) == 1.0
        assert control_signal(cp, 0.6) == -1.0

    def test_signal_outside_domain(self):
        seq = ControlSequence("pdd", 1.0, 4, 1.0)
        with pytest.raises(ValueError):
            control_signal(seq, -0.1)
        with pytest.raises(ValueError):
            control_signal(seq, 4.5)

    def test_zero_time_average(self):
        for protocol in ("pdd", "cp"):
            seq = ControlSequence(protocol, 2e-6, 32, 1.0)
            t = np.linspace(0, seq.duration, 32 * 200 + 1)
            assert abs(np.trapezoid(control_signal(seq, t), t)) < 1e-12 * seq.duration

    @pytest.mark.parametrize("kwargs", [
        dict(protocol="xx", tau=1.0, n_flips=4),
        dict(protocol="pdd", tau=0.0, n_flips=4),
        dict(protocol="pdd", tau=1.0, n_flips=1),
        dict(protocol="pdd", tau=1.0, n_flips=5),   # odd PDD is not zero-mean
        dict(protocol="pdd", tau=1.0, n_flips=4, amplitude=0.0),
    ])
    def test_validation(self, kwargs):
        with pytest.raises(ValueError):
            ControlSequence(**kwargs)


class TestFilterFunction:
    def test_zero_frequency_vanishes(self):
        for protocol in ("pdd", "cp"):
            seq = ControlSequence(protocol, 3e-6, 32, 1.0)
            assert filter_function_numeric(seq, np.array([0.0]))[0] == pytest.approx(0.0, abs=1e-30)

    def test_even_in_omega(self):
        seq = ControlSequence("cp", 2.5e-6, 16, 1.0)
        w = np.linspace(1e4, 3e6, 50)
        fwd = np.abs(fourier_transform(seq, w))
        bwd = np.abs(fourier_transform(seq, -w))
        assert np.allclose(fwd, bwd, rtol=1e-12)

    def test_analytic_matches_numeric(self):
        rng = np.random.default_rng(5)
        for m in (4, 8, 16, 32):
            for tau in rng.uniform(0.5e-6, 8e-6, size=5):
                seq = ControlSequence("pdd", float(tau), m, 1.0)
                w = np.linspace(0, 7 * np.pi / tau, 20001)
                fn = filter_function_numeric(seq, w)
                fa = filter_function_analytic_pdd(seq, w)
                mask = fn >= 1e-6 * fn.max()
                rel = np.abs(fa[mask] - fn[mask]) / fn[mask]
                assert rel.max() < 1e-10

    def test_analytic_rejects_cp_and_non_power_of_two(self):
        with pytest.raises(ValueError):
            filter_function_analytic_pdd(ControlSequence("cp", 1e-6, 8, 1.0), np.array([1.0]))
        with pytest.raises(ValueError):
            filter_function_analytic_pdd(ControlSequence("pdd", 1e-6, 12, 1.0), np.array([1.0]))

    def test_main_peak_amplitude_formula(self):
        # the squared Fourier modulus at pi/tau equals 4 A^2 M^2 tau^2 / pi^2,
        # i.e. 2*pi times the filter value there
        seq = ControlSequence("pdd", 5e-6, 32, 1.0)
        peak = filter_function_numeric(seq, np.array([np.pi / seq.tau]))[0]
        formula = 4.0 * seq.amplitude**2 * seq.n_flips**2 * seq.tau**2 / np.pi**2
        assert TWO_PI * peak == pytest.approx(formula, rel=1e-10)
        assert formula == pytest.approx(1.0375e-8, rel=1e-3)

    def test_main_peak_location_on_grid(self):
        grid = FrequencyGrid(omega_max=3.6e6, delta_omega=6e3)
        for tau in np.linspace(1e-6, 5e-6, 8):
            seq = ControlSequence("pdd", float(tau), 32, 1.0)
            f = filter_function_numeric(seq, grid)
            w_peak = grid.values[np.argmax(f)]
            assert abs(w_peak - np.pi / tau) <= grid.delta_omega

    def test_band_edge_nulls(self):
        seq = ControlSequence("pdd", 5e-6, 32, 1.0)
        peak = filter_function_numeric(seq, np.array([np.pi / seq.tau]))[0]
        lo, hi = seq.band_edges()
        vals = filter_function_numeric(seq, np.array([lo, hi]))
        assert np.all(vals <= 1e-4 * peak)

    def test_harmonic_structure(self):
        # odd harmonics carry secondary peaks, even harmonics vanish
        seq = ControlSequence("pdd", 5e-6, 32, 1.0)
        w1 = np.pi / seq.tau
        f = filter_function_numeric(seq, np.array([w1, 2 * w1, 3 * w1, 5 * w1]))
        assert f[1] <= 1e-10 * f[0]
        assert f[2] == pytest.approx(f[0] / 9.0, rel=1e-6)
        assert f[3] == pytest.approx(f[0] / 25.0, rel=1e-6)

    @pytest.mark.parametrize("protocol", ["pdd", "cp"])
    @pytest.mark.parametrize("tau", [1e-6, 2.37e-6, 5e-6])
    def test_parseval(self, protocol, tau):
        seq = ControlSequence(protocol, tau, 32, 1.0)
        grid = parseval_grid(seq)
        f = filter_function_numeric(seq, grid)
        two_sided = 2.0 * np.trapezoid(f, dx=grid.delta_omega)
        expected = seq.amplitude**2 * seq.n_flips * seq.tau
        assert two_sided == pytest.approx(expected, rel=5e-3)


class TestBodDesign:
    def test_counts_and_last_tau(self):
        d3 = design_bod(5e-6, 0.5, 32, 3)
        assert len(d3) == 17
        assert 1.75e-6 <= d3.taus[-1] <= 1.82e-6
        d5 = design_bod(5e-6, 0.5, 32, 5)
        assert len(d5) == 25
        assert 1.04e-6 <= d5.taus[-1] <= 1.12e-6

    def test_ratio_between_consecutive_taus(self):
        d = design_bod(5e-6, 0.5, 32, 3)
        ratios = np.array(d.taus[1:]) / np.array(d.taus[:-1])
        assert np.allclose(ratios, d.ratio, rtol=1e-14)

    def test_band_edge_recursion_identity(self):
        # (1 - 2/M) pi/tau_{n+1} = (1 + 2/M - 4 eps/M) pi/tau_n
        for eps in (0.0, 0.25, 0.5, 0.75):
            d = bod_tau_sequence(5e-6, eps, 32, 12)
            m = d.n_flips
            lhs = (1 - 2 / m) * np.pi / np.array(d.taus[1:])
            rhs = (1 + 2 / m - 4 * eps / m) * np.pi / np.array(d.taus[:-1])
            assert np.allclose(lhs, rhs, rtol=1e-12)

    def test_zero_overlap_bands_touch(self):
        d = design_bod(5e-6, 0.0, 32, 3)
        m = d.n_flips
        upper = (1 + 2 / m) * np.pi / np.array(d.taus[:-1])
        lower = (1 - 2 / m) * np.pi / np.array(d.taus[1:])
        assert np.allclose(upper, lower, rtol=1e-12)

    def test_validation(self):
        with pytest.raises(ValueError):
            design_bod(5e-6, 1.0, 32, 3)   # non-terminating recursion
        with pytest.raises(ValueError):
            design_bod(5e-6, 0.5, 12, 3)   # not a power of two
        with pytest.raises(ValueError):
            design_bod(5e-6, 0.5, 32, 4)   # even harmonics are nulls
        with pytest.raises(ValueError):
            bod_tau_sequence(5e-6, 0.5, 32, 0)

    def test_scaled_amplitude(self):
        assert scaled_amplitude(5e-6, 5e-6, 2.0) == 2.0
        assert scaled_amplitude(2.5e-6, 5e-6, 2.0) == 4.0
        with pytest.raises(ValueError):
            scaled_amplitude(0.0, 5e-6, 1.0)

    def test_scaled_peaks_equal(self):
        d3 = design_bod(5e-6, 0.5, 32, 3)
        grid = FrequencyGrid(omega_max=2.2e6, delta_omega=1e3)
        peaks = []
        for seq in bod_sequences(d3, 1.0, scale_amplitudes=True):
            peaks.append(filter_function_numeric(seq, grid).max())
        peaks = np.array(peaks)
        assert peaks.max() / peaks.min() < 1.02


class TestFilterBank:
    def make_bank(self, n=4, protocol="pdd"):
        seqs = [ControlSequence(protocol, float(t), 32, 1.0)
                for t in np.linspace(2e-6, 4e-6, n)]
        grid = FrequencyGrid(omega_max=2.2e6, delta_omega=6e3)
        return build_filter_bank(seqs, grid)

    def test_single_filter(self):
        seq = ControlSequence("pdd", 3e-6, 32, 1.0)
        grid = FrequencyGrid(omega_max=1.3e6, delta_omega=3e3)
        bank = build_filter_bank([seq], grid)
        assert bank.gramian.shape == (1, 1)
        assert bank.gramian[0, 0] > 0

    def test_duplicate_sequences_rank_one(self):
        seq = ControlSequence("pdd", 3e-6, 32, 1.0)
        grid = FrequencyGrid(omega_max=1.3e6, delta_omega=3e3)
        bank = build_filter_bank([seq, seq], grid)
        lam = np.linalg.eigvalsh(bank.gramian)
        assert lam[0] / lam[1] <= 1e-8

    def test_gramian_matches_quadrature_oracle(self):
        bank = self.make_bank()
        for n in range(bank.size):
            for m in range(bank.size):
                assert bank.gramian[n, m] == pytest.approx(
                    gramian_entry(bank, n, m), rel=1e-12)

    def test_gramian_exactly_symmetric_and_psd(self):
        bank = self.make_bank(n=6, protocol="cp")
        assert np.array_equal(bank.gramian, bank.gramian.T)
        lam = np.linalg.eigvalsh(bank.gramian)
        assert lam[0] >= -1e-9 * lam[-1]

    def test_pdd32_full_rank_but_ill_conditioned(self):
        seqs = [ControlSequence("pdd", float(t), 32, 1.0)
                for t in np.linspace(1e-6, 5e-6, 32)]
        grid = FrequencyGrid(omega_max=3.6e6, delta_omega=6e3)
        bank = build_filter_bank(seqs, grid)
        lam = np.linalg.eigvalsh(bank.gramian)
        assert np.sum(lam > 1e-12 * lam[-1]) == 32
        assert lam[-1] / lam[0] > 1e2

    def test_refuses_short_grid(self):
        seqs = [ControlSequence("pdd", 3e-6, 32, 1.0)]
        grid = FrequencyGrid(omega_max=1.1e6, delta_omega=3e3)  # < second null
        with pytest.raises(GridCoverageError):
            build_filter_bank(seqs, grid)

    def test_refuses_coarse_grid(self):
        seqs = [ControlSequence("pdd", 3e-6, 32, 1.0)]
        grid = FrequencyGrid(omega_max=1.3e6, delta_omega=2e4)  # < 8 steps per lobe
        with pytest.raises(GridCoverageError):
            build_filter_bank(seqs, grid)

    def test_empty_refused(self):
        grid = FrequencyGrid(omega_max=1.3e6, delta_omega=3e3)
        with pytest.raises(ValueError):
            build_filter_bank([], grid)
