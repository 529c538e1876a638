"""Piecewise-constant control sequences, their filter functions and the
bandwidth-overlap design of a filter set.

A sequence starts at +A and flips sign at each flip time; the filter
function is F(w) = |FT of the control|^2 / 2pi, computed exactly from
the closed form of each constant segment (no time discretization).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .spectra import TWO_PI, FrequencyGrid, GridCoverageError, integrate_on_grid

PDD = "pdd"
CP = "cp"
PROTOCOLS = (PDD, CP)


def _is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class ControlSequence:
    """A PDD or CP sequence with n_flips sign flips, interpulse time tau.

    Flip times: PDD t_j = j*tau, CP t_j = (2j-1)*tau/2, j = 1..n_flips.
    The signal lives on [0, T] with T = n_flips*tau, so a PDD sequence is
    exactly n_flips/2 full square periods (its final flip sits at t = T
    and carries no segment).
    """

    protocol: str
    tau: float
    n_flips: int
    amplitude: float = 1.0

    def __post_init__(self):
        if self.protocol not in PROTOCOLS:
            raise ValueError(f"protocol must be one of {PROTOCOLS}, got {self.protocol!r}")
        if self.tau <= 0:
            raise ValueError("tau must be > 0")
        if self.amplitude <= 0:
            raise ValueError("amplitude must be > 0")
        if self.n_flips < 2:
            raise ValueError("n_flips must be >= 2")
        if self.protocol == PDD and self.n_flips % 2:
            raise ValueError("PDD needs an even flip count for a zero-mean signal")

    @property
    def duration(self) -> float:
        return self.n_flips * self.tau

    def flip_times(self) -> np.ndarray:
        j = np.arange(1, self.n_flips + 1, dtype=float)
        if self.protocol == PDD:
            return j * self.tau
        return (2.0 * j - 1.0) * self.tau / 2.0

    def main_peak(self) -> float:
        """Center of the dominant filter lobe, pi/tau."""
        return np.pi / self.tau

    def band_edges(self) -> tuple[float, float]:
        """Nulls bracketing the main lobe, (1 -/+ 2/M) * pi/tau."""
        m = self.n_flips
        return ((1.0 - 2.0 / m) * np.pi / self.tau, (1.0 + 2.0 / m) * np.pi / self.tau)

    def _half_step_indices(self) -> np.ndarray:
        """Segment breakpoints as integer multiples of tau/2 (0 .. 2*n_flips)."""
        if self.protocol == PDD:
            inner = 2 * np.arange(1, self.n_flips)  # flip at T carries no segment
        else:
            inner = 2 * np.arange(1, self.n_flips + 1) - 1
        return np.concatenate(([0], inner, [2 * self.n_flips]))


def control_signal(seq: ControlSequence, t) -> np.ndarray:
    """Control value at time t: +/-A with sign (-1)^(#flips <= t)."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0) or np.any(t > seq.duration * (1 + 1e-12)):
        raise ValueError(f"t outside [0, {seq.duration:.6g}]")
    flips = np.searchsorted(seq.flip_times(), t, side="right")
    return seq.amplitude * (-1.0) ** flips


def fourier_transform(seq: ControlSequence, omega) -> np.ndarray:
    """FT of the control, sum over segments of A_s (e^{-iw ta} - e^{-iw tb}) / (iw).

    Breakpoints are exact multiples of tau/2 for both protocols, so the
    phase factors are built from cumulative powers of z = e^{-i w tau/2}
    rather than one exp per breakpoint.
    """
    w = np.asarray(omega, dtype=float)
    scalar = w.ndim == 0
    w = np.atleast_1d(w)
    k = seq._half_step_indices()
    signs = seq.amplitude * (-1.0) ** np.arange(k.size - 1)

    out = np.empty(w.shape, dtype=complex)
    zero = w == 0.0
    if np.any(zero):
        out[zero] = signs @ np.diff(k) * (seq.tau / 2.0)
    wn = w[~zero]
    if wn.size:
        z = np.exp(-1j * wn * (seq.tau / 2.0))
        acc = np.zeros(wn.size, dtype=complex)
        cur = np.ones(wn.size, dtype=complex)  # z^k[0], k[0] = 0
        # telescoped segment sum: s_0 - s_last*z^k_last + sum of flips (s_j - s_{j-1}) z^k_j
        acc += signs[0] * cur
        for idx in range(1, k.size):
            step = k[idx] - k[idx - 1]
            if step == 1:
                cur = cur * z
            elif step == 2:
                cur = cur * (z * z)
            else:  # pragma: no cover - protocols only produce steps of 1 or 2
                cur = cur * z**step
            if idx < k.size - 1:
                acc += (signs[idx] - signs[idx - 1]) * cur
            else:
                acc -= signs[-1] * cur
        out[~zero] = acc / (1j * wn)
    return out[0] if scalar else out


def filter_function_numeric(seq: ControlSequence, grid) -> np.ndarray:
    """F(w) = |FT of control|^2 / 2pi on the grid (or a raw omega array)."""
    omegas = grid.values if isinstance(grid, FrequencyGrid) else np.asarray(grid, float)
    ft = fourier_transform(seq, omegas)
    return (ft.real**2 + ft.imag**2) / TWO_PI


def filter_function_analytic_pdd(seq: ControlSequence, grid) -> np.ndarray:
    """Closed form for PDD with a power-of-two flip count:

    F(w) = |A tau M Sinc(w tau/2) sin(w tau/2) prod_k cos(2^k w tau)|^2 / 2pi,
    k = 0 .. log2(M)-2.
    """
    if seq.protocol != PDD:
        raise ValueError("analytic form applies to PDD sequences only")
    m = seq.n_flips
    if not _is_power_of_two(m) or m < 4:
        raise ValueError(f"analytic PDD form needs a power-of-two flip count >= 4, got {m}")
    omegas = grid.values if isinstance(grid, FrequencyGrid) else np.asarray(grid, float)
    x = omegas * seq.tau / 2.0
    sinc = np.ones_like(x)
    nz = x != 0
    sinc[nz] = np.sin(x[nz]) / x[nz]
    prod = np.ones_like(x)
    for k in range(int(np.log2(m)) - 1):
        prod = prod * np.cos(2**k * omegas * seq.tau)
    amp = seq.amplitude * seq.tau * m * sinc * np.sin(x) * prod
    return amp**2 / TWO_PI


def scaled_amplitude(tau_n: float, tau_1: float, a_c_1: float) -> float:
    """A_c^(n) = A_c^(1) * tau_1/tau_n, keeping the main-peak height constant."""
    if tau_n <= 0 or tau_1 <= 0 or a_c_1 <= 0:
        raise ValueError("scaled_amplitude arguments must be > 0")
    return a_c_1 * tau_1 / tau_n


@dataclass(frozen=True)
class BodDesign:
    """Interpulse times with a fixed bandwidth overlap between main peaks.

    Consecutive times obey tau_{n+1} = (M-2)/(M+2-4*eps) * tau_n, so the
    lower band edge of each filter sits at the (1-eps) fraction of the
    previous filter's upper band edge.
    """

    tau_1: float
    epsilon: float
    n_flips: int
    harmonic_cap: int | None
    taus: tuple[float, ...]

    @property
    def ratio(self) -> float:
        return (self.n_flips - 2.0) / (self.n_flips + 2.0 - 4.0 * self.epsilon)

    def __len__(self) -> int:
        return len(self.taus)


def _validate_bod_args(tau_1, epsilon, n_flips):
    if tau_1 <= 0:
        raise ValueError("tau_1 must be > 0")
    if not (0.0 <= epsilon < 1.0):
        raise ValueError(f"epsilon must lie in [0, 1); got {epsilon} "
                         "(epsilon = 1 makes the recursion non-terminating)")
    if not _is_power_of_two(n_flips) or n_flips < 4:
        raise ValueError(f"n_flips must be a power of two >= 4, got {n_flips}")


def bod_tau_sequence(tau_1: float, epsilon: float, n_flips: int, count: int) -> BodDesign:
    """The first `count` interpulse times of the overlap recursion."""
    _validate_bod_args(tau_1, epsilon, n_flips)
    if count < 1:
        raise ValueError("count must be >= 1")
    ratio = (n_flips - 2.0) / (n_flips + 2.0 - 4.0 * epsilon)
    taus = tuple(tau_1 * ratio**n for n in range(count))
    return BodDesign(tau_1, epsilon, n_flips, None, taus)


def design_bod(tau_1: float, epsilon: float, n_flips: int, harmonic_cap: int) -> BodDesign:
    """Run the overlap recursion until the filter band reaches the capped
    harmonic of the first filter.

    A filter is retained while its main-peak upper band edge
    (1 + 2/M) * pi/tau_n stays at or below the upper edge of the cap-th
    harmonic band of the first filter, (cap + 2/M) * pi/tau_1.
    """
    _validate_bod_args(tau_1, epsilon, n_flips)
    if harmonic_cap not in (3, 5):
        raise ValueError(f"harmonic_cap must be 3 or 5, got {harmonic_cap}")
    ratio = (n_flips - 2.0) / (n_flips + 2.0 - 4.0 * epsilon)
    edge_limit = (harmonic_cap + 2.0 / n_flips) / tau_1
    taus = []
    tau = tau_1
    while (1.0 + 2.0 / n_flips) / tau <= edge_limit * (1.0 + 1e-12):
        taus.append(tau)
        tau *= ratio
    return BodDesign(tau_1, epsilon, n_flips, harmonic_cap, tuple(taus))


def bod_sequences(design: BodDesign, amplitude_1: float = 1.0,
                  scale_amplitudes: bool = True) -> list[ControlSequence]:
    """PDD sequences realizing a BOD design, optionally with the
    1/tau amplitude scaling that equalizes main-peak heights."""
    seqs = []
    for tau in design.taus:
        a = scaled_amplitude(tau, design.tau_1, amplitude_1) if scale_amplitudes else amplitude_1
        seqs.append(ControlSequence(PDD, tau, design.n_flips, a))
    return seqs


@dataclass
class FilterBank:
    """Filter functions of N sequences sampled on a shared grid, plus the
    Gramian of their pairwise two-sided inner products."""

    sequences: tuple[ControlSequence, ...]
    grid: FrequencyGrid
    filters: np.ndarray = field(repr=False)  # (N, K)
    gramian: np.ndarray = field(repr=False)  # (N, N)

    def __post_init__(self):
        n = len(self.sequences)
        if self.filters.shape != (n, self.grid.size):
            raise ValueError("filters shape does not match sequences x grid")
        if self.gramian.shape != (n, n):
            raise ValueError("gramian must be N x N")
        if np.any(self.filters < 0):
            raise ValueError("filter samples must be >= 0")
        if not np.array_equal(self.gramian, self.gramian.T):
            raise ValueError("gramian must be exactly symmetric")
        eig = np.linalg.eigvalsh(self.gramian)
        if eig[-1] <= 0:
            raise ValueError("gramian has no positive eigenvalue")
        if eig[0] < -1e-9 * eig[-1]:
            raise ValueError(f"gramian is not numerically PSD (min eig {eig[0]:.3e})")

    @property
    def size(self) -> int:
        return len(self.sequences)


def build_filter_bank(sequences, grid: FrequencyGrid) -> FilterBank:
    """Sample every filter on the grid and assemble the Gramian.

    Refuses grids that stop short of any main peak's second null
    (1 + 4/M) * pi/tau, or that put fewer than 8 steps across any main
    lobe width 4*pi/(M*tau).
    """
    sequences = tuple(sequences)
    if not sequences:
        raise ValueError("need at least one sequence")
    for seq in sequences:
        second_null = (1.0 + 4.0 / seq.n_flips) * np.pi / seq.tau
        if grid.last < second_null:
            raise GridCoverageError(
                f"grid ends at {grid.last:.4g} rad/s, below the second null "
                f"{second_null:.4g} of the tau={seq.tau:.3g} filter")
        width = 4.0 * np.pi / (seq.n_flips * seq.tau)
        if width / grid.delta_omega < 8.0:
            raise GridCoverageError(
                f"grid step {grid.delta_omega:.4g} puts "
                f"{width / grid.delta_omega:.1f} < 8 steps across the "
                f"tau={seq.tau:.3g} main lobe (width {width:.4g})")
    filters = np.array([filter_function_numeric(seq, grid) for seq in sequences])
    weighted = filters * grid.trapezoid_weights()
    gram = 2.0 * (weighted @ filters.T)
    # one value per unordered pair: mirror the upper triangle
    iu = np.triu_indices(len(sequences), k=1)
    gram[(iu[1], iu[0])] = gram[iu]
    return FilterBank(sequences=sequences, grid=grid, filters=filters, gramian=gram)


def gramian_entry(bank: FilterBank, n: int, m: int) -> float:
    """Reference inner product, integrate_on_grid(F_n * F_m, two-sided)."""
    return integrate_on_grid(bank.filters[n] * bank.filters[m], bank.grid, two_sided=True)
