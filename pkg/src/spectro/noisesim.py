"""Stationary noise synthesis and simulated overlap measurements.

Realizations are harmonic superpositions with deterministic amplitudes
and random phases, so the target autocorrelation holds in expectation
and every draw is reproducible from (seed, draw_index).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .controls import FilterBank, control_signal
from .spectra import TWO_PI, FrequencyGrid, GridCoverageError, SpectralDensity

SYNTHESIS_STEP = TWO_PI * 1e3  # rad/s, dense next to the narrowest spectra used here


class NyquistError(ValueError):
    """Time step too coarse for the highest synthesized frequency."""


@dataclass(frozen=True)
class NoiseModel:
    """A target spectral density plus the harmonic synthesis grid and seed."""

    sd: SpectralDensity
    synthesis_grid: FrequencyGrid
    seed: int

    def __post_init__(self):
        s = self.sd.evaluate(self.synthesis_grid.values)
        peak = float(s.max())
        if peak <= 0:
            return  # zero spectrum synthesizes to silence; nothing to cover
        if float(s[-1]) >= 1e-6 * peak:
            raise GridCoverageError(
                f"synthesis grid ends where S is still {s[-1] / peak:.2e} of its "
                "peak; extend omega_max past the spectral support")

    @classmethod
    def for_density(cls, sd: SpectralDensity, seed: int) -> "NoiseModel":
        grid = FrequencyGrid(omega_max=sd.support_edge(), delta_omega=SYNTHESIS_STEP)
        return cls(sd=sd, synthesis_grid=grid, seed=seed)

    def mode_amplitudes(self) -> np.ndarray:
        """Per-mode cosine amplitudes sqrt(2 * S(w_k) * dw / pi).

        The factor folds the two-sided density onto the one-sided grid, so
        the synthesized variance matches g(0) = total power / 2pi.
        """
        s = self.sd.evaluate(self.synthesis_grid.values)
        return np.sqrt(2.0 * s * self.synthesis_grid.delta_omega / np.pi)

    def phases(self, draw_index: int, count: int | None = None) -> np.ndarray:
        rng = np.random.default_rng([self.seed, draw_index])
        n = self.synthesis_grid.size if count is None else count
        return rng.uniform(0.0, TWO_PI, size=n)


def generate_realization(model: NoiseModel, times, draw_index: int) -> np.ndarray:
    """One zero-mean realization sum_k c_k cos(w_k t + phi_k) at the times."""
    times = np.asarray(times, dtype=float)
    amps = model.mode_amplitudes()
    phi = model.phases(draw_index)
    return np.cos(np.outer(times, model.synthesis_grid.values) + phi) @ amps


def default_time_step(tau_min: float, model: NoiseModel) -> float:
    """min(tau_min/50, pi / (5 * highest synthesized frequency))."""
    return min(tau_min / 50.0, np.pi / (5.0 * model.synthesis_grid.last))


@dataclass
class MeasurementSet:
    """The chi vector, exact or Monte-Carlo, with its per-realization data."""

    chi: np.ndarray
    mode: str  # "exact" | "montecarlo"
    seed: int = 0
    samples_per_filter: int = 0
    per_sample: np.ndarray = field(default=None, repr=False)  # (N, samples)

    def __post_init__(self):
        self.chi = np.asarray(self.chi, dtype=float)
        if self.mode not in ("exact", "montecarlo"):
            raise ValueError(f"mode must be exact or montecarlo, got {self.mode!r}")
        if self.mode == "exact":
            if self.samples_per_filter != 0:
                raise ValueError("exact mode carries no samples")
            if self.per_sample is None:
                self.per_sample = np.empty((self.chi.size, 0))
        else:
            self.per_sample = np.asarray(self.per_sample, dtype=float)
            if self.per_sample.shape != (self.chi.size, self.samples_per_filter):
                raise ValueError("per_sample must be chi-length x samples")
            if np.any(self.per_sample < 0):
                raise ValueError("per-sample overlap values are squares, must be >= 0")

    def to_json(self) -> str:
        payload = {
            "mode": self.mode,
            "seed": self.seed,
            "samples": self.samples_per_filter,
            "chi": self.chi.tolist(),
        }
        if self.mode == "montecarlo":
            payload["per_sample"] = self.per_sample.tolist()
        return json.dumps(payload)

    @classmethod
    def from_json(cls, text: str) -> "MeasurementSet":
        payload = json.loads(text)
        per_sample = payload.get("per_sample")
        return cls(
            chi=np.asarray(payload["chi"], dtype=float),
            mode=payload["mode"],
            seed=int(payload["seed"]),
            samples_per_filter=int(payload["samples"]),
            per_sample=None if per_sample is None else np.asarray(per_sample, dtype=float),
        )


def chi_exact(sd: SpectralDensity, bank: FilterBank) -> MeasurementSet:
    """chi_n = two-sided quadrature of S * F_n on the bank grid."""
    omegas = bank.grid.values
    s = sd.evaluate(omegas)
    if sd.is_parametric:
        peak = float(s.max())
        if peak > 0 and float(sd.evaluate(bank.grid.last)) >= 1e-6 * peak:
            raise GridCoverageError(
                "bank grid ends inside the spectral support; chi quadrature "
                "would truncate the overlap integrals")
    weights = bank.grid.trapezoid_weights()
    chi = 2.0 * (bank.filters * weights) @ s
    return MeasurementSet(chi=chi, mode="exact")


@dataclass
class ControlProjections:
    """Per-filter Fourier projections of the controls onto the synthesis
    modes, precomputed so repeated Monte-Carlo calls skip the time grids.

    v[n, k] holds the trapezoid-weighted sum over the time grid of
    control_n(t) * exp(i w_k t); a realization's overlap is then
    y = sum_k c_k Re(e^{i phi_k} v[n, k]), identical arithmetic to
    integrating control * realization on the time grid.
    """

    bank: FilterBank
    model: NoiseModel
    dt: float
    v: np.ndarray  # (N, K_syn) complex
    amplitudes: np.ndarray  # (K_syn,)


def prepare_projections(model: NoiseModel, bank: FilterBank,
                        dt: float | None = None) -> ControlProjections:
    taus = [seq.tau for seq in bank.sequences]
    step = default_time_step(min(taus), model) if dt is None else float(dt)
    if step > np.pi / model.synthesis_grid.last:
        raise NyquistError(
            f"time step {step:.3g} s undersamples the synthesis grid "
            f"(Nyquist limit {np.pi / model.synthesis_grid.last:.3g} s)")
    omegas = model.synthesis_grid.values
    rows = []
    for seq in bank.sequences:
        n_steps = int(np.ceil(seq.duration / step))
        tg = np.linspace(0.0, seq.duration, n_steps + 1)
        weights = np.full(tg.size, tg[1] - tg[0])
        weights[0] = weights[-1] = 0.5 * (tg[1] - tg[0])
        values = control_signal(seq, tg)
        rows.append((values * weights) @ np.exp(1j * np.outer(tg, omegas)))
    return ControlProjections(
        bank=bank, model=model, dt=step, v=np.array(rows),
        amplitudes=model.mode_amplitudes(),
    )


def chi_montecarlo(model: NoiseModel, bank: FilterBank, samples: int,
                   dt: float | None = None, draw_offset: int = 0,
                   projections: ControlProjections | None = None) -> MeasurementSet:
    """Estimate chi by averaging squared control-noise overlaps.

    Realization (n, r) uses draw index draw_offset + n*samples + r, fresh
    per filter; y is the trapezoid quadrature of control * realization
    over the sequence duration and per_sample[n, r] = y^2.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    if projections is None:
        projections = prepare_projections(model, bank, dt)
    elif projections.bank is not bank or projections.model is not model:
        raise ValueError("projections were prepared for a different bank or model")
    weighted = projections.amplitudes * projections.v  # (N, K)
    n_filters = bank.size
    per_sample = np.empty((n_filters, samples))
    for n in range(n_filters):
        phi = np.stack([
            model.phases(draw_offset + n * samples + r) for r in range(samples)
        ])
        y = np.cos(phi) @ weighted[n].real - np.sin(phi) @ weighted[n].imag
        per_sample[n] = y * y
    return MeasurementSet(
        chi=per_sample.mean(axis=1),
        mode="montecarlo",
        seed=model.seed,
        samples_per_filter=samples,
        per_sample=per_sample,
    )
