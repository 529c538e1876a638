"""True spectral densities, frequency grids and quadrature.

All frequencies in this package are angular (rad/s). Spectral densities
are two-sided and even, S(-w) = S(|w|), so that the total power of a
Gaussian component equals its nominal power over the full axis.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

TWO_PI = 2.0 * np.pi


class GridCoverageError(ValueError):
    """A frequency grid does not cover what the operation needs."""


@dataclass(frozen=True)
class FrequencyGrid:
    """Uniform one-sided grid w_k = k*delta_omega, k = 0..size-1.

    The grid always starts at 0 and extends at least to omega_max
    (size = ceil(omega_max/delta_omega) + 1, so the last sample may
    overshoot omega_max by up to one step).
    """

    omega_max: float
    delta_omega: float
    _values: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.delta_omega <= 0:
            raise ValueError(f"delta_omega must be > 0, got {self.delta_omega}")
        if self.omega_max <= 0:
            raise ValueError(f"omega_max must be > 0, got {self.omega_max}")
        size = int(np.ceil(self.omega_max / self.delta_omega)) + 1
        if size < 2:
            raise ValueError("grid must have at least 2 samples")
        values = np.arange(size, dtype=float) * self.delta_omega
        values.setflags(write=False)
        object.__setattr__(self, "_values", values)

    @property
    def size(self) -> int:
        return self._values.size

    @property
    def values(self) -> np.ndarray:
        """Read-only sample array; do not mutate."""
        return self._values

    @property
    def last(self) -> float:
        return float(self._values[-1])

    def trapezoid_weights(self) -> np.ndarray:
        w = np.full(self.size, self.delta_omega)
        w[0] = w[-1] = 0.5 * self.delta_omega
        return w


@dataclass(frozen=True)
class GaussianComponent:
    """One spectral line: power (Hz^2), center and width (rad/s)."""

    power: float
    center: float
    width: float

    def __post_init__(self):
        for name in ("power", "center", "width"):
            if getattr(self, name) <= 0:
                raise ValueError(f"GaussianComponent.{name} must be > 0")


class SpectralDensity:
    """Two-sided PSD, either a Gaussian mixture or tabulated samples.

    The parametric form evaluates to
        S(w) = sum_i  N_i / (2*sqrt(2*pi*sigma_i^2)) * exp(-(|w|-nu_i)^2/(2*sigma_i^2))
    so that each component integrates to N_i over the full axis.
    """

    def __init__(self, components=None, table=None):
        if (components is None) == (table is None):
            raise ValueError("provide exactly one of components or table")
        self.components = tuple(components) if components is not None else None
        if table is not None:
            grid, samples = table
            samples = np.asarray(samples, dtype=float)
            if samples.shape != (grid.size,):
                raise ValueError(
                    f"tabulated samples length {samples.shape} does not match grid size {grid.size}"
                )
            if np.any(samples < 0):
                raise ValueError("tabulated samples must be >= 0")
            self.table = (grid, samples)
        else:
            self.table = None

    @classmethod
    def from_components(cls, *components: GaussianComponent) -> "SpectralDensity":
        return cls(components=components)

    @classmethod
    def gaussian(cls, power: float, center: float, width: float) -> "SpectralDensity":
        return cls(components=(GaussianComponent(power, center, width),))

    @classmethod
    def from_table(cls, grid: FrequencyGrid, samples) -> "SpectralDensity":
        return cls(table=(grid, samples))

    @classmethod
    def from_csv(cls, path) -> "SpectralDensity":
        """Load a tabulated PSD from two-column CSV `omega_rad_s,psd_hz2_s`."""
        omegas, values = [], []
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            if [h.strip() for h in header] != ["omega_rad_s", "psd_hz2_s"]:
                raise ValueError(f"unexpected PSD CSV header: {header}")
            for row in reader:
                if not row:
                    continue
                omegas.append(float(row[0]))
                values.append(float(row[1]))
        omegas = np.asarray(omegas)
        if omegas.size < 2:
            raise ValueError("PSD CSV needs at least two rows")
        steps = np.diff(omegas)
        if omegas[0] != 0.0 or np.any(np.abs(steps - steps[0]) > 1e-9 * steps[0]):
            raise ValueError("PSD CSV must sample w = 0, dw, 2*dw, ... uniformly from 0")
        grid = FrequencyGrid(omega_max=float(omegas[-1]), delta_omega=float(steps[0]))
        return cls.from_table(grid, values)

    @property
    def is_parametric(self) -> bool:
        return self.components is not None

    def evaluate(self, omega) -> np.ndarray:
        """S(|omega|); accepts scalars or arrays, always >= 0."""
        w = np.abs(np.asarray(omega, dtype=float))
        if self.is_parametric:
            out = np.zeros_like(w)
            for c in self.components:
                norm = c.power / (2.0 * np.sqrt(TWO_PI * c.width**2))
                out += norm * np.exp(-((w - c.center) ** 2) / (2.0 * c.width**2))
            return out
        grid, samples = self.table
        if np.any(w > grid.last * (1 + 1e-12)):
            raise GridCoverageError(
                f"tabulated spectrum queried at |w| up to {w.max():.6g}, "
                f"table ends at {grid.last:.6g}"
            )
        return np.interp(w, grid.values, samples)

    def autocorrelation(self, t) -> np.ndarray:
        """g(t) = (1/2pi) * int S(w) e^{iwt} dw in closed form.

        Valid for the Gaussian-mixture form under nu >> sigma, where the
        negative-frequency mirror overlap is negligible:
            g(t) = sum_i (N_i/2pi) * exp(-sigma_i^2 t^2 / 2) * cos(nu_i t)
        """
        if not self.is_parametric:
            raise ValueError("autocorrelation is closed-form for parametric spectra only; "
                             "use integrate_on_grid for tabulated ones")
        t = np.asarray(t, dtype=float)
        out = np.zeros_like(t)
        for c in self.components:
            out += (c.power / TWO_PI) * np.exp(-(c.width * t) ** 2 / 2.0) * np.cos(c.center * t)
        return out

    def total_power(self) -> float:
        """int S(w) dw over the full axis (Hz^2)."""
        if self.is_parametric:
            return float(sum(c.power for c in self.components))
        grid, samples = self.table
        return 2.0 * float(np.trapezoid(samples, grid.values))

    def support_edge(self, rel: float = 1e-6) -> float:
        """Frequency above which S stays below rel * max(S)."""
        if self.is_parametric:
            return max(c.center + 6.0 * c.width for c in self.components)
        return self.table[0].last


def integrate_on_grid(values, grid: FrequencyGrid, two_sided: bool = False) -> float:
    """Trapezoid quadrature of samples over [0, grid end].

    With two_sided=True the result is doubled (even-integrand convention).
    """
    values = np.asarray(values, dtype=float)
    if values.shape != (grid.size,):
        raise ValueError(f"got {values.shape[0] if values.ndim else 'scalar'} samples "
                         f"for a grid of size {grid.size}")
    out = float(np.trapezoid(values, dx=grid.delta_omega))
    return 2.0 * out if two_sided else out
