"""Reconstruction quality measures."""

from __future__ import annotations

import numpy as np

from .spectra import FrequencyGrid, integrate_on_grid

COSINE = "cosine"
LITERAL = "literal"


def mse(s_true, s_hat, grid: FrequencyGrid) -> float:
    """Two-sided quadrature of (S - S_hat)^2."""
    s_true = np.asarray(s_true, dtype=float)
    s_hat = np.asarray(s_hat, dtype=float)
    if s_true.shape != s_hat.shape:
        raise ValueError("spectra must have equal lengths")
    return integrate_on_grid((s_true - s_hat) ** 2, grid, two_sided=True)


def fidelity(s_true, s_hat, grid: FrequencyGrid, convention: str = COSINE) -> float:
    """Overlap score between the true and reconstructed spectra.

    cosine (default): int S*S_hat / sqrt(int S^2 * int S_hat^2), a
    dimensionless score in [0, 1] for nonnegative inputs, 1 iff the
    shapes match up to scale. An identically zero S_hat scores 0.

    literal: int S*S_hat / (int S * int S_hat), the raw printed ratio;
    dimensionful, kept for auditability.
    """
    s_true = np.asarray(s_true, dtype=float)
    s_hat = np.asarray(s_hat, dtype=float)
    if s_true.shape != s_hat.shape:
        raise ValueError("spectra must have equal lengths")
    if not np.any(s_true):
        raise ValueError("true spectrum is identically zero")
    cross = integrate_on_grid(s_true * s_hat, grid, two_sided=True)
    if convention == COSINE:
        denom = np.sqrt(
            integrate_on_grid(s_true**2, grid, two_sided=True)
            * integrate_on_grid(s_hat**2, grid, two_sided=True)
        )
        return 0.0 if denom == 0 else float(cross / denom)
    if convention == LITERAL:
        denom = integrate_on_grid(s_true, grid, two_sided=True) * integrate_on_grid(
            s_hat, grid, two_sided=True
        )
        if denom == 0:
            raise ValueError("literal fidelity undefined for a zero-integral estimate")
        return float(cross / denom)
    raise ValueError(f"unknown fidelity convention {convention!r}")
