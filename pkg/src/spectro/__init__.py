"""Noise spectral density reconstruction from filter-function overlap data."""

__version__ = "0.1.0"

from .spectra import (FrequencyGrid, GaussianComponent, SpectralDensity,
                      integrate_on_grid)
from .controls import (BodDesign, ControlSequence, FilterBank, bod_sequences,
                       bod_tau_sequence, build_filter_bank, control_signal,
                       design_bod, filter_function_analytic_pdd,
                       filter_function_numeric, scaled_amplitude)
from .estimator import (EstimationResult, TruncationPolicy, clip_negative,
                        solve_ls, solve_nnls, solve_pinv)
from .noisesim import (MeasurementSet, NoiseModel, chi_exact, chi_montecarlo,
                       generate_realization)
from .metrics import fidelity, mse

__all__ = [
    "__version__",
    "FrequencyGrid", "GaussianComponent", "SpectralDensity", "integrate_on_grid",
    "BodDesign", "ControlSequence", "FilterBank", "bod_sequences",
    "bod_tau_sequence", "build_filter_bank", "control_signal", "design_bod",
    "filter_function_analytic_pdd", "filter_function_numeric", "scaled_amplitude",
    "EstimationResult", "TruncationPolicy", "clip_negative",
    "solve_ls", "solve_nnls", "solve_pinv",
    "MeasurementSet", "NoiseModel", "chi_exact", "chi_montecarlo",
    "generate_realization",
    "fidelity", "mse",
]
