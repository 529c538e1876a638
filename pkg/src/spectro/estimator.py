"""Spectrum estimators: Gramian least squares with truncated
eigendecomposition, the minimum-norm pseudoinverse baseline, and
non-negative least squares.

All three express the estimate as a filter combination S_hat = F^T a;
they differ in how the coefficient vector a is obtained from the
measurement vector chi.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .controls import FilterBank
from .spectra import FrequencyGrid

# eigenvalues below this fraction of the largest count as numerically zero
SINGULAR_RTOL = 1e-12


class SingularGramianError(RuntimeError):
    """Every Gramian eigenvalue sits below the singular threshold."""


class ConvergenceError(RuntimeError):
    """Active-set iteration cap exceeded; carries the best iterate."""

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


@dataclass(frozen=True)
class TruncationPolicy:
    """How many Gramian eigenvalues the solver keeps.

    kind 'none' keeps the full numerical rank; 'drop_smallest' removes r
    eigenvalues from it; 'keep_fraction' keeps floor(f*N) of the largest
    (at least one, never more than the numerical rank); 'threshold'
    keeps eigenvalues >= rel * lambda_max.
    """

    kind: str = "none"
    value: float = 0.0

    _KINDS = ("none", "drop_smallest", "keep_fraction", "threshold")

    def __post_init__(self):
        if self.kind not in self._KINDS:
            raise ValueError(f"unknown truncation kind {self.kind!r}")
        if self.kind == "drop_smallest":
            if self.value < 0 or self.value != int(self.value):
                raise ValueError("drop_smallest needs a count >= 0")
        elif self.kind == "keep_fraction":
            if not 0.0 < self.value <= 1.0:
                raise ValueError("keep_fraction needs f in (0, 1]")
        elif self.kind == "threshold":
            if not 0.0 < self.value < 1.0:
                raise ValueError("threshold needs a relative level in (0, 1)")

    @classmethod
    def none(cls) -> "TruncationPolicy":
        return cls("none")

    @classmethod
    def drop_smallest(cls, r: int) -> "TruncationPolicy":
        return cls("drop_smallest", float(r))

    @classmethod
    def keep_fraction(cls, f: float) -> "TruncationPolicy":
        return cls("keep_fraction", f)

    @classmethod
    def threshold(cls, rel: float) -> "TruncationPolicy":
        return cls("threshold", rel)

    @classmethod
    def parse(cls, text: str) -> "TruncationPolicy":
        """Parse 'none', 'drop_smallest:3', 'keep_fraction:0.5' or 'threshold:1e-6'."""
        kind, _, arg = text.strip().partition(":")
        kind = kind.strip().lower()
        if kind == "none":
            return cls.none()
        if not arg:
            raise ValueError(f"truncation {kind!r} needs an argument, e.g. {kind}:3")
        if kind == "drop_smallest":
            return cls.drop_smallest(int(arg))
        if kind == "keep_fraction":
            return cls.keep_fraction(float(arg))
        if kind == "threshold":
            return cls.threshold(float(arg))
        raise ValueError(f"unknown truncation policy {text!r}")

    def retained(self, eigenvalues: np.ndarray) -> int:
        """Number of retained eigenvalues, given them sorted descending."""
        lam_max = eigenvalues[0]
        n_rank = int(np.sum(eigenvalues > SINGULAR_RTOL * lam_max))
        if self.kind == "none":
            return n_rank
        if self.kind == "drop_smallest":
            r = int(self.value)
            if r >= eigenvalues.size:
                raise ValueError(f"cannot drop {r} of {eigenvalues.size} eigenvalues")
            return max(n_rank - r, 1)
        if self.kind == "keep_fraction":
            keep = max(int(self.value * eigenvalues.size), 1)
            return min(keep, n_rank)
        return max(int(np.sum(eigenvalues >= self.value * lam_max)), 1)


@dataclass
class EstimationResult:
    """Coefficients a, the reconstruction S_hat = F^T a on the bank grid,
    and the Gramian eigen-spectrum diagnostics behind the solve."""

    coefficients: np.ndarray
    spectrum: np.ndarray
    eigenvalues: np.ndarray
    effective_rank: int
    method: str
    clipped: bool = False
    kkt_ok: bool | None = None


def _eigh_descending(gram: np.ndarray):
    lam, u = np.linalg.eigh(gram)
    lam, u = lam[::-1], u[:, ::-1]
    if lam[0] <= 0 or np.all(lam <= SINGULAR_RTOL * lam[0]):
        raise SingularGramianError("all Gramian eigenvalues below the singular threshold")
    return lam, u


def solve_ls(bank: FilterBank, chi, policy: TruncationPolicy | None = None) -> EstimationResult:
    """Least squares through the Gramian eigendecomposition.

    a = U diag(1/lambda_k for retained k, else 0) U^T chi; truncation per
    policy on the descending eigenvalues.
    """
    policy = policy or TruncationPolicy.none()
    chi = np.asarray(chi, dtype=float)
    if chi.shape != (bank.size,):
        raise ValueError(f"chi has shape {chi.shape}, bank holds {bank.size} filters")
    lam, u = _eigh_descending(bank.gramian)
    r = policy.retained(lam)
    inv = np.zeros_like(lam)
    inv[:r] = 1.0 / lam[:r]
    coeff = u @ (inv * (u.T @ chi))
    return EstimationResult(
        coefficients=coeff,
        spectrum=bank.filters.T @ coeff,
        eigenvalues=lam,
        effective_rank=r,
        method="LS",
    )


def solve_pinv(bank: FilterBank, chi, grid: FrequencyGrid) -> EstimationResult:
    """Minimum-norm least-squares solution of the discretized linear system,
    computed through the SVD of the quadrature-weighted filter matrix.

    With A = sqrt(w) F^T (w the two-sided trapezoid weights) and
    A = V diag(s) U^T, the coefficient vector is a = U diag(1/s^2) U^T chi
    and the spectrum estimate is F^T a, i.e. a filter combination again.
    """
    if grid is not bank.grid and not (
        grid.omega_max == bank.grid.omega_max and grid.delta_omega == bank.grid.delta_omega
    ):
        raise ValueError("solve_pinv must be evaluated on the bank's own grid")
    chi = np.asarray(chi, dtype=float)
    if chi.shape != (bank.size,):
        raise ValueError(f"chi has shape {chi.shape}, bank holds {bank.size} filters")
    weights = 2.0 * bank.grid.trapezoid_weights()
    a_mat = np.sqrt(weights)[:, None] * bank.filters.T  # (K, N), A^T A = Gramian
    _, sing, ut = np.linalg.svd(a_mat, full_matrices=False)
    lam = sing**2
    if lam[0] <= 0 or np.all(lam <= SINGULAR_RTOL * lam[0]):
        raise SingularGramianError("all Gramian eigenvalues below the singular threshold")
    r = int(np.sum(lam > SINGULAR_RTOL * lam[0]))
    coeff = ut.T[:, :r] @ ((ut[:r] @ chi) / lam[:r])
    return EstimationResult(
        coefficients=coeff,
        spectrum=bank.filters.T @ coeff,
        eigenvalues=lam,
        effective_rank=r,
        method="PINV",
    )


def solve_nnls(bank: FilterBank, chi, policy: TruncationPolicy | None = None) -> EstimationResult:
    """Nonnegative least squares on the (possibly truncated) Gramian factor.

    Factor G_r = M^T M with M = diag(sqrt(lambda_r)) U_r^T and target
    d = diag(1/sqrt(lambda_r)) U_r^T chi, then minimize ||M a - d||^2
    subject to a >= 0 with a Lawson-Hanson active set. The result carries
    a KKT certificate at kappa = 1e-8 * ||chi||_inf:
    |(G_r a - proj chi)_n| <= kappa where a_n > 0, >= -kappa where a_n = 0.
    """
    policy = policy or TruncationPolicy.none()
    chi = np.asarray(chi, dtype=float)
    if chi.shape != (bank.size,):
        raise ValueError(f"chi has shape {chi.shape}, bank holds {bank.size} filters")
    lam, u = _eigh_descending(bank.gramian)
    r = policy.retained(lam)
    sqrt_lam = np.sqrt(lam[:r])
    m_mat = sqrt_lam[:, None] * u[:, :r].T
    d = (u[:, :r].T @ chi) / sqrt_lam
    coeff = _lawson_hanson(m_mat, d, max_iter=10 * bank.size)

    grad = m_mat.T @ (m_mat @ coeff - d)  # = G_r a - U_r U_r^T chi
    kappa = 1e-8 * np.max(np.abs(chi))
    active = coeff > 0
    kkt_ok = bool(
        np.all(np.abs(grad[active]) <= kappa) and np.all(grad[~active] >= -kappa)
    )
    return EstimationResult(
        coefficients=coeff,
        spectrum=bank.filters.T @ coeff,
        eigenvalues=lam,
        effective_rank=r,
        method="NNLS",
        kkt_ok=kkt_ok,
    )


def _lawson_hanson(m_mat: np.ndarray, d: np.ndarray, max_iter: int) -> np.ndarray:
    """Classic active-set NNLS for min ||M a - d||^2 s.t. a >= 0."""
    n = m_mat.shape[1]
    a = np.zeros(n)
    passive = np.zeros(n, dtype=bool)
    scale = max(float(np.abs(m_mat.T @ d).max()), np.finfo(float).tiny)
    iters = 0
    while True:
        grad = m_mat.T @ (d - m_mat @ a)
        candidates = ~passive
        if not candidates.any() or np.max(grad[candidates]) <= 1e-12 * scale:
            return a
        j = np.flatnonzero(candidates)[np.argmax(grad[candidates])]
        passive[j] = True
        while True:
            iters += 1
            if iters > max_iter:
                raise ConvergenceError(
                    f"NNLS active-set failed to converge in {max_iter} iterations",
                    result=a,
                )
            trial = np.zeros(n)
            sol, *_ = np.linalg.lstsq(m_mat[:, passive], d, rcond=None)
            trial[passive] = sol
            if trial[passive].min() > 0:
                a = trial
                break
            blocking = passive & (trial <= 0)
            step = np.min(a[blocking] / (a[blocking] - trial[blocking]))
            a = a + step * (trial - a)
            a_scale = np.abs(a).max()
            passive[passive & (a <= 1e-12 * a_scale)] = False
            a[~passive] = 0.0


def clip_negative(result: EstimationResult) -> EstimationResult:
    """Zero out negative reconstruction samples; coefficients unchanged."""
    return replace(result, spectrum=np.maximum(result.spectrum, 0.0), clipped=True)


def nnls_objective(gram: np.ndarray, chi: np.ndarray, coeff: np.ndarray) -> float:
    """The quadratic objective a^T G a - 2 chi^T a shared by LS and NNLS."""
    return float(coeff @ gram @ coeff - 2.0 * chi @ coeff)
