"""Experiment drivers wiring spectra, controls, noise simulation and the
estimators into the design, scan, reconstruct and table runs.

Every run is deterministic given its config: repetition r draws from
seed + r, Monte-Carlo draw indices enumerate (cell, filter, sample), and
parallel execution assembles results into indexed slots.
"""

from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import __version__
from .config import (ConfigError, DesignConfig, ReconstructConfig, ScanConfig,
                     TableConfig, parse_table_row)
from .controls import (CP, PDD, ControlSequence, bod_sequences,
                       bod_tau_sequence, design_bod, build_filter_bank)
from .estimator import TruncationPolicy, clip_negative, solve_ls, solve_nnls, solve_pinv
from .metrics import fidelity, mse
from .noisesim import NoiseModel, chi_exact, chi_montecarlo, prepare_projections
from .spectra import FrequencyGrid, GaussianComponent, SpectralDensity

# keeps draw indices of separate cells (sample counts, scan points) disjoint
DRAW_STRIDE = 10_000_000


def _pmap(fn, items, jobs):
    if jobs <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


# ---------------------------------------------------------------- banks

def linear_tau_sequences(protocol: str, cfg) -> list[ControlSequence]:
    taus = np.linspace(cfg.tau_min_s, cfg.tau_max_s, cfg.n_sequences)
    return [ControlSequence(protocol, float(t), cfg.m_flips, cfg.amplitude_hz) for t in taus]


def bank_sequences(token: str, cfg) -> tuple[str, list[ControlSequence]]:
    """Map a config protocol token to (label, sequences)."""
    if token == "pdd":
        return "PDD", linear_tau_sequences(PDD, cfg)
    if token == "cp":
        return "CP", linear_tau_sequences(CP, cfg)
    if token in ("bod3", "bod5"):
        cap = 3 if token == "bod3" else 5
        design = design_bod(cfg.bod_tau1_s, cfg.bod_epsilon, cfg.m_flips, cap)
        seqs = bod_sequences(design, cfg.amplitude_hz, cfg.bod_scale_amplitudes)
        return f"BOD({cap})", seqs
    raise ConfigError(f"unknown protocol token {token!r}")


def auto_grid(cfg, sequence_sets, spectrum_edges) -> FrequencyGrid:
    """Grid reaching past every filter's second null and the spectrum support."""
    edge = max(spectrum_edges)
    for seqs in sequence_sets:
        for seq in seqs:
            edge = max(edge, (1.0 + 4.0 / seq.n_flips) * np.pi / seq.tau)
    omega_max = cfg.omega_max_rad_s if cfg.omega_max_rad_s > 0 else edge
    return FrequencyGrid(omega_max=omega_max, delta_omega=cfg.delta_omega_rad_s)


def gaussian_mixture(powers, centers, widths) -> SpectralDensity:
    comps = [GaussianComponent(p, c, w) for p, c, w in zip(powers, centers, widths)]
    return SpectralDensity.from_components(*comps)


# ---------------------------------------------------------------- reports

@dataclass
class RunReport:
    experiment: str
    config: dict
    seed: int
    results: list = field(default_factory=list)
    eigenvalues: dict = field(default_factory=dict)
    effective_rank: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)
    wall_clock_s: float = 0.0
    tool = f"spectro {__version__}"

    def to_payload(self) -> dict:
        return {
            "tool": self.tool,
            "experiment": self.experiment,
            "seed": self.seed,
            "config": self.config,
            "results": self.results,
            "eigenvalues": self.eigenvalues,
            "effective_rank": self.effective_rank,
            "notes": self.notes,
            "wall_clock_s": self.wall_clock_s,
        }


def _config_echo(cfg) -> dict:
    return {k: v for k, v in vars(cfg).items()}


def _aggregate(values) -> tuple[float, float]:
    arr = np.asarray(values, dtype=float)
    std = float(arr.std(ddof=1)) if arr.size > 1 else 0.0
    return float(arr.mean()), std


# ---------------------------------------------------------------- design

def run_design(cfg: DesignConfig) -> tuple[list[dict], RunReport]:
    t0 = time.perf_counter()
    design = design_bod(cfg.tau1_s, cfg.epsilon, cfg.m_flips, cfg.harmonic_cap)
    rows = []
    for n, tau in enumerate(design.taus, start=1):
        peak = np.pi / tau
        rows.append({
            "n": n,
            "tau_s": tau,
            "peak_rad_s": peak,
            "lower_edge_rad_s": (1.0 - 2.0 / cfg.m_flips) * peak,
            "upper_edge_rad_s": (1.0 + 2.0 / cfg.m_flips) * peak,
        })
    report = RunReport("design", _config_echo(cfg), cfg.seed)
    report.results = [{"n_filters": len(design), "tau_last_s": design.taus[-1]}]
    report.wall_clock_s = time.perf_counter() - t0
    return rows, report


# ---------------------------------------------------------------- scan

def _scan_protocol(args):
    cfg, token = args
    label, seqs = bank_sequences(token, cfg)
    support = cfg.nu_stop_rad_s + 6.0 * cfg.spectrum_width_rad_s
    grid = auto_grid(cfg, [seqs], [support])
    bank = build_filter_bank(seqs, grid)
    policy = TruncationPolicy.parse(cfg.truncation)
    nus = np.arange(cfg.nu_start_rad_s, cfg.nu_stop_rad_s + 0.5 * cfg.nu_step_rad_s,
                    cfg.nu_step_rad_s)
    rows, diag = [], {}
    for i, nu in enumerate(nus):
        sd = SpectralDensity.gaussian(cfg.spectrum_power_hz2, float(nu),
                                      cfg.spectrum_width_rad_s)
        s_true = sd.evaluate(grid.values)
        try:
            fids, mses = [], []
            for rep in range(cfg.repetitions if cfg.measurement == "montecarlo" else 1):
                if cfg.measurement == "exact":
                    meas = chi_exact(sd, bank)
                else:
                    model = NoiseModel.for_density(sd, cfg.seed + rep)
                    meas = chi_montecarlo(model, bank, cfg.samples,
                                          draw_offset=i * DRAW_STRIDE)
                if cfg.method == "ls":
                    result = solve_ls(bank, meas.chi, policy)
                elif cfg.method == "nnls":
                    result = solve_nnls(bank, meas.chi, policy)
                else:
                    result = solve_pinv(bank, meas.chi, grid)
                result = clip_negative(result)
                fids.append(fidelity(s_true, result.spectrum, grid))
                mses.append(mse(s_true, result.spectrum, grid))
                diag.setdefault("effective_rank", result.effective_rank)
                diag.setdefault("eigenvalues", result.eigenvalues.tolist())
            rows.append({
                "nu_rad_s": float(nu),
                "fidelity": float(np.mean(fids)),
                "mse": float(np.mean(mses)),
                "method": cfg.method.upper(),
                "protocol": label,
            })
        except (ValueError, RuntimeError) as exc:
            rows.append({
                "nu_rad_s": float(nu), "fidelity": float("nan"),
                "mse": float("nan"), "method": cfg.method.upper(), "protocol": label,
            })
            diag.setdefault("failures", []).append(f"nu={nu:.6g}: {exc}")
    return label, rows, diag


def run_scan(cfg: ScanConfig, jobs: int = 1) -> tuple[list[dict], RunReport]:
    t0 = time.perf_counter()
    outcomes = _pmap(_scan_protocol, [(cfg, token) for token in cfg.protocols], jobs)
    report = RunReport("scan", _config_echo(cfg), cfg.seed)
    rows = []
    for label, protocol_rows, diag in outcomes:
        rows.extend(protocol_rows)
        report.eigenvalues[label] = diag.get("eigenvalues", [])
        report.effective_rank[label] = diag.get("effective_rank")
        for failure in diag.get("failures", []):
            report.notes.append(f"{label}: {failure}")
        fids = [r["fidelity"] for r in protocol_rows if np.isfinite(r["fidelity"])]
        mean, std = _aggregate(fids) if fids else (float("nan"), 0.0)
        report.results.append({
            "protocol": label,
            "per_point_fidelity": [r["fidelity"] for r in protocol_rows],
            "per_point_mse": [r["mse"] for r in protocol_rows],
            "fidelity_mean": mean,
            "fidelity_std": std,
        })
    report.wall_clock_s = time.perf_counter() - t0
    return rows, report


# ---------------------------------------------------------------- reconstruct

def _reconstruct_spectrum(cfg: ReconstructConfig) -> SpectralDensity:
    if cfg.spectrum_csv:
        return SpectralDensity.from_csv(cfg.spectrum_csv)
    return gaussian_mixture(cfg.spectrum_powers_hz2, cfg.spectrum_centers_rad_s,
                            cfg.spectrum_widths_rad_s)


def run_reconstruct(cfg: ReconstructConfig) -> tuple[dict, RunReport]:
    """Returns ({label: (omega, s_true, s_hat)}, report); the spectrum CSVs
    hold repetition 0, the report aggregates all repetitions."""
    t0 = time.perf_counter()
    sd = _reconstruct_spectrum(cfg)
    labeled = [bank_sequences(token, cfg) for token in cfg.protocols]
    grid = auto_grid(cfg, [seqs for _, seqs in labeled], [sd.support_edge()])
    banks = {label: build_filter_bank(seqs, grid) for label, seqs in labeled}
    policy = TruncationPolicy.parse(cfg.truncation)
    s_true = sd.evaluate(grid.values)

    report = RunReport("reconstruct", _config_echo(cfg), cfg.seed)
    spectra_out: dict[str, tuple] = {}
    stats = {label: {"fidelity": [], "mse": [], "pinv_fidelity": [], "pinv_mse": []}
             for label in banks}

    projections = {}
    for rep in range(cfg.repetitions):
        for label, bank in banks.items():
            if cfg.measurement == "exact":
                meas = chi_exact(sd, bank)
            else:
                model = NoiseModel.for_density(sd, cfg.seed + rep)
                if label not in projections:
                    projections[label] = prepare_projections(model, bank)
                # the projections depend on the model only through its
                # synthesis grid and density, identical across repetitions
                prepared = replace(projections[label], model=model)
                meas = chi_montecarlo(model, bank, cfg.samples, projections=prepared)
            result = clip_negative(solve_ls(bank, meas.chi, policy))
            stats[label]["fidelity"].append(fidelity(s_true, result.spectrum, grid))
            stats[label]["mse"].append(mse(s_true, result.spectrum, grid))
            if rep == 0:
                spectra_out[label] = (grid.values, s_true,
                                      solve_ls(bank, meas.chi, policy).spectrum)
                report.eigenvalues[label] = result.eigenvalues.tolist()
                report.effective_rank[label] = result.effective_rank
            if cfg.pinv_baseline:
                pinv = clip_negative(solve_pinv(bank, meas.chi, grid))
                stats[label]["pinv_fidelity"].append(fidelity(s_true, pinv.spectrum, grid))
                stats[label]["pinv_mse"].append(mse(s_true, pinv.spectrum, grid))
                if rep == 0 and label == next(iter(banks)):
                    spectra_out["PINV"] = (grid.values, s_true,
                                           solve_pinv(bank, meas.chi, grid).spectrum)

    for label, vals in stats.items():
        mean, std = _aggregate(vals["fidelity"])
        entry = {
            "protocol": label,
            "per_repetition_fidelity": vals["fidelity"],
            "per_repetition_mse": vals["mse"],
            "fidelity_mean": mean,
            "fidelity_std": std,
            "mse_mean": _aggregate(vals["mse"])[0],
        }
        if cfg.pinv_baseline:
            entry["pinv_fidelity_mean"] = _aggregate(vals["pinv_fidelity"])[0]
            entry["pinv_per_repetition_fidelity"] = vals["pinv_fidelity"]
        report.results.append(entry)
    report.wall_clock_s = time.perf_counter() - t0
    return spectra_out, report


# ---------------------------------------------------------------- table

def _table_row_bank(cfg: TableConfig, token: str):
    kind, eps, count = parse_table_row(token)
    if kind == "pdd":
        return "PDD", linear_tau_sequences(PDD, cfg), None
    if kind == "cp":
        return "CP", linear_tau_sequences(CP, cfg), None
    design = bod_tau_sequence(cfg.bod_tau1_s, eps, cfg.m_flips, count)
    capped = design_bod(cfg.bod_tau1_s, eps, cfg.m_flips, cfg.bod_harmonic_cap)
    note = None
    if len(capped) != count:
        note = (f"bod eps={eps}: requested {count} filters, harmonic cap "
                f"{cfg.bod_harmonic_cap} stopping rule yields {len(capped)}")
    label = f"BOD3({eps:g})"
    return label, bod_sequences(design, cfg.amplitude_hz, cfg.bod_scale_amplitudes), note


def _table_cell(args):
    """One (protocol row, sample count): all repetitions, both methods."""
    cfg, token, samples_index = args
    label, seqs, note = _table_row_bank(cfg, token)
    samples = cfg.samples_list[samples_index]
    sd = _reconstruct_spectrum_like(cfg)
    grid = auto_grid(cfg, [seqs], [sd.support_edge()])
    bank = build_filter_bank(seqs, grid)
    s_true = sd.evaluate(grid.values)
    ls_policy = TruncationPolicy.parse(cfg.ls_truncation)
    nnls_policy = TruncationPolicy.parse(cfg.nnls_truncation)

    per_method = {m: {"fidelity": [], "mse": []} for m in cfg.methods}
    projections = None
    for rep in range(cfg.repetitions):
        model = NoiseModel.for_density(sd, cfg.seed + rep)
        if projections is None:
            projections = prepare_projections(model, bank)
        # the projections depend on the model only through its synthesis
        # grid and density, identical across repetitions
        prepared = replace(projections, model=model)
        meas = chi_montecarlo(model, bank, samples,
                              draw_offset=samples_index * DRAW_STRIDE,
                              projections=prepared)
        for method in cfg.methods:
            if method == "ls":
                result = solve_ls(bank, meas.chi, ls_policy)
                if cfg.clip_ls:
                    result = clip_negative(result)
            else:
                result = solve_nnls(bank, meas.chi, nnls_policy)
            per_method[method]["fidelity"].append(fidelity(s_true, result.spectrum, grid))
            per_method[method]["mse"].append(mse(s_true, result.spectrum, grid))

    lam, _ = np.linalg.eigh(bank.gramian)
    cell = {
        "protocol": label,
        "n_filters": bank.size,
        "samples": samples,
        "note": note,
        "eigenvalues": lam[::-1].tolist(),
        "methods": {},
    }
    for method, vals in per_method.items():
        mean, std = _aggregate(vals["fidelity"])
        cell["methods"][method] = {
            "per_repetition_fidelity": vals["fidelity"],
            "per_repetition_mse": vals["mse"],
            "fidelity_mean": mean,
            "fidelity_std": std,
        }
    return cell


def _reconstruct_spectrum_like(cfg) -> SpectralDensity:
    return gaussian_mixture(cfg.spectrum_powers_hz2, cfg.spectrum_centers_rad_s,
                            cfg.spectrum_widths_rad_s)


def run_table(cfg: TableConfig, jobs: int = 1) -> tuple[list[dict], RunReport]:
    t0 = time.perf_counter()
    tasks = [(cfg, token, si)
             for token in cfg.rows for si in range(len(cfg.samples_list))]
    cells = _pmap(_table_cell, tasks, jobs)
    report = RunReport("table", _config_echo(cfg), cfg.seed)
    rows = []
    for cell in cells:
        if cell["note"]:
            if cell["note"] not in report.notes:
                report.notes.append(cell["note"])
        report.eigenvalues.setdefault(cell["protocol"], cell["eigenvalues"])
        for method in cfg.methods:
            stats = cell["methods"][method]
            rows.append({
                "protocol": cell["protocol"],
                "N": cell["n_filters"],
                "samples": cell["samples"],
                "method": method.upper(),
                "fidelity_mean": stats["fidelity_mean"],
                "fidelity_std": stats["fidelity_std"],
            })
        report.results.append(cell)
    report.wall_clock_s = time.perf_counter() - t0
    return rows, report
