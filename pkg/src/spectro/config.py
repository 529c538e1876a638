"""Flat key = value experiment configs.

One experiment per file; `#` starts a comment; keys are snake_case and
documented in the CLI --help epilog. Unknown keys are rejected so typos
surface as config errors rather than silently ignored settings.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields

import numpy as np

TWO_PI = 2.0 * np.pi


class ConfigError(Exception):
    """Bad config file, key, or value (CLI exit code 1)."""


def parse_mapping(text: str) -> dict[str, str]:
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value, got {raw!r}")
        key, value = line.split("=", 1)
        key = key.strip()
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        if key in out:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        out[key] = value.strip()
    return out


def load_mapping(path) -> dict[str, str]:
    try:
        with open(path) as fh:
            return parse_mapping(fh.read())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc


def _to_float(key, value):
    try:
        return float(value)
    except ValueError as exc:
        raise ConfigError(f"{key}: expected a number, got {value!r}") from exc


def _to_int(key, value):
    try:
        return int(value)
    except ValueError as exc:
        raise ConfigError(f"{key}: expected an integer, got {value!r}") from exc


def _to_bool(key, value):
    low = value.strip().lower()
    if low in ("true", "yes", "on", "1"):
        return True
    if low in ("false", "no", "off", "0"):
        return False
    raise ConfigError(f"{key}: expected true/false, got {value!r}")


def _to_list(value):
    return [item.strip() for item in value.split(",") if item.strip()]


def _to_float_list(key, value):
    return [_to_float(key, item) for item in _to_list(value)]


_CASTS = {float: _to_float, int: _to_int, bool: _to_bool}


def _apply(cfg_cls, mapping: dict[str, str], experiment: str):
    declared = {f.name: f for f in fields(cfg_cls)}
    values = {}
    for key, raw in mapping.items():
        if key == "experiment":
            if raw.strip().lower() != experiment:
                raise ConfigError(
                    f"config declares experiment = {raw!r} but the "
                    f"{experiment!r} command was invoked")
            continue
        if key not in declared:
            raise ConfigError(f"unknown key {key!r} for the {experiment} experiment")
        f = declared[key]
        if f.type in ("float", float):
            values[key] = _to_float(key, raw)
        elif f.type in ("int", int):
            values[key] = _to_int(key, raw)
        elif f.type in ("bool", bool):
            values[key] = _to_bool(key, raw)
        elif f.type in ("list[float]", "List[float]"):
            values[key] = _to_float_list(key, raw)
        elif f.type in ("list[str]", "List[str]"):
            values[key] = _to_list(raw)
        elif f.type in ("list[int]", "List[int]"):
            values[key] = [_to_int(key, item) for item in _to_list(raw)]
        else:
            values[key] = raw
    try:
        return cfg_cls(**values)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


@dataclass
class DesignConfig:
    tau1_s: float = 5e-6
    epsilon: float = 0.5
    m_flips: int = 32
    harmonic_cap: int = 3
    seed: int = 0  # unused; accepted so --seed works uniformly

    @classmethod
    def from_mapping(cls, mapping):
        return _apply(cls, mapping, "design")


@dataclass
class ScanConfig:
    protocols: "list[str]" = field(default_factory=lambda: ["pdd", "cp", "bod3", "bod5"])
    m_flips: int = 32
    amplitude_hz: float = 1.0
    tau_min_s: float = 1e-6
    tau_max_s: float = 5e-6
    n_sequences: int = 32
    bod_tau1_s: float = 5e-6
    bod_epsilon: float = 0.5
    bod_scale_amplitudes: bool = True
    delta_omega_rad_s: float = 6e3
    omega_max_rad_s: float = 0.0  # 0 = auto
    spectrum_power_hz2: float = 1e8
    spectrum_width_rad_s: float = TWO_PI * 30e3
    nu_start_rad_s: float = TWO_PI * 50e3
    nu_stop_rad_s: float = TWO_PI * 550e3
    nu_step_rad_s: float = TWO_PI * 10e3
    method: str = "ls"
    truncation: str = "none"
    measurement: str = "exact"
    samples: int = 50
    repetitions: int = 1
    seed: int = 20250809

    def __post_init__(self):
        if not self.protocols:
            raise ConfigError("protocols must not be empty")
        for token in self.protocols:
            if token not in ("pdd", "cp", "bod3", "bod5"):
                raise ConfigError(f"unknown scan protocol {token!r}")
        if self.method not in ("ls", "nnls", "pinv"):
            raise ConfigError(f"method must be ls, nnls or pinv, got {self.method!r}")
        if self.measurement not in ("exact", "montecarlo"):
            raise ConfigError("measurement must be exact or montecarlo")
        if self.repetitions < 1:
            raise ConfigError("repetitions must be >= 1")
        if self.nu_step_rad_s <= 0 or self.nu_stop_rad_s < self.nu_start_rad_s:
            raise ConfigError("nu scan range is empty")

    @classmethod
    def from_mapping(cls, mapping):
        return _apply(cls, mapping, "scan")


@dataclass
class ReconstructConfig:
    protocols: "list[str]" = field(default_factory=lambda: ["pdd", "cp", "bod3"])
    m_flips: int = 32
    amplitude_hz: float = 1.0
    tau_min_s: float = 1e-6
    tau_max_s: float = 5e-6
    n_sequences: int = 32
    bod_tau1_s: float = 5e-6
    bod_epsilon: float = 0.5
    bod_scale_amplitudes: bool = True
    delta_omega_rad_s: float = 6e3
    omega_max_rad_s: float = 0.0
    spectrum_powers_hz2: "list[float]" = field(default_factory=lambda: [1e8, 5e7])
    spectrum_centers_rad_s: "list[float]" = field(
        default_factory=lambda: [TWO_PI * 140e3, TWO_PI * 260e3])
    spectrum_widths_rad_s: "list[float]" = field(
        default_factory=lambda: [TWO_PI * 30e3, TWO_PI * 30e3])
    spectrum_csv: str = ""
    truncation: str = "drop_smallest:3"
    pinv_baseline: bool = True
    measurement: str = "montecarlo"
    samples: int = 50
    repetitions: int = 1
    seed: int = 20250809

    def __post_init__(self):
        for token in self.protocols:
            if token not in ("pdd", "cp", "bod3", "bod5"):
                raise ConfigError(f"unknown reconstruct protocol {token!r}")
        if not self.spectrum_csv:
            n = len(self.spectrum_powers_hz2)
            if n == 0 or len(self.spectrum_centers_rad_s) != n or len(self.spectrum_widths_rad_s) != n:
                raise ConfigError("spectrum component lists must be nonempty and equal-length")
        if self.measurement not in ("exact", "montecarlo"):
            raise ConfigError("measurement must be exact or montecarlo")
        if self.repetitions < 1:
            raise ConfigError("repetitions must be >= 1")

    @classmethod
    def from_mapping(cls, mapping):
        return _apply(cls, mapping, "reconstruct")


@dataclass
class TableConfig:
    rows: "list[str]" = field(default_factory=lambda: [
        "pdd", "cp", "bod:0.75:34", "bod:0.5:17", "bod:0.25:11"])
    m_flips: int = 32
    amplitude_hz: float = 1.0
    tau_min_s: float = 1e-6
    tau_max_s: float = 5e-6
    n_sequences: int = 32
    bod_tau1_s: float = 5e-6
    bod_harmonic_cap: int = 3
    bod_scale_amplitudes: bool = True
    delta_omega_rad_s: float = 6e3
    omega_max_rad_s: float = 0.0
    spectrum_powers_hz2: "list[float]" = field(default_factory=lambda: [1e8, 5e7])
    spectrum_centers_rad_s: "list[float]" = field(
        default_factory=lambda: [TWO_PI * 140e3, TWO_PI * 260e3])
    spectrum_widths_rad_s: "list[float]" = field(
        default_factory=lambda: [TWO_PI * 30e3, TWO_PI * 30e3])
    samples_list: "list[int]" = field(default_factory=lambda: [10, 50, 200])
    methods: "list[str]" = field(default_factory=lambda: ["ls", "nnls"])
    ls_truncation: str = "keep_fraction:0.5"
    nnls_truncation: str = "none"
    clip_ls: bool = True
    repetitions: int = 250
    seed: int = 20250809

    def __post_init__(self):
        if not self.rows:
            raise ConfigError("rows must not be empty")
        for token in self.rows:
            parse_table_row(token)
        for method in self.methods:
            if method not in ("ls", "nnls"):
                raise ConfigError(f"table methods are ls and nnls, got {method!r}")
        if self.repetitions < 1:
            raise ConfigError("repetitions must be >= 1")
        if any(s < 1 for s in self.samples_list):
            raise ConfigError("samples_list entries must be >= 1")

    @classmethod
    def from_mapping(cls, mapping):
        return _apply(cls, mapping, "table")


def parse_table_row(token: str):
    """'pdd' | 'cp' | 'bod:<epsilon>:<n_filters>' -> (kind, epsilon, count)."""
    parts = token.split(":")
    if parts[0] in ("pdd", "cp"):
        if len(parts) != 1:
            raise ConfigError(f"row {token!r}: pdd/cp take no arguments")
        return (parts[0], None, None)
    if parts[0] == "bod":
        if len(parts) != 3:
            raise ConfigError(f"row {token!r}: expected bod:<epsilon>:<n_filters>")
        eps = _to_float(token, parts[1])
        count = _to_int(token, parts[2])
        if not 0.0 <= eps < 1.0:
            raise ConfigError(f"row {token!r}: epsilon must lie in [0, 1)")
        if count < 1:
            raise ConfigError(f"row {token!r}: n_filters must be >= 1")
        return ("bod", eps, count)
    raise ConfigError(f"unknown table row {token!r}")


KEY_HELP = """\
config keys (key = value, '#' comments; all frequencies in rad/s)

common
  seed                    base RNG seed; repetition r uses seed + r
  m_flips                 sign flips per sequence (default 32)
  amplitude_hz            control amplitude A_c (default 1.0)
  delta_omega_rad_s       frequency grid step (default 6e3)
  omega_max_rad_s         grid end; 0 = auto from spectrum + filter bands
  tau_min_s, tau_max_s, n_sequences
                          PDD/CP interpulse range (linear spacing)
  bod_tau1_s, bod_epsilon, bod_scale_amplitudes
                          BOD recursion start, overlap, 1/tau amplitude scaling

design  (spectro design)
  tau1_s, epsilon, m_flips, harmonic_cap (3 or 5)

scan  (spectro scan; single Gaussian spectrum swept over nu)
  protocols               any of pdd, cp, bod3, bod5
  spectrum_power_hz2, spectrum_width_rad_s
  nu_start_rad_s, nu_stop_rad_s, nu_step_rad_s
  method                  ls | nnls | pinv
  truncation              none | drop_smallest:<r> | keep_fraction:<f> | threshold:<rel>
  measurement             exact | montecarlo ; samples, repetitions for montecarlo

reconstruct  (spectro reconstruct; fixed multi-component spectrum)
  protocols               any of pdd, cp, bod3, bod5
  spectrum_powers_hz2, spectrum_centers_rad_s, spectrum_widths_rad_s
                          comma lists, one entry per Gaussian component
  spectrum_csv            alternative tabulated PSD (omega_rad_s,psd_hz2_s)
  truncation, pinv_baseline, measurement, samples, repetitions

table  (spectro table; fidelity means over repetitions)
  rows                    pdd, cp, bod:<epsilon>:<n_filters>, ...
  samples_list            e.g. 10, 50, 200
  methods                 ls, nnls
  ls_truncation, nnls_truncation, clip_ls
  bod_harmonic_cap        cap used to cross-check the bod row counts
  repetitions             default 250
"""
