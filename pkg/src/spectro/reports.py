"""CSV and JSON artifact writers with stable, byte-reproducible formatting."""

from __future__ import annotations

import json
import os

import numpy as np


def fmt(value) -> str:
    """Shortest round-trip decimal for floats; plain str otherwise."""
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_csv(path, header, rows) -> str:
    """rows are dicts keyed by the header names; floats via fmt()."""
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(fmt(row[name]) for name in header))
    with open(path, "w", newline="") as fh:
        fh.write("\n".join(lines) + "\n")
    return str(path)


SCAN_HEADER = ["nu_rad_s", "fidelity", "mse", "method", "protocol"]
DESIGN_HEADER = ["n", "tau_s", "peak_rad_s", "lower_edge_rad_s", "upper_edge_rad_s"]
TABLE_HEADER = ["protocol", "N", "samples", "method", "fidelity_mean", "fidelity_std"]
RECONSTRUCT_HEADER = ["omega_rad_s", "s_true", "s_hat"]


def write_scan_csv(path, rows) -> str:
    return write_csv(path, SCAN_HEADER, rows)


def write_design_csv(path, rows) -> str:
    return write_csv(path, DESIGN_HEADER, rows)


def write_table_csv(path, rows) -> str:
    return write_csv(path, TABLE_HEADER, rows)


def protocol_slug(label: str) -> str:
    return (label.lower().replace("(", "").replace(")", "")
            .replace("=", "").replace(".", "p").replace(" ", ""))


def write_reconstruct_csvs(out_dir, spectra) -> list[str]:
    """spectra: {label: (omega, s_true, s_hat)} -> one CSV per protocol."""
    paths = []
    for label, (omega, s_true, s_hat) in spectra.items():
        rows = [
            {"omega_rad_s": w, "s_true": st, "s_hat": sh}
            for w, st, sh in zip(omega, s_true, s_hat)
        ]
        path = os.path.join(out_dir, f"reconstruct_{protocol_slug(label)}.csv")
        paths.append(write_csv(path, RECONSTRUCT_HEADER, rows))
    return paths


def write_report_json(path, report) -> str:
    with open(path, "w") as fh:
        json.dump(report.to_payload(), fh, indent=2, default=_json_default)
        fh.write("\n")
    return str(path)


def _json_default(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    return str(obj)
