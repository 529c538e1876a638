"""Render figures from the CSV artifacts sitting in a run's output directory.

Reading back the CSVs (rather than in-memory arrays) keeps one plotting
path for both the CLI run and the emitted regeneration script.
"""

from __future__ import annotations

import csv
import glob
import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

_SCAN_STYLE = {
    "PDD": dict(color="purple", marker="s"),
    "CP": dict(color="goldenrod", marker="D"),
    "BOD(3)": dict(color="crimson", marker="o"),
    "BOD(5)": dict(color="royalblue", marker="*"),
}


def _read_csv(path):
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        rows = list(reader)
    return rows


def render_scan(out_dir) -> list[str]:
    rows = _read_csv(os.path.join(out_dir, "scan.csv"))
    fig, ax = plt.subplots(figsize=(7, 4.5))
    by_protocol = {}
    for row in rows:
        by_protocol.setdefault(row["protocol"], []).append(
            (float(row["nu_rad_s"]), float(row["fidelity"])))
    for label, pts in by_protocol.items():
        pts.sort()
        nus = [p[0] / 1e6 for p in pts]
        fids = [p[1] for p in pts]
        style = _SCAN_STYLE.get(label, {})
        ax.plot(nus, fids, markersize=4, linewidth=1.2, label=label, **style)
    ax.set_xlabel(r"$\nu$ [$10^6$ rad/s]")
    ax.set_ylabel("fidelity")
    ax.set_ylim(-0.02, 1.05)
    ax.legend()
    ax.grid(alpha=0.3)
    path = os.path.join(out_dir, "fig_scan.png")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return [path]


def render_reconstruct(out_dir) -> list[str]:
    paths = sorted(glob.glob(os.path.join(out_dir, "reconstruct_*.csv")))
    if not paths:
        return []
    n = len(paths)
    ncols = 2 if n > 1 else 1
    nrows = (n + ncols - 1) // ncols
    fig, axes = plt.subplots(nrows, ncols, figsize=(6 * ncols, 3.6 * nrows),
                             squeeze=False)
    for ax, path in zip(axes.flat, paths):
        rows = _read_csv(path)
        omega = [float(r["omega_rad_s"]) / 1e6 for r in rows]
        s_true = [float(r["s_true"]) for r in rows]
        s_hat = [float(r["s_hat"]) for r in rows]
        label = os.path.basename(path)[len("reconstruct_"):-len(".csv")]
        ax.plot(omega, s_true, "r--", linewidth=1.2, label="true")
        ax.plot(omega, s_hat, "b-", linewidth=1.0, label="estimate")
        ax.axhline(0.0, color="k", linewidth=0.5)
        ax.set_title(label)
        ax.set_xlabel(r"$\omega$ [$10^6$ rad/s]")
        ax.set_ylabel(r"S [Hz$^2\,$s]")
        ax.legend()
    for ax in axes.flat[n:]:
        ax.set_visible(False)
    out = os.path.join(out_dir, "fig_reconstruct.png")
    fig.tight_layout()
    fig.savefig(out, dpi=150)
    plt.close(fig)
    return [out]


def render_table(out_dir) -> list[str]:
    rows = _read_csv(os.path.join(out_dir, "table.csv"))
    methods = sorted({r["method"] for r in rows})
    fig, axes = plt.subplots(1, len(methods), figsize=(6 * len(methods), 4),
                             squeeze=False, sharey=True)
    for ax, method in zip(axes.flat, methods):
        series = {}
        for r in rows:
            if r["method"] != method:
                continue
            series.setdefault(r["protocol"], []).append(
                (int(r["samples"]), float(r["fidelity_mean"]),
                 float(r["fidelity_std"])))
        for protocol, pts in series.items():
            pts.sort()
            ax.errorbar([p[0] for p in pts], [p[1] for p in pts],
                        yerr=[p[2] for p in pts], marker="o", capsize=3,
                        label=protocol)
        ax.set_xscale("log")
        ax.set_xlabel("samples")
        ax.set_title(method)
        ax.grid(alpha=0.3)
    axes.flat[0].set_ylabel("mean fidelity")
    axes.flat[-1].legend(fontsize=8)
    path = os.path.join(out_dir, "fig_table.png")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return [path]


def render_design(out_dir) -> list[str]:
    rows = _read_csv(os.path.join(out_dir, "design.csv"))
    fig, ax = plt.subplots(figsize=(7, 4))
    for r in rows:
        n = int(r["n"])
        lo = float(r["lower_edge_rad_s"]) / 1e6
        hi = float(r["upper_edge_rad_s"]) / 1e6
        pk = float(r["peak_rad_s"]) / 1e6
        ax.plot([lo, hi], [n, n], "b-", linewidth=2)
        ax.plot([pk], [n], "r|", markersize=8)
    ax.set_xlabel(r"$\omega$ [$10^6$ rad/s]")
    ax.set_ylabel("filter index n")
    ax.grid(alpha=0.3)
    path = os.path.join(out_dir, "fig_design.png")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return [path]


_RENDERERS = {
    "scan": render_scan,
    "reconstruct": render_reconstruct,
    "table": render_table,
    "design": render_design,
}


def render(experiment: str, out_dir) -> list[str]:
    try:
        renderer = _RENDERERS[experiment]
    except KeyError:
        raise ValueError(f"no renderer for experiment {experiment!r}") from None
    return renderer(out_dir)


PLOT_SCRIPT = """\
#!/usr/bin/env python3
\"\"\"Regenerate the {experiment} figures from the CSVs in this directory.\"\"\"
import os
from spectro.plots import render

render({experiment!r}, os.path.dirname(os.path.abspath(__file__)) or ".")
"""


def write_plot_script(experiment: str, out_dir) -> str:
    path = os.path.join(out_dir, f"plot_{experiment}.py")
    with open(path, "w") as fh:
        fh.write(PLOT_SCRIPT.format(experiment=experiment))
    os.chmod(path, 0o755)
    return path
