"""Command line entry point.

    spectro design|scan|reconstruct|table --config FILE
            [--seed N] [--out DIR] [--exact-chi] [--jobs N]
            [--no-plot] [--plot-script]

Exit codes: 0 success, 1 config error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import os
import sys

from .config import (KEY_HELP, ConfigError, DesignConfig, ReconstructConfig,
                     ScanConfig, TableConfig, load_mapping)
from . import experiments, plots, reports

_CONFIG_TYPES = {
    "design": DesignConfig,
    "scan": ScanConfig,
    "reconstruct": ReconstructConfig,
    "table": TableConfig,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spectro",
        description="Reconstruct noise spectral densities from filter-function overlaps.",
        epilog=KEY_HELP,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in [
        ("design", "emit the bandwidth-overlap tau list and band edges"),
        ("scan", "sweep a Gaussian spectrum center and record fidelity"),
        ("reconstruct", "reconstruct a multi-component spectrum per protocol"),
        ("table", "fidelity means over repetitions, protocols x samples x methods"),
    ]:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="key = value experiment file")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--out", default=".", help="output directory (default: cwd)")
        p.add_argument("--exact-chi", action="store_true",
                       help="force exact quadrature measurements")
        p.add_argument("--jobs", type=int, default=1, help="worker processes")
        p.add_argument("--no-plot", action="store_true", help="skip figure rendering")
        p.add_argument("--plot-script", action="store_true",
                       help="emit plot_<experiment>.py beside the CSVs")
    return parser


def _load_config(command: str, args):
    mapping = load_mapping(args.config)
    cfg = _CONFIG_TYPES[command].from_mapping(mapping)
    if args.seed is not None:
        cfg.seed = args.seed
    if args.exact_chi and hasattr(cfg, "measurement"):
        cfg.measurement = "exact"
    return cfg


def run(args) -> int:
    command = args.command
    cfg = _load_config(command, args)
    out_dir = args.out
    os.makedirs(out_dir, exist_ok=True)

    written = []
    if command == "design":
        rows, report = experiments.run_design(cfg)
        written.append(reports.write_design_csv(os.path.join(out_dir, "design.csv"), rows))
        print(",".join(reports.DESIGN_HEADER))
        for row in rows:
            print(",".join(reports.fmt(row[k]) for k in reports.DESIGN_HEADER))
    elif command == "scan":
        rows, report = experiments.run_scan(cfg, jobs=args.jobs)
        written.append(reports.write_scan_csv(os.path.join(out_dir, "scan.csv"), rows))
    elif command == "reconstruct":
        spectra, report = experiments.run_reconstruct(cfg)
        written.extend(reports.write_reconstruct_csvs(out_dir, spectra))
    else:
        rows, report = experiments.run_table(cfg, jobs=args.jobs)
        written.append(reports.write_table_csv(os.path.join(out_dir, "table.csv"), rows))

    written.append(reports.write_report_json(
        os.path.join(out_dir, "report.json"), report))
    if not args.no_plot:
        written.extend(plots.render(command, out_dir))
    if args.plot_script:
        written.append(plots.write_plot_script(command, out_dir))
    for note in report.notes:
        print(f"note: {note}", file=sys.stderr)
    for path in written:
        print(f"wrote {path}")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return run(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, ArithmeticError, RuntimeError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
