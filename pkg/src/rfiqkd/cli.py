"""Command-line harness.

Subcommands:

* ``rate-curve``   asymptotic rate vs distance (CSV + JSON)
* ``finite-sweep`` adds finite-key columns per stationary segment length
* ``qber-hist``    QBER distribution under random frame drift (CSV)
* ``validate``     decoy bounds vs Monte Carlo ground truth (exit status)
* ``dump-config``  print the documented default configuration

Numeric output is deterministic: the same config file and seed produce
byte-identical files.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .config import ConfigError, RunConfig, default_toml, load_config
from .sweeps import (
    run_finite_sweep,
    run_oracle_validation,
    run_qber_histogram,
    run_rate_curve,
    write_histogram_csv,
    write_json_report,
    write_rate_csv,
)


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, default=None,
                        help="TOML run configuration (defaults used if omitted)")
    parser.add_argument("--seed", type=int, default=None,
                        help="master seed override")
    parser.add_argument("--out", type=Path, default=None,
                        help="output directory (default: current directory)")
    parser.add_argument("--mode", choices=("analytic", "mc"), default=None,
                        help="statistics source override")
    parser.add_argument("--seeds", type=int, default=None,
                        help="Monte Carlo repetitions per sweep point")


def _load(args: argparse.Namespace) -> RunConfig:
    overrides: dict = {"run": {}}
    if args.seed is not None:
        overrides["run"]["seed"] = args.seed
    if args.mode is not None:
        overrides["run"]["mode"] = args.mode
    if args.seeds is not None:
        overrides["run"]["seeds"] = args.seeds
    if args.out is not None:
        overrides["run"]["output_dir"] = str(args.out)
    return load_config(args.config, overrides)


def _output_dir(cfg: RunConfig) -> Path:
    out = cfg.output_dir or Path.cwd()
    out.mkdir(parents=True, exist_ok=True)
    if not out.is_dir():
        raise ConfigError(f"output directory {out} is not writable")
    return out


def _cmd_rate_curve(args: argparse.Namespace) -> int:
    cfg = _load(args)
    out = _output_dir(cfg)
    report = run_rate_curve(cfg)
    write_rate_csv(report, out / "rate_curve.csv")
    write_json_report(report, out / "rate_curve.json")
    for row in report.rows:
        print(f"L={row.length_km:6.1f} km  R={row.R_asym:.6g}"
              + (f"  sem={row.sem_R:.3g}" if row.sem_R is not None else ""))
    print(f"wrote {out / 'rate_curve.csv'} and {out / 'rate_curve.json'}")
    return 0


def _cmd_finite_sweep(args: argparse.Namespace) -> int:
    cfg = _load(args)
    out = _output_dir(cfg)
    report = run_finite_sweep(cfg)
    write_rate_csv(report, out / "finite_sweep.csv")
    write_json_report(report, out / "finite_sweep.json")
    for row in report.rows:
        finite = "  ".join(f"r({s:g}s)={row.r_finite[s]:.6g}"
                           for s in report.segment_seconds)
        print(f"L={row.length_km:6.1f} km  R={row.R_asym:.6g}  {finite}")
    print(f"wrote {out / 'finite_sweep.csv'} and {out / 'finite_sweep.json'}")
    return 0


def _cmd_qber_hist(args: argparse.Namespace) -> int:
    cfg = _load(args)
    out = _output_dir(cfg)
    edges, counts = run_qber_histogram(cfg)
    write_histogram_csv(edges, counts, out / "qber_hist.csv")
    print(f"{int(counts.sum())} QBER values in {len(counts)} bins")
    print(f"wrote {out / 'qber_hist.csv'}")
    return 0


def _cmd_validate(args: argparse.Namespace) -> int:
    cfg = _load(args)
    out = _output_dir(cfg)
    report = run_oracle_validation(cfg)
    text = report.table()
    (out / "validation.txt").write_text(text + "\n")
    print(text)
    return 0 if report.passed else 1


def _cmd_dump_config(_: argparse.Namespace) -> int:
    sys.stdout.write(default_toml())
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rfiqkd",
        description="Decoy-state security analysis for frame-independent "
                    "QKD: rate curves, finite-key sweeps, and simulator "
                    "cross-checks.")
    sub = parser.add_subparsers(dest="command", required=True)

    for name, func, doc in (
            ("rate-curve", _cmd_rate_curve,
             "asymptotic secure rate per sweep distance"),
            ("finite-sweep", _cmd_finite_sweep,
             "finite-key rates per stationary segment length"),
            ("qber-hist", _cmd_qber_hist,
             "QBER histogram under random frame drift (mc only)"),
            ("validate", _cmd_validate,
             "decoy bounds vs Monte Carlo ground truth (mc only)")):
        p = sub.add_parser(name, help=doc)
        _add_common(p)
        p.set_defaults(func=func)

    p = sub.add_parser("dump-config", help="print the default TOML config")
    p.set_defaults(func=_cmd_dump_config)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
