"""Command-line front end: ``ringsqueeze simulate <config> [options]``."""

from __future__ import annotations

import argparse
import logging
import sys

from . import runner
from .config import apply_cli_overrides, load_config


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ringsqueeze",
        description="Squeezed-light generation in a lossy ring resonator: "
                    "solve one run configuration or a pulse-energy sweep and "
                    "export CSV/JSON artifacts plus rendered images.")
    sub = parser.add_subparsers(dest="command", required=True)
    sim = sub.add_parser(
        "simulate", help="run a config file, optionally overriding its "
                         "mode, sweep and output directory")
    sim.add_argument("config", metavar="config-path",
                     help="INI run description (see the shipped example)")
    sim.add_argument("--mode", choices=["full", "first", "both", "fock"],
                     help="solver selection, overriding the config")
    sim.add_argument("--sweep", metavar="list-or-range",
                     help='pulse energies in pJ: "default", a comma list '
                          'like "1,5,10", or an inclusive range '
                          '"start:stop:step"')
    sim.add_argument("--out", metavar="dir",
                     help="output directory, overriding the config")
    sim.add_argument("--threads", type=int, default=1, metavar="N",
                     help="worker processes for sweep points (default 1)")
    sim.add_argument("-v", "--verbose", action="count", default=0,
                     help="-v for progress, -vv for debug detail")
    return parser


def _format_record(record: dict) -> str:
    def num(value, spec=".4g"):
        return "-" if value is None else format(value, spec)

    return (f"U_P = {record['U_P_pJ']:g} pJ: "
            f"n_full = {num(record['n_full'])}, "
            f"n_first = {num(record['n_first'])}, "
            f"gap = {num(record['gap_dB'], '.2f')} dB, "
            f"K = {num(record['K_full'], '.3g')}"
            f"/{num(record['K_first'], '.3g')}")


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    level = (logging.WARNING, logging.INFO, logging.DEBUG)[min(args.verbose, 2)]
    logging.basicConfig(level=level,
                        format="%(levelname)s %(name)s: %(message)s")

    if args.threads < 1:
        print("[config] --threads must be at least 1", file=sys.stderr)
        return 2
    try:
        config = load_config(args.config)
        config = apply_cli_overrides(config, mode=args.mode,
                                     sweep=args.sweep, out_dir=args.out)
    except ValueError as exc:
        print(f"[config] {exc}", file=sys.stderr)
        return 2

    try:
        bundle = runner.run(config, threads=args.threads)
    except runner.StageError as exc:
        print(str(exc), file=sys.stderr)
        return 1

    print(f"wrote {bundle['out_dir']}")
    if "records" in bundle:
        for record in bundle["records"]:
            print("  " + _format_record(record))
    if "fock_report" in bundle:
        print(f"  exact-oracle report: {bundle['fock_report']}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
