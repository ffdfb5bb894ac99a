"""Command line entry point: ``cgbkit run <config>`` and ``cgbkit list-models``."""

import argparse
import sys

from . import config as cf
from .suites import SUITE_FUNCTIONS, format_table, run_suites, write_reports

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


def catalog():
    lines = ["Ambient models:"]
    lines += [f"  {k:<22} {v}" for k, v in cf.MODELS.items()]
    lines.append("Surface families:")
    lines += [f"  {k:<22} {v}" for k, v in cf.SURFACES.items()]
    lines.append("Suites:")
    lines += [f"  {k}" for k in cf.SUITES]
    lines.append("Default tolerances:")
    lines += [f"  {k:<22} {v:g}" for k, v in cf.DEFAULT_TOLERANCES.items()]
    lines.append(f"Dimension guard: n <= {cf.tol.MAX_DIMENSION}")
    return "\n".join(lines)


def build_parser():
    p = argparse.ArgumentParser(prog="cgbkit", description="Chern-Gauss-Bonnet verification runs.")
    sub = p.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run the suites named in a config file")
    run.add_argument("config", help="TOML run configuration")
    run.add_argument("--suite", action="append", choices=list(SUITE_FUNCTIONS), help="override suites (repeatable)")
    run.add_argument("--out", help="output directory (default from config)")
    run.add_argument("--seed", type=int, help="random seed (default from config)")
    sub.add_parser("list-models", help="print built-in charts, surfaces and suites")
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    if args.command == "list-models":
        print(catalog())
        return EXIT_OK
    try:
        cfg = cf.load_config(args.config)
    except cf.ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"config error: {args.config}: {exc.strerror}", file=sys.stderr)
        return EXIT_USAGE
    records = run_suites(cfg, args.suite, args.seed)
    paths = write_reports(records, args.out or cfg.out_dir, cfg.formats)
    print(format_table(records))
    for p in paths:
        print(f"wrote {p}")
    verdicts = [r.verdict for r in records]
    if "inconclusive" in verdicts:
        print(f"{verdicts.count('inconclusive')} inconclusive record(s)")
    return EXIT_FAIL if "fail" in verdicts else EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
