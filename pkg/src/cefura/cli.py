"""Command line: ``cefura run`` for one configuration, ``cefura sweep`` over an axis."""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .config import ConfigError, SystemConfig, load_config
from .harness import normalize_axis, parse_axis, run_sweep, write_rows

log = logging.getLogger("cefura")

DEFAULT_TRIALS = 1000


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="TOML configuration file (defaults: reference parameters)")
    common.add_argument("--seed", type=int, help="master seed (overrides the config)")
    common.add_argument("--trials", type=int, help=f"trials per point (default {DEFAULT_TRIALS})")
    common.add_argument("--out", help="CSV output path (default: stdout)")
    common.add_argument("--threads", type=int, default=1, help="worker processes")
    common.add_argument("--no-timing", action="store_true",
                        help="write 0 in mean_runtime_ms so reruns are byte-identical")
    common.add_argument("-v", "--verbose", action="count", default=0)

    parser = argparse.ArgumentParser(prog="cefura", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("run", parents=[common], help="simulate a single configuration")
    sweep = sub.add_parser("sweep", parents=[common], help="simulate every point of an axis grid")
    sweep.add_argument("--axis", action="append", default=[], metavar="NAME=v1,v2",
                       help="K, D, MN (e.g. 49x2) or pp_kind; repeatable, "
                            "otherwise taken from the config's [sweep] table")
    return parser


def _axes_from_table(table: dict) -> list:
    axes = []
    for name, values in table.items():
        if name == "trials":
            continue
        if not isinstance(values, list):
            values = [values]
        axes.append(normalize_axis(name, values))
    return axes


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")

    try:
        if args.config:
            cfg, sweep_table = load_config(args.config)
        else:
            cfg, sweep_table = SystemConfig(), {}
        if args.seed is not None:
            if args.seed < 0:
                raise ConfigError("seed must be non-negative")
            cfg = cfg.replace(seed=args.seed)
        trials = args.trials if args.trials is not None else int(
            sweep_table.get("trials", DEFAULT_TRIALS))
        if trials < 1:
            raise ConfigError("trials must be >= 1")
        if args.threads < 1:
            raise ConfigError("threads must be >= 1")
        if args.command == "sweep":
            axes = [parse_axis(a) for a in args.axis] or _axes_from_table(sweep_table)
        else:
            axes = []
        if args.out:
            # open before simulating so a bad path fails fast
            path = Path(args.out)
            try:
                fh = path.open("w", newline="")
            except OSError as exc:
                raise OSError(f"cannot write CSV to {path}: {exc}") from exc
        else:
            fh = sys.stdout
        try:
            rows = run_sweep(cfg, axes, trials, threads=args.threads)
            write_rows(fh, rows, timing=not args.no_timing)
        finally:
            if fh is not sys.stdout:
                fh.close()
    except ConfigError as exc:
        print(f"cefura: configuration error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"cefura: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
