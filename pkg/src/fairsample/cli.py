"""Command-line entry points: simulate a run, analyze it, summarize it.

    fairsample simulate --config run.json [--output-dir DIR] [--jobs N]
    fairsample analyze --manifest DIR/manifest.json [--window TICKS]
                       [--alpha-level 0.01] [--output-dir DIR] [--jobs N]
    fairsample report --dir DIR

Exit codes: 0 success, 2 configuration error, 3 data error (missing or
corrupt files), 4 degenerate statistics.  The default output directory
for `simulate` is taken from --output-dir, then the config's
``output_dir`` field, then the FAIRSAMPLE_OUTPUT_DIR environment
variable.
"""

from __future__ import annotations

import argparse
import os
import sys

from .config import ConfigError, load_config
from .fits import DegenerateWeights
from .pipeline import analyze_run, simulate_run, write_report
from .timetags import TtgFormatError

OUTPUT_DIR_ENV = "FAIRSAMPLE_OUTPUT_DIR"

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_STATISTICS = 4


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fairsample",
        description="Simulate entangled-pair runs and test fair sampling.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="simulate a run to TTG1 files")
    p_sim.add_argument("--config", required=True, help="JSON run configuration")
    p_sim.add_argument(
        "--output-dir",
        default=None,
        help="run directory (default: config output_dir, then "
        f"${OUTPUT_DIR_ENV})",
    )
    p_sim.add_argument("--jobs", type=int, default=None, help="parallel workers")

    p_ana = sub.add_parser("analyze", help="analyze a simulated run")
    p_ana.add_argument("--manifest", required=True, help="run manifest path")
    p_ana.add_argument(
        "--window",
        type=int,
        default=None,
        help="coincidence window in ticks (default: value from the run config)",
    )
    p_ana.add_argument(
        "--alpha-level",
        type=float,
        default=0.01,
        help="significance threshold for the no-signalling verdict",
    )
    p_ana.add_argument(
        "--output-dir", default=None, help="where to write analysis tables"
    )
    p_ana.add_argument("--jobs", type=int, default=None, help="parallel workers")

    p_rep = sub.add_parser("report", help="summarize an analyzed run")
    p_rep.add_argument("--dir", required=True, help="analysis output directory")
    return parser


def _cmd_simulate(args: argparse.Namespace) -> int:
    cfg = load_config(args.config)
    out_dir = args.output_dir or cfg.output_dir or os.environ.get(OUTPUT_DIR_ENV)
    if not out_dir:
        raise ConfigError(
            "output_dir",
            f"not set (use --output-dir, the config field, or ${OUTPUT_DIR_ENV})",
        )
    manifest = simulate_run(cfg, out_dir, jobs=args.jobs)
    print(f"wrote {cfg.n_points} point(s); manifest: {manifest}")
    return EXIT_OK


def _cmd_analyze(args: argparse.Namespace) -> int:
    result = analyze_run(
        args.manifest,
        window_ticks=args.window,
        alpha_level=args.alpha_level,
        output_dir=args.output_dir,
        jobs=args.jobs,
    )
    for name, path in result.files.items():
        print(f"{name}: {path}")
    if result.fit_note:
        print(result.fit_note)
    elif result.nosignalling is not None:
        verdict = "consistent" if result.nosignalling.consistent else "violated"
        print(f"no-signalling verdict (distant marginals): {verdict}")
    for index, reason in result.skipped:
        print(f"point {index} skipped in fits: {reason}", file=sys.stderr)
    return EXIT_OK


def _cmd_report(args: argparse.Namespace) -> int:
    path = write_report(args.dir)
    print(path.read_text(encoding="utf-8"), end="")
    print(f"written: {path}", file=sys.stderr)
    return EXIT_OK


def main(argv: "list[str] | None" = None) -> int:
    args = _build_parser().parse_args(argv)
    handlers = {
        "simulate": _cmd_simulate,
        "analyze": _cmd_analyze,
        "report": _cmd_report,
    }
    try:
        return handlers[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DegenerateWeights as exc:
        print(f"statistics error: {exc}", file=sys.stderr)
        return EXIT_STATISTICS
    except TtgFormatError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except FileNotFoundError as exc:
        print(f"data error: no analysis artifacts found ({exc})", file=sys.stderr)
        return EXIT_DATA
    except (OSError, ValueError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
