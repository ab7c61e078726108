"""Command-line interface.

Subcommands:

* ``generate``  -- run one transference construction, write the output sets
  (qmcpts v1) and an audit manifest.
* ``stardisc``  -- exact star discrepancy of a point-set file (d <= 3), or
  a labeled uniform-grid lower bound for higher dimensions.
* ``table1``    -- the star-discrepancy comparison table as CSV.
* ``bench``     -- integration benchmark (raw + summary CSVs).
* ``audit``     -- transference-identity audit of a generate manifest.

Exit codes: 0 success, 1 audit/acceptance failure, 2 usage or config error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import experiments
from .experiments import ConfigError
from .metrics import ExactModeUnavailableError, grid_star_discrepancy, star_discrepancy_exact
from .pointset import read_pointset
from .regions import read_regions

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_USAGE = 2


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qmctransfer",
        description="QMC point sets from balanced colorings of dyadic incidence systems",
    )
    parser.add_argument("--config", type=Path, help="experiment config (JSON)")
    parser.add_argument("--out", type=Path, default=Path("out"), help="output directory")
    parser.add_argument("--workers", type=int, default=1, help="parallel workers")
    parser.add_argument("--seed", type=int, default=2025, help="master seed")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("generate", help="construct point sets and an audit manifest")

    p_disc = sub.add_parser("stardisc", help="star discrepancy of a qmcpts file")
    p_disc.add_argument("file", type=Path)
    p_disc.add_argument("--resolution", type=int, default=512,
                        help="grid resolution for the d > 3 lower bound")

    sub.add_parser("table1", help="star-discrepancy table (CSV)")

    sub.add_parser("bench", help="integration benchmark (CSV)")

    p_audit = sub.add_parser("audit", help="verify a manifest's transference identity")
    p_audit.add_argument("manifest", type=Path)
    p_audit.add_argument("regions", type=Path)
    return parser


def _need_config(args) -> experiments.ExperimentConfig:
    if args.config is None:
        raise ConfigError("this subcommand needs --config <path>")
    return experiments.load_config(args.config)


def _cmd_generate(args) -> int:
    config = _need_config(args)
    out = Path(config.out_dir) if config.out_dir else args.out
    files = experiments.cmd_generate(config, out)
    print(f"wrote {len(files)} point sets and manifest.json to {out}")
    return EXIT_OK


def _cmd_stardisc(args) -> int:
    ps = read_pointset(args.file)
    try:
        report = star_discrepancy_exact(ps)
    except ExactModeUnavailableError:
        report = grid_star_discrepancy(ps, resolution=args.resolution)
    corner = " ".join(f"{c:.6g}" for c in report.argmax_corner)
    print(f"{report.value:.9f}  method={report.method}  corner=({corner})")
    return EXIT_OK


def _cmd_table1(args) -> int:
    path = experiments.run_table(
        args.out, seeds=16, master_seed=args.seed, workers=args.workers
    )
    print(f"wrote {path}")
    return EXIT_OK


def _cmd_bench(args) -> int:
    config = _need_config(args)
    out = Path(config.out_dir) if config.out_dir else args.out
    raw, summary = experiments.run_bench(config, out, workers=args.workers)
    print(f"wrote {raw} and {summary}")
    return EXIT_OK


def _cmd_audit(args) -> int:
    if not args.manifest.exists():
        print(f"manifest not found: {args.manifest}", file=sys.stderr)
        return EXIT_USAGE
    trail_dim = None
    try:
        import json

        trail_dim = json.loads(args.manifest.read_text())["config"]["d"]
    except Exception as exc:
        print(f"cannot read manifest: {exc}", file=sys.stderr)
        return EXIT_USAGE
    regions = read_regions(args.regions, trail_dim)
    worst, ok, digest_ok = experiments.cmd_audit(args.manifest, regions)
    if not regions:
        print("no regions supplied; max violation 0 (vacuous)")
        return EXIT_OK
    if not digest_ok:
        print("warning: coloring digest mismatch (manifest edited?)", file=sys.stderr)
    print(f"max identity violation over {len(regions)} regions: {worst:.3e}")
    return EXIT_OK if ok else EXIT_FAIL


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    handlers = {
        "generate": _cmd_generate,
        "stardisc": _cmd_stardisc,
        "table1": _cmd_table1,
        "bench": _cmd_bench,
        "audit": _cmd_audit,
    }
    try:
        return handlers[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
