"""Command line entry point: ``gdwave <problem> --config file.json``."""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys

PROBLEMS = ("project-test", "constants", "conservation", "energy", "box-convergence",
            "dt-compare", "spectrum", "disk", "inclusion")


def _threads(n: int):
    # only effective before numpy is first imported
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ[var] = str(n)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gdwave", description=__doc__)
    p.add_argument("problem", choices=PROBLEMS)
    p.add_argument("--config", help="JSON file with RunConfig fields")
    p.add_argument("--level", type=int, help="run a single refinement level")
    p.add_argument("--out", help="output directory for CSV files and manifest")
    p.add_argument("--seed", type=int)
    p.add_argument("--threads", type=int, help="BLAS thread count")
    return p


def load_config(args):
    from gdwave.harness import RunConfig

    data = {}
    if args.config:
        with open(args.config) as fh:
            data = json.load(fh)
    if data.get("problem", args.problem) != args.problem:
        raise ValueError(f"config problem {data['problem']!r} does not match {args.problem!r}")
    data["problem"] = args.problem
    if args.level is not None:
        data["start_level"] = args.level
        data["levels"] = 1
    if args.out is not None:
        data["output"] = args.out
    if args.seed is not None:
        data["seed"] = args.seed
    return RunConfig.from_dict(data)


def _show(report):
    for name, table in report.tables.items():
        if len(report.tables) > 1:
            print(f"[{name}]")
        print(",".join(table.header))
        rows = table.rows if len(table.rows) <= 40 else table.rows[:5] + [("...",)] + table.rows[-5:]
        for row in rows:
            print(",".join(f"{v:.6g}" if isinstance(v, float) and not math.isnan(v) else str(v)
                           for v in row))


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.threads:
        _threads(args.threads)
    try:
        cfg = load_config(args)
    except (ValueError, TypeError, OSError) as exc:
        print(f"gdwave: {exc}", file=sys.stderr)
        return 2
    from gdwave.harness import run

    logging.basicConfig(level=logging.INFO, format="%(message)s", stream=sys.stderr)
    report = run(cfg)
    _show(report)
    if cfg.output:
        print(f"wrote {cfg.output}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
