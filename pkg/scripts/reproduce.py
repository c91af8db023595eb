"""Run the experiment configs in ``scripts/configs`` and write CSV reports.

    python scripts/reproduce.py                  # everything except inclusion
    python scripts/reproduce.py disk energy      # selected problems
    python scripts/reproduce.py --all --out results

Each problem writes ``<out>/<problem>/`` with CSV tables and a manifest.
The inclusion study is excluded unless named or ``--all`` is given; its
reduced tier takes hours on one core.
"""

import argparse
import logging
import time
from pathlib import Path

from gdwave.harness import RunConfig, run

CONFIGS = Path(__file__).parent / "configs"


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("problems", nargs="*", help="config names (default: all but inclusion)")
    p.add_argument("--all", action="store_true", help="include the inclusion study")
    p.add_argument("--out", default="results", help="output root directory")
    args = p.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(message)s")

    names = args.problems or sorted(c.stem for c in CONFIGS.glob("*.json")
                                    if args.all or c.stem != "inclusion")
    for name in names:
        cfg = RunConfig.from_json(CONFIGS / f"{name}.json")
        cfg = cfg.replace(output=str(Path(args.out) / name))
        t0 = time.perf_counter()
        report = run(cfg)
        logging.info("%s done in %.1f s: %s", name, time.perf_counter() - t0, report.summary)


if __name__ == "__main__":
    main()
