"""Produce the CSV data of the sweep configs in configs/.

Usage: python3 scripts/run_figures.py [names ...] [--out results] [--jobs 4]
Without names every config except the full-size profile runs.
Plotting is left to external tools.
"""
from __future__ import annotations

import argparse
import logging
import sys
import time
from dataclasses import replace
from pathlib import Path

from vaasec import harness as H

ROOT = Path(__file__).resolve().parent.parent
log = logging.getLogger("figures")


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default=str(ROOT / "results"))
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("names", nargs="*", help="config stems, e.g. pmax_alpha0.5")
    ap.add_argument("--realizations", type=int, help="override the per-config count")
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO, format="%(message)s", stream=sys.stderr)

    paths = sorted((ROOT / "configs").glob("*.yaml"))
    if args.names:
        paths = [p for p in paths if p.stem in args.names]
        missing = set(args.names) - {p.stem for p in paths}
        if missing:
            ap.error(f"unknown configs: {sorted(missing)}")
    else:
        paths = [p for p in paths if p.stem != "full"]
    failed = False
    for p in paths:
        c = H.with_overrides(H.load_config(p), out_dir=args.out)
        if args.realizations:
            c = replace(c, realizations=args.realizations)
        t0 = time.perf_counter()
        res = H.run_campaign(c, jobs=args.jobs)
        failed |= res.partial_failure
        log.info("%-22s %4d rows  %6.1f s  -> %s", p.stem, len(res.records),
                 time.perf_counter() - t0, c.out)
    return 2 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
