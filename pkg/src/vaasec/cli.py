"""Command line: ``simulate``, ``single`` and ``verify``."""
from __future__ import annotations

import argparse
import logging
import sys

from . import harness as H
from .scenario import generate_channels

log = logging.getLogger("vaasec")


def _algorithms(text: str | None):
    if text is None:
        return None
    algs = tuple(a.strip() for a in text.split(",") if a.strip())
    bad = [a for a in algs if a not in H.ALGORITHMS]
    if bad:
        raise argparse.ArgumentTypeError(f"unknown algorithms: {bad}")
    return algs


def _campaign(args) -> H.Campaign:
    c = H.load_config(args.config) if args.config else H.Campaign()
    return H.with_overrides(c, seed=args.seed, out_dir=args.out,
                            algorithms=_algorithms(args.algorithms))


def cmd_simulate(args) -> int:
    c = _campaign(args)
    log.info("campaign: axis %s values %s algorithms %s, %d realizations",
             c.axis, list(c.values), list(c.algorithms), c.realizations)
    res = H.run_campaign(c, jobs=args.jobs)
    log.info("wrote %s and %s", c.out, H.mean_path(c.out))
    for m in res.means():
        log.info("%-10s %-10s R_S %.4f  R_C %.4f  objective %.4f", m["sweep_value"],
                 m["algorithm"], m["secrecy_rate_mean"], m["cue_rate_mean"],
                 m["weighted_objective_mean"])
    return 2 if res.partial_failure else 0


def cmd_single(args) -> int:
    c = _campaign(args)
    cfg = c.config_at(c.values[0]) if c.axis not in ("iteration",) else c.base
    ch = generate_channels(cfg, c.base_seed)
    log.info("seed %d, K=%d M=%d N=%d L=%d, P_max=%.4g, P_B=%.4g, alpha=%.2f",
             c.base_seed, cfg.K, cfg.M, cfg.N, cfg.L, cfg.P_max, cfg.P_B, cfg.alpha)
    failed = False
    for alg in c.algorithms:
        log.info("-- %s", alg)
        sol = H.run_algorithm(alg, ch, cfg, log=log.info)
        r = sol.rates
        log.info("%s: status %s, iterations %d, R_S %.6f (claimed %.6f), "
                 "R_C %.6f (claimed %.6f), objective %.6f", alg, sol.status,
                 sol.iterations, r.secrecy_rate, sol.R_S, r.cue_rate, sol.R_C,
                 r.weighted(cfg.alpha))
        failed |= sol.status.startswith(H.FAILED)
    return 2 if failed else 0


def cmd_verify(args) -> int:
    from .verify import run_all
    return 0 if run_all(print) else 2


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="vaasec", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)
    for name, fn, helptext in (
            ("simulate", cmd_simulate, "run a campaign from a config file"),
            ("single", cmd_single, "one realization with a per-iteration log"),
            ("verify", cmd_verify, "run the invariant and oracle checks")):
        s = sub.add_parser(name, help=helptext)
        s.set_defaults(fn=fn)
        if name != "verify":
            s.add_argument("--config", help="YAML campaign file")
            s.add_argument("--seed", type=int, help="base seed (u64)")
            s.add_argument("--out", help="output directory")
            s.add_argument("--algorithms", help="comma list of normal,worst,suboptimal")
            s.add_argument("--jobs", type=int, default=1, help="worker processes")
    return p


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(message)s", stream=sys.stderr)
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (OSError, ValueError, argparse.ArgumentTypeError) as err:
        log.error("error: %s", err)
        return 1


if __name__ == "__main__":
    sys.exit(main())
