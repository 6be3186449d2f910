"""Monte Carlo campaigns over seeded channel draws, with CSV output."""
from __future__ import annotations

import csv
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np
import yaml

from . import rates as R
from .normal_case import ScaOptions, solve_normal
from .scenario import SystemConfig, db_to_linear, generate_channels
from .suboptimal import SuboptOptions, plan_suboptimal
from .worst_case import WorstOptions, solve_worst

ALGORITHMS = ("normal", "worst", "suboptimal")
AXES = ("P_max_db", "M", "L", "N", "alpha", "iteration")
HEADER = ("sweep_value", "algorithm", "seed", "secrecy_rate_nats",
          "secrecy_rate_bits", "cue_rate_nats", "weighted_objective",
          "iterations", "rank_one", "subcase", "status", "wall_ms")
MEAN_HEADER = ("sweep_value", "algorithm", "count", "secrecy_rate_mean",
               "secrecy_rate_stderr", "cue_rate_mean", "cue_rate_stderr",
               "weighted_objective_mean", "weighted_objective_stderr")
FAILED = ("error", "infeasible", "infeasible-init", "subcase2-infeasible")


@dataclass
class Campaign:
    """One sweep axis, a set of algorithms and paired seeds base_seed + i."""

    base: SystemConfig = field(default_factory=SystemConfig)
    axis: str = "P_max_db"
    values: tuple = (0.0, 10.0, 20.0, 30.0)
    algorithms: tuple = ALGORITHMS
    realizations: int = 20
    base_seed: int = 0
    out: str = "results/campaign.csv"
    iterations: int = 10  # horizon of the iteration axis

    def __post_init__(self):
        self.values = tuple(self.values)
        self.algorithms = tuple(self.algorithms)
        if self.realizations < 1:
            raise ValueError("realizations must be >= 1")
        if self.axis not in AXES:
            raise ValueError(f"unknown sweep axis {self.axis!r}")
        bad = [a for a in self.algorithms if a not in ALGORITHMS]
        if bad:
            raise ValueError(f"unknown algorithms {bad}")
        if self.axis == "iteration":
            self.values = tuple(range(1, self.iterations + 1))
        for v in self.values:
            self.config_at(v)  # validates every sweep point

    def config_at(self, value) -> SystemConfig:
        if self.axis == "P_max_db":
            return self.base.with_(P_max=db_to_linear(float(value)))
        if self.axis in ("M", "L", "N"):
            return self.base.with_(**{self.axis: int(value)})
        if self.axis == "alpha":
            return self.base.with_(alpha=float(value))
        return self.base


@dataclass
class Record:
    sweep_value: float
    algorithm: str
    seed: int
    secrecy_rate_nats: float
    secrecy_rate_bits: float
    cue_rate_nats: float
    weighted_objective: float
    iterations: int
    rank_one: bool | None
    subcase: int
    status: str
    wall_ms: float

    @property
    def failed(self) -> bool:
        return self.status.startswith(FAILED)


@dataclass
class CampaignResult:
    campaign: Campaign
    records: list[Record]

    def means(self) -> list[dict]:
        groups: dict[tuple, list[Record]] = {}
        for r in self.records:
            groups.setdefault((r.sweep_value, r.algorithm), []).append(r)
        out = []
        for (v, alg), rs in sorted(groups.items(), key=lambda kv: _order_key(kv[0])):
            row = {"sweep_value": v, "algorithm": alg, "count": len(rs)}
            for col, name in (("secrecy_rate_nats", "secrecy_rate"),
                              ("cue_rate_nats", "cue_rate"),
                              ("weighted_objective", "weighted_objective")):
                x = np.array([getattr(r, col) for r in rs], float)
                x = x[np.isfinite(x)]
                row[f"{name}_mean"] = float(x.mean()) if x.size else math.nan
                row[f"{name}_stderr"] = (float(x.std(ddof=1) / np.sqrt(x.size))
                                         if x.size > 1 else 0.0)
            out.append(row)
        return out

    def mean_of(self, algorithm: str, column: str = "weighted_objective") -> dict:
        """{sweep value: mean of a column} for one algorithm."""
        return {m["sweep_value"]: m[f"{column}_mean"] for m in self.means()
                if m["algorithm"] == algorithm}

    @property
    def partial_failure(self) -> bool:
        return any(r.failed for r in self.records)


def _order_key(key):
    v, alg = key
    return (float(v), ALGORITHMS.index(alg) if alg in ALGORITHMS else len(ALGORITHMS), alg)


def run_algorithm(name: str, ch, cfg: SystemConfig, log=None) -> R.BeamformingSolution:
    if name == "normal":
        return solve_normal(ch, cfg, ScaOptions(), log)
    if name == "worst":
        return solve_worst(ch, cfg, WorstOptions(), log)
    if name == "suboptimal":
        return plan_suboptimal(ch, cfg, SuboptOptions())
    raise ValueError(f"unknown algorithm {name!r}")


def _record(value, alg, seed, cfg, sol: R.BeamformingSolution, wall) -> Record:
    rs, rc = sol.rates.secrecy_rate, sol.rates.cue_rate
    return Record(value, alg, seed, rs, rs / np.log(2.0), rc,
                  cfg.alpha * rs + (1.0 - cfg.alpha) * rc, int(sol.iterations),
                  sol.rank_one, int(sol.subcase), sol.status, wall)


def _failure(value, alg, seed, err: Exception) -> Record:
    msg = f"error: {type(err).__name__}"
    return Record(value, alg, seed, math.nan, math.nan, math.nan, math.nan, 0,
                  None, 0, msg, 0.0)


def _task(args) -> list[Record]:
    """All algorithms on one (sweep value, seed) pair: one shared channel."""
    camp, value, seed = args
    cfg = camp.config_at(value)
    ch = generate_channels(cfg, seed)
    out = []
    for alg in camp.algorithms:
        t0 = time.perf_counter()
        try:
            sol = run_algorithm(alg, ch, cfg)
            out.append(_record(value, alg, seed, cfg, sol,
                               1e3 * (time.perf_counter() - t0)))
        except Exception as err:  # recorded per row; the campaign goes on
            out.append(_failure(value, alg, seed, err))
    return out


def _iteration_task(args) -> list[Record]:
    """Per-iteration objective of the normal-case SCA (convergence profile)."""
    camp, _, seed = args
    cfg = camp.base
    ch = generate_channels(cfg, seed)
    t0 = time.perf_counter()
    try:
        sol = solve_normal(ch, cfg)
    except Exception as err:
        return [_failure(j, "normal", seed, err) for j in camp.values]
    wall = 1e3 * (time.perf_counter() - t0)
    hist = sol.history or [math.nan]
    out = []
    for j in camp.values:
        obj = hist[min(int(j), len(hist)) - 1]
        out.append(Record(j, "normal", seed, sol.rates.secrecy_rate,
                          sol.rates.secrecy_rate / np.log(2.0), sol.rates.cue_rate,
                          float(obj), int(sol.iterations), None, 0, sol.status, wall))
    return out


def _check_writable(path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    if not os.access(path.parent, os.W_OK) or (path.exists() and not os.access(path, os.W_OK)):
        raise OSError(f"output path is not writable: {path}")


def run_campaign(c: Campaign, jobs: int = 1, write: bool = True) -> CampaignResult:
    """Run every (value, seed) task; rows are sorted so output is order-free."""
    if write:
        _check_writable(Path(c.out))
    seeds = [c.base_seed + i for i in range(c.realizations)]
    if c.axis == "iteration":
        tasks = [(c, None, s) for s in seeds]
        fn = _iteration_task
    else:
        tasks = [(c, v, s) for v in c.values for s in seeds]
        fn = _task
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            chunks = list(pool.map(fn, tasks))
    else:
        chunks = [fn(t) for t in tasks]
    records = [r for chunk in chunks for r in chunk]
    records.sort(key=lambda r: (*_order_key((r.sweep_value, r.algorithm)), r.seed))
    result = CampaignResult(c, records)
    if write:
        emit_csv(result, c.out)
    return result


# ---------------------------------------------------------------- CSV

def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, bool):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return "nan" if not np.isfinite(x) else f"{float(x):.9g}"
    return str(x)


def mean_path(path) -> Path:
    p = Path(path)
    return p.with_name(p.stem + "_mean.csv")


def emit_csv(r: CampaignResult, path) -> None:
    """Per-row file plus an aggregate ``<stem>_mean.csv``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(HEADER)
        for rec in r.records:
            w.writerow([_fmt(getattr(rec, h)) for h in HEADER])
    with open(mean_path(path), "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(MEAN_HEADER)
        for m in r.means():
            w.writerow([_fmt(m[h]) for h in MEAN_HEADER])


def read_csv(path) -> list[Record]:
    """Parse a per-row file back into records."""
    ints, strs = {"seed", "iterations", "subcase"}, {"algorithm", "status"}
    out = []
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            kw = {}
            for k, v in row.items():
                if k == "rank_one":
                    kw[k] = None if v == "" else v == "1"
                elif k in ints:
                    kw[k] = int(v)
                elif k in strs:
                    kw[k] = v
                else:
                    kw[k] = float(v)
            out.append(Record(**kw))
    return out


# ---------------------------------------------------------------- config

SYSTEM_KEYS = ("K", "M", "N", "L", "P_max_db", "P_B_db", "alpha", "chi")
CAMPAIGN_KEYS = ("axis", "values", "algorithms", "realizations", "base_seed",
                 "out", "iterations")


def load_config(path) -> Campaign:
    """YAML with a ``system`` block (SystemConfig keys, powers in dB) and a
    ``campaign`` block (axis, values, algorithms, realizations, base_seed,
    out, iterations)."""
    with open(path, encoding="utf-8") as fh:
        raw = yaml.safe_load(fh) or {}
    return campaign_from_dict(raw)


def campaign_from_dict(raw: dict) -> Campaign:
    sysd = dict(raw.get("system", {}))
    campd = dict(raw.get("campaign", {}))
    unknown = (set(sysd) - set(SYSTEM_KEYS)) | (set(campd) - set(CAMPAIGN_KEYS))
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    p_max = sysd.pop("P_max_db", 20.0)
    p_b = sysd.pop("P_B_db", 40.0)
    base = SystemConfig.from_db(p_max, p_b, **sysd)
    return Campaign(base=base, **campd)


def campaign_to_dict(c: Campaign) -> dict:
    b = c.base
    system = {"K": b.K, "M": b.M, "N": b.N, "L": b.L,
              "P_max_db": 10 * math.log10(b.P_max), "P_B_db": 10 * math.log10(b.P_B),
              "alpha": b.alpha, "chi": b.chi}
    camp = {k: (list(v) if isinstance(v, tuple) else v)
            for k, v in asdict(c).items() if k in CAMPAIGN_KEYS}
    return {"system": system, "campaign": camp}


def with_overrides(c: Campaign, seed=None, out_dir=None, algorithms=None) -> Campaign:
    kw = {}
    if seed is not None:
        kw["base_seed"] = int(seed)
    if out_dir is not None:
        kw["out"] = str(Path(out_dir) / Path(c.out).name)
    if algorithms is not None:
        kw["algorithms"] = tuple(algorithms)
    return replace(c, **kw) if kw else c
