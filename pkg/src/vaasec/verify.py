"""Fast invariant and oracle checks runnable from the command line."""
from __future__ import annotations

import numpy as np
from scipy.optimize import minimize_scalar

from . import rates as R
from . import suboptimal as so
from .conic import ConicProgram, add_exp_cone_soc
from .linalg import gsvd
from .normal_case import solve_normal
from .scenario import SystemConfig, generate_channels
from .worst_case import solve_inner


def macro_min_a(phi: float, U: int = 6) -> float:
    """Smallest a admitted by the exponential macro at a fixed phi."""
    p = ConicProgram("macro")
    a = p.real("a")
    add_exp_cone_soc(p, a, phi, U)
    p.maximize(a * -1.0)
    res = p.solve()
    if not res.ok:
        raise RuntimeError(f"macro program failed: {res.status}")
    return float(res.value(a))


def check_macro() -> tuple[bool, str]:
    errs = [abs(macro_min_a(phi) - np.expm1(phi)) for phi in (-2, -1, 0, 1, 2)]
    return max(errs) <= 1e-4, f"max |a - (e^phi - 1)| = {max(errs):.2e}"


def check_gsvd(trials: int = 50) -> tuple[bool, str]:
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(trials):
        p = int(rng.integers(1, 5))
        m, n = int(rng.integers(1, 6)), int(rng.integers(1, 6))
        if m + n < p:
            continue
        fh = rng.standard_normal((m, p)) + 1j * rng.standard_normal((m, p))
        eh = rng.standard_normal((n, p)) + 1j * rng.standard_normal((n, p))
        g = gsvd(fh, eh)
        worst = max(worst, np.abs(g.U @ g.C @ g.X.conj().T - fh).max(),
                    np.abs(g.V @ g.S @ g.X.conj().T - eh).max())
    return worst <= 1e-10, f"max reconstruction error {worst:.2e}"


def check_theta(trials: int = 200) -> tuple[bool, str]:
    cfg = SystemConfig.from_db(20, 40, K=15, M=5, N=5, L=5)
    worst = 0.0
    for s in range(trials):
        c = cfg.with_(alpha=float(np.random.default_rng(s).uniform(0.05, 0.95)))
        plan, _ = so.plan_case_two(generate_channels(c, s), c)
        res = minimize_scalar(lambda t: -so.theta_objective(t, plan.coeffs),
                              bounds=(1e-12, 1.0), method="bounded",
                              options={"xatol": 1e-10})
        worst = max(worst, abs(res.x - plan.theta))
    return worst <= 1e-5, f"max |theta_closed - theta_numeric| = {worst:.2e}"


def check_null_space(trials: int = 20) -> tuple[bool, str]:
    worst = 0.0
    one = SystemConfig.from_db(20, 40, K=6, M=5, N=2, L=2)
    two = SystemConfig.from_db(20, 40, K=15, M=5, N=5, L=5)
    for s in range(trials):
        ch = generate_channels(one, s)
        plan, _ = so.plan_case_one(ch, one)
        worst = max(worst, np.abs(ch.G_EC.conj().T @ plan.w).max(),
                    np.abs(ch.G_BN.conj().T @ plan.w_B).max())
        ch = generate_channels(two, s)
        plan, _ = so.plan_case_two(ch, two)
        worst = max(worst, abs(np.vdot(ch.h_C, plan.w)),
                    np.abs(ch.G_BNE.conj().T @ plan.w_B).max(),
                    np.abs(ch.G_BNC.conj().T @ plan.w_B_AN).max())
    return worst <= 1e-8, f"max invisible amplitude {worst:.2e}"


def check_sca(seeds: int = 3) -> tuple[bool, str]:
    cfg = SystemConfig.from_db(20, 40, K=6, M=4, N=3, L=3)
    drop, gap, feas = 0.0, 0.0, True
    for s in range(seeds):
        sol = solve_normal(generate_channels(cfg, 1000 + s), cfg)
        h = np.asarray(sol.history)
        if h.size > 1:
            drop = max(drop, float(-np.diff(h).min()))
        gap = max(gap, abs(sol.R_S - sol.rates.secrecy_rate))
        feas &= R.is_power_feasible(cfg, sol)
    ok = drop <= 1e-7 and gap <= 1e-3 and feas
    return ok, f"largest drop {drop:.1e}, claim gap {gap:.1e}, feasible {feas}"


def check_lmi() -> tuple[bool, str]:
    cfg = SystemConfig.from_db(20, 40, K=6, M=4, N=3, L=3)
    ch = generate_channels(cfg, 1000)
    beta = 0.5
    rel = solve_inner(ch, cfg, beta)
    GB, GE = ch.G_B, ch.G_E
    lmi = (np.expm1(beta) * (GB.conj().T @ (rel.W_B + rel.Q) @ GB + np.eye(cfg.L))
           - GE.conj().T @ rel.W @ GE)
    lam = float(np.linalg.eigvalsh(0.5 * (lmi + lmi.conj().T)).min())
    return lam >= -1e-8, f"leakage LMI min eigenvalue {lam:.2e}"


CHECKS = {
    "exp-macro accuracy": check_macro,
    "gsvd reconstruction": check_gsvd,
    "theta closed form": check_theta,
    "null-space invariants": check_null_space,
    "sca monotone and feasible": check_sca,
    "leakage lmi": check_lmi,
}


def run_all(out=print) -> bool:
    ok_all = True
    for name, fn in CHECKS.items():
        try:
            ok, msg = fn()
        except Exception as err:  # a crashing check is a failing check
            ok, msg = False, f"{type(err).__name__}: {err}"
        out(f"{'PASS' if ok else 'FAIL'}  {name}: {msg}")
        ok_all &= ok
    return ok_all
