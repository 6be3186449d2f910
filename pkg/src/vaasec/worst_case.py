"""Colluding-eavesdropper design by semidefinite relaxation.

The eavesdroppers act as one L-antenna receiver. With the leakage budget
beta fixed, the leakage constraint becomes the linear matrix inequality

    (e^beta - 1) (G_B^H W_B G_B + G_B^H Q G_B + I) - G_E^H W G_E  >= 0,

which implies the log-det leakage bound and is equivalent to it when W is
rank one. The rate ratios are handled by the AGM bound
x y <= (eta x)^2 / 2 + (y / eta)^2 / 2, refreshed after every solve, and an
outer one-dimensional search picks beta.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import rates as R
from .conic import ConicProgram, SolverOptions, add_exp_cone_soc, quad_trace, stack
from .linalg import dominant_rank_one, eig_ratio
from .normal_case import TIE_TOL, silent_design
from .scenario import ChannelRealization, SystemConfig

GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0
DECODE_MARGIN = 1e-9
RATIO_FLOOR = 1e-9


@dataclass
class WorstOptions:
    U: int = 6
    psi: float = 1e-3  # step of (W, W_B, Q) in budget units
    max_iter: int = 20
    grid: int = 24
    refine_tol: float = 1e-3  # golden-section bracket width in nats
    eta_init: float = 1.0
    eta_ladder: tuple = (1.0,)  # receiver multiplier scales tried by cold starts
    rescue_ladder: tuple = (4.0, 16.0, 64.0)  # used when no beta solves with eta_ladder
    warm_start: bool = True  # seed multipliers from the nearest solved beta
    randomizations: int = 100
    rank_tol: float = 1e-6
    tight_tol: float = 1e-5  # receiver counted tight when within this of phi
    solver: SolverOptions = field(default_factory=SolverOptions)


@dataclass
class WorstAux:
    """Auxiliary scalars of one inner program and its AGM multipliers."""

    varphi: float
    beta: float
    R_C: float
    a: float
    r: float
    eta0: float
    eta: np.ndarray


@dataclass
class RelaxedSolution:
    W: np.ndarray
    W_B: np.ndarray
    Q: np.ndarray
    objective: float
    aux: WorstAux
    status: str = "ok"
    iterations: int = 0
    history: list[float] = field(default_factory=list)
    subcase: int = 1

    @property
    def rank_one_W(self) -> bool:
        return eig_ratio(self.W) <= 1e-6

    @property
    def rank_one_W_B(self) -> bool:
        return eig_ratio(self.W_B) <= 1e-6


@dataclass
class InnerProgram:
    prog: ConicProgram
    W: object
    W_B: object
    Q: object
    varphi: object
    R_C: object
    a: object
    r: object


def beta_upper_bound(ch: ChannelRealization, cfg: SystemConfig) -> float:
    """Largest useful leakage budget: min_n log(1 + M P_max ||h_Dn||^2)."""
    g = np.sum(np.abs(ch.h_D) ** 2, axis=1)
    return float(np.min(np.log1p(cfg.M * cfg.P_max * g)))


def constraint_tally(cfg: SystemConfig, U: int = 6) -> dict:
    """Rows of the inner program per constraint family (cones as one row)."""
    macro = U + 5
    return {"elem": cfg.M, "power": 1, "leak": 1, "cue_exp": macro, "cue_agm": 1,
            "rx_exp": macro, "rx_agm": cfg.N, "psd": 3}


def _agm_rows(p, lhs, lhs_scale, x, y, eta, name):
    """lhs >= (eta x)^2 / 2 + (y / eta)^2 / 2 as a rotated cone, row-scaled."""
    s = np.sqrt(lhs_scale)
    p.add_rotated(lhs * (2.0 / lhs_scale), 1.0,
                  stack([x * (eta / s), y * (1.0 / (eta * s))]), name=name)


def build_inner_sdp(ch: ChannelRealization, cfg: SystemConfig, beta: float,
                    aux: WorstAux, subcase: int = 1,
                    opts: WorstOptions | None = None) -> InnerProgram:
    """Convex inner program for a fixed leakage budget and fixed multipliers.

    ``aux.a`` and ``aux.r`` are only used to center the exponential macros
    and to scale the SINR variables.
    """
    opts = opts or WorstOptions()
    if beta < 0:
        raise ValueError("beta must be non-negative")
    if aux.eta0 <= 0 or np.any(np.asarray(aux.eta) <= 0):
        raise ValueError("AGM multipliers must be positive")
    K, M, N, L = cfg.K, cfg.M, cfg.N, cfg.L
    p = ConicProgram(f"worst{subcase}")
    # covariances in units of their budgets, AN in noise units
    W = p.hermitian("W", M) * (cfg.P_max / M)
    W_B = p.hermitian("W_B", K) * cfg.P_B
    Q = p.hermitian("Q", K)
    varphi = p.real("varphi")
    R_C = p.real("R_C")

    def tr(X, h):
        return quad_trace(X, np.outer(h, np.conj(h)))

    for m in range(M):
        p.add_le(W[m, m].real * (M / cfg.P_max), 1.0, name=f"elem{m}")
    p.add_le(W_B.trace().real * (1.0 / cfg.P_B) + Q.trace().real * (1.0 / cfg.P_B),
             1.0, name="power")

    if L:
        GB, GE = ch.G_B, ch.G_E
        jam = GB.conj().T @ Q @ GB + np.eye(L)
        if subcase == 1:
            jam = jam + GB.conj().T @ W_B @ GB
        lmi = jam * np.expm1(beta) - GE.conj().T @ W @ GE
        scale = 1.0 + cfg.P_max * float(np.linalg.norm(GE, 2) ** 2)
        p.add_psd(lmi * (1.0 / scale), name="leak")

    # CUE: 1 + r >= e^R_C and Tr(H_BC W_B) >= r (interference + noise)
    r0 = max(aux.r, 0.0)
    rt = p.real("r_t")  # r / (1 + r0)
    r = rt * (1.0 + r0)
    add_exp_cone_soc(p, r, R_C, opts.U, name="cue_exp", center=np.log1p(r0))
    y0 = tr(Q, ch.h_BC) + tr(W, ch.h_C) + 1.0
    _agm_rows(p, tr(W_B, ch.h_BC), cfg.P_B * np.vdot(ch.h_BC, ch.h_BC).real,
              r, y0, aux.eta0, "cue_agm")

    # receivers: 1 + a >= e^varphi and Tr(H_Dn W) >= a (interference + noise)
    a0 = max(aux.a, 0.0)
    at = p.real("a_t")
    a = at * (1.0 + a0)
    add_exp_cone_soc(p, a, varphi, opts.U, name="rx_exp", center=np.log1p(a0))
    for n in range(N):
        yn = tr(W_B, ch.h_Bn[n]) + tr(Q, ch.h_Bn[n]) + 1.0
        _agm_rows(p, tr(W, ch.h_D[n]),
                  cfg.P_max * np.vdot(ch.h_D[n], ch.h_D[n]).real,
                  a, yn, float(aux.eta[n]), f"rx_agm{n}")

    p.maximize((varphi - beta) * cfg.alpha + R_C * (1.0 - cfg.alpha))
    return InnerProgram(p, W, W_B, Q, varphi, R_C, a, r)


def _interference(ch: ChannelRealization, W, W_B, Q):
    """(CUE, per-receiver) interference-plus-noise of a covariance triple."""
    def tr(X, h):
        return float(np.real(np.conj(h) @ X @ h))
    y0 = tr(Q, ch.h_BC) + tr(W, ch.h_C) + 1.0
    yn = np.array([tr(W_B, h) + tr(Q, h) + 1.0 for h in ch.h_Bn])
    return y0, yn


def _psd(X: np.ndarray) -> np.ndarray:
    lam, v = np.linalg.eigh(0.5 * (X + X.conj().T))
    return (v * np.clip(lam, 0.0, None)) @ v.conj().T


def solve_inner(ch: ChannelRealization, cfg: SystemConfig, beta: float,
                subcase: int = 1, opts: WorstOptions | None = None,
                log=None, init: WorstAux | None = None) -> RelaxedSolution | None:
    """AGM iterations at a fixed beta; None when the first program fails.

    Each refreshed multiplier makes the AGM bound tight at the previous
    solution, which therefore stays feasible: the objective never drops.
    ``init`` supplies starting multipliers (and macro centers); a start
    whose first program fails falls back to the default multipliers.
    """
    opts = opts or WorstOptions()
    if init is not None:
        warm = WorstAux(init.varphi, beta, init.R_C, init.a, init.r, init.eta0,
                        np.array(init.eta, float))
        out = _agm_loop(ch, cfg, beta, subcase, opts, log, warm)
        if out is not None:
            return out
    # eta_n = 1 forces Tr(H_Dn W) >= y_n^2 / 2, out of reach for weak links
    # at low P_max; larger multipliers relax that floor
    for scale in opts.eta_ladder:
        cold = WorstAux(0.0, beta, 0.0, 0.0, 0.0, opts.eta_init,
                        np.full(cfg.N, opts.eta_init * scale))
        out = _agm_loop(ch, cfg, beta, subcase, opts, log, cold)
        if out is not None:
            return out
    return None


def _agm_loop(ch, cfg, beta, subcase, opts, log, aux) -> RelaxedSolution | None:
    prev = None
    history: list[float] = []
    status = "max-iter"
    out = None
    for it in range(1, opts.max_iter + 1):
        ip = build_inner_sdp(ch, cfg, beta, aux, subcase, opts)
        res = ip.prog.solve(opts.solver)
        if not res.ok:
            if out is None:
                return None
            status = f"stopped-{res.status}"
            break
        W = _psd(res.value(ip.W))
        W_B = _psd(res.value(ip.W_B))
        Q = _psd(res.value(ip.Q))
        a = float(res.value(ip.a))
        r = float(res.value(ip.r))
        history.append(res.objective)
        y0, yn = _interference(ch, W, W_B, Q)
        aux = WorstAux(float(res.value(ip.varphi)), beta, float(res.value(ip.R_C)),
                       a, r, float(np.sqrt(y0 / max(r, RATIO_FLOOR))),
                       np.sqrt(yn / max(a, RATIO_FLOOR)))
        out = RelaxedSolution(W, W_B, Q, res.objective, aux, iterations=it,
                              history=history, subcase=subcase)
        if prev is not None:
            step = (np.linalg.norm(W - prev[0], 2) / cfg.P_max
                    + np.linalg.norm(W_B - prev[1], 2) / cfg.P_B
                    + np.linalg.norm(Q - prev[2], 2) / cfg.P_B)
            if log is not None:
                log(f"  beta {beta:.4f} iter {it}: objective {res.objective:.9f} "
                    f"step {step:.3e}")
            if step <= opts.psi:
                status = "converged"
                break
        prev = (W, W_B, Q)
    out.status = status
    return out


def _evaluate(ch, cfg, beta, subcase, opts, cache, log):
    key = round(beta, 12)
    if key not in cache:
        init = None
        solved = [b for b, v in cache.items() if v is not None]
        if opts.warm_start and solved:
            init = cache[min(solved, key=lambda b: abs(b - key))].aux
        cache[key] = solve_inner(ch, cfg, beta, subcase, opts, log, init)
    sol = cache[key]
    return -np.inf if sol is None else sol.objective


def outer_search(ch: ChannelRealization, cfg: SystemConfig, subcase: int = 1,
                 opts: WorstOptions | None = None, log=None):
    """Grid over [0, beta_max] then golden-section around the best grid point.

    Returns (best relaxed solution or None, beta, {beta: objective}).
    """
    opts = opts or WorstOptions()
    hi = beta_upper_bound(ch, cfg)
    grid = np.linspace(0.0, hi, opts.grid)
    cache: dict[float, RelaxedSolution | None] = {}
    vals = np.array([_evaluate(ch, cfg, b, subcase, opts, cache, log) for b in grid])
    if not np.any(np.isfinite(vals)):
        return None, float("nan"), {}
    k = int(np.argmax(vals))
    lo_b, hi_b = grid[max(k - 1, 0)], grid[min(k + 1, len(grid) - 1)]
    # golden-section on the bracket around the best sample
    x1 = hi_b - GOLDEN * (hi_b - lo_b)
    x2 = lo_b + GOLDEN * (hi_b - lo_b)
    f1 = _evaluate(ch, cfg, x1, subcase, opts, cache, log)
    f2 = _evaluate(ch, cfg, x2, subcase, opts, cache, log)
    while hi_b - lo_b > opts.refine_tol:
        if f1 >= f2:
            hi_b, x2, f2 = x2, x1, f1
            x1 = hi_b - GOLDEN * (hi_b - lo_b)
            f1 = _evaluate(ch, cfg, x1, subcase, opts, cache, log)
        else:
            lo_b, x1, f1 = x1, x2, f2
            x2 = lo_b + GOLDEN * (hi_b - lo_b)
            f2 = _evaluate(ch, cfg, x2, subcase, opts, cache, log)
    samples = {b: (-np.inf if s is None else s.objective) for b, s in cache.items()}
    best_b = max(samples, key=samples.get)
    return cache[best_b], float(best_b), samples


def _fit_power(cfg: SystemConfig, w, w_B, Q):
    """Uniformly shrink w onto the element budget and w_B onto what Q leaves."""
    peak = float(np.max(np.abs(w) ** 2))
    cap = cfg.P_max / cfg.M
    if peak > cap:
        w = w * np.sqrt(cap / peak)
    room = max(cfg.P_B - float(np.real(np.trace(Q))), 0.0)
    pb = float(np.real(np.vdot(w_B, w_B)))
    if pb > room:
        w_B = w_B * np.sqrt(room / pb) if pb > 0 else w_B
    return w, w_B


def _tight_receivers(ch, rel: RelaxedSolution, tol: float) -> int:
    _, yn = _interference(ch, rel.W, rel.W_B, rel.Q)
    sig = np.array([np.real(np.conj(h) @ rel.W @ h) for h in ch.h_D])
    rates = np.log1p(sig / yn)
    return int(np.sum(rates - rel.aux.varphi <= tol))


def reduce_bs_rank(W_B: np.ndarray, Q: np.ndarray, h: np.ndarray):
    """Rank-one BS covariance with every rate term unchanged.

    W_B' = W_B h h^H W_B / (h^H W_B h) keeps the CUE signal h^H W_B h, and
    the remainder W_B - W_B' (PSD by a Schur complement) moves into the AN
    covariance, where it is orthogonal to h and leaves W_B + Q unchanged.
    """
    g = W_B @ h
    s = float(np.real(np.vdot(h, g)))
    if s <= 0.0:
        return np.zeros_like(W_B), _psd(Q + W_B)
    W1 = np.outer(g, g.conj()) / s
    return W1, _psd(Q + W_B - W1)


def recover_beamformers(rel: RelaxedSolution, ch: ChannelRealization,
                        cfg: SystemConfig, opts: WorstOptions | None = None,
                        seed: int | None = None) -> R.BeamformingSolution:
    """Rank-one extraction, or Gaussian randomization when a rank exceeds one."""
    opts = opts or WorstOptions()
    W_B, Q = reduce_bs_rank(rel.W_B, rel.Q, ch.h_BC)
    w0, one_w = dominant_rank_one(rel.W, opts.rank_tol)
    wb0, one_b = dominant_rank_one(W_B, opts.rank_tol)
    mode = "worst"

    def build(w, w_B):
        w, w_B = _fit_power(cfg, w, w_B, Q)
        s = R.BeamformingSolution(w=w, w_B=w_B, Q=Q.copy(), algorithm="worst")
        return R.attach_rates(ch, s, mode)

    best = build(w0, wb0)
    randomized = not (one_w and one_b)
    if randomized:
        rng = np.random.default_rng([ch.seed if seed is None else seed, 0x5D2])
        lw, vw = np.linalg.eigh(rel.W)
        lb, vb = np.linalg.eigh(W_B)
        fw = vw * np.sqrt(np.clip(lw, 0.0, None))
        fb = vb * np.sqrt(np.clip(lb, 0.0, None))
        for _ in range(opts.randomizations):
            xi = (rng.standard_normal(cfg.M) + 1j * rng.standard_normal(cfg.M)) / np.sqrt(2)
            w = fw @ xi if not one_w else w0
            if one_b:
                w_B = wb0
            else:
                zb = (rng.standard_normal(cfg.K) + 1j * rng.standard_normal(cfg.K)) / np.sqrt(2)
                w_B = fb @ zb
            cand = build(w, w_B)
            if cand.rates.weighted(cfg.alpha) > best.rates.weighted(cfg.alpha):
                best = cand

    best.W, best.W_B = rel.W, rel.W_B
    best.rank_one = bool(one_w)
    best.subcase = rel.subcase
    best.iterations = rel.iterations
    best.history = list(rel.history)
    if randomized:
        # relaxed values do not describe a randomized design
        best.R_S, best.R_C = best.rates.secrecy_rate, best.rates.cue_rate
    else:
        best.R_S = max(0.0, rel.aux.varphi - rel.aux.beta)
        best.R_C = rel.aux.R_C
    best.diagnostics.update(
        beta=rel.aux.beta, varphi=rel.aux.varphi, relaxed_objective=rel.objective,
        rank_one_W_B=rel.rank_one_W_B, randomized=randomized,
        eig_ratio_W=eig_ratio(rel.W), eig_ratio_W_B=eig_ratio(rel.W_B),
        single_tight_receiver=_tight_receivers(ch, rel, opts.tight_tol) == 1,
        inner_status=rel.status)
    return best


def _search(ch, cfg, subcase, opts, log):
    """Outer search; larger receiver multipliers only when no beta solves.

    Returns (relaxed solution, samples, rescued).
    """
    rel, _, samples = outer_search(ch, cfg, subcase, opts, log)
    if rel is not None or not opts.rescue_ladder:
        return rel, samples, False
    rescue = replace(opts, eta_ladder=tuple(opts.rescue_ladder))
    rel, _, samples = outer_search(ch, cfg, subcase, rescue, log)
    return rel, samples, rel is not None


def solve_worst(ch: ChannelRealization, cfg: SystemConfig,
                opts: WorstOptions | None = None, log=None) -> R.BeamformingSolution:
    """Subcase one first; switch to subcase two when Eve can strip the BS stream.

    The silent-VAA design replaces the result when strictly better, and is
    returned outright when no inner program solves at any beta.
    """
    opts = opts or WorstOptions()
    quiet = silent_design(ch, cfg, mode="worst")
    rel, samples, rescued = _search(ch, cfg, 1, opts, log)
    if rel is None:
        quiet.diagnostics["relaxation"] = "failed"
        return quiet
    sol = recover_beamformers(rel, ch, cfg, opts)
    sol.status = "ok" if rel.status == "converged" else rel.status
    sol.diagnostics["grid"] = samples
    sol.diagnostics["eta_rescue"] = rescued
    if cfg.L and _decodes_bs_stream(ch, sol):
        rel2, samples2, rescued2 = _search(ch, cfg, 2, opts, log)
        if rel2 is not None:
            sol = recover_beamformers(rel2, ch, cfg, opts)
            sol.status = "ok" if rel2.status == "converged" else rel2.status
            sol.diagnostics["grid"] = samples2
            sol.diagnostics["eta_rescue"] = rescued2
        else:
            sol.status = "subcase2-infeasible"
    if quiet.rates.weighted(cfg.alpha) > sol.rates.weighted(cfg.alpha) + TIE_TOL:
        # keep the relaxation census of the run that was solved
        quiet.rank_one = sol.rank_one
        quiet.diagnostics.update(sol.diagnostics)
        quiet.diagnostics["sdr_objective"] = sol.rates.weighted(cfg.alpha)
        return quiet
    return sol


def _decodes_bs_stream(ch: ChannelRealization, sol: R.BeamformingSolution) -> bool:
    """Eve strips the BS stream when its colluding rate reaches the CUE rate."""
    if not np.any(sol.w_B):
        return False
    return R.capacity_eve_decode_sB(ch, sol) > R.capacity_cue(ch, sol) - DECODE_MARGIN
