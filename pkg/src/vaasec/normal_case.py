"""Successive convex approximation for independent eavesdroppers.

Each iteration solves a second-order cone program that lower-bounds every
receiver rate and CUE rate and upper-bounds every eavesdropper rate by
first-order expansions around the previous iterate:

* ``rate <= log(1 + a)`` goes through the exponential-cone SOC chain,
* ``a <= b^2 / c`` is linearized in (b, c),
* ``|h^H w|^2`` on the favourable side of an inequality is linearized in w,
* ``beta >= log(1 + e)`` is linearized in e (log is concave).

All expansions are inner approximations, so every iterate is feasible for
the original problem and the objective never decreases.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import rates as R
from .conic import ConicProgram, SolverOptions, add_exp_cone_soc, quad_trace
from .linalg import kernel_basis
from .scenario import ChannelRealization, SystemConfig


@dataclass
class ScaOptions:
    U: int = 6
    psi: float = 1e-3
    max_iter: int = 20
    use_an: bool = True
    aux_per_receiver: bool = True
    init_retries: int = 3
    structured_start: bool = True  # also start from the null-space design
    solver: SolverOptions = field(default_factory=SolverOptions)


@dataclass
class ScaState:
    """Expansion point of one subproblem, taken at a feasible design.

    Arrays indexed by receiver (``b``, ``c``) or eavesdropper (``f``, ``f_B``)
    collapse to a single entry when auxiliaries are shared.
    """

    w: np.ndarray
    w_B: np.ndarray
    Q: np.ndarray
    b: np.ndarray  # receiver signal amplitude |h_Dn^H w|
    c: np.ndarray  # receiver interference-plus-noise
    e: float  # largest eavesdropper SINR on the D2D stream
    f: np.ndarray  # eavesdropper interference-plus-noise (D2D stream)
    b_C: float  # CUE signal amplitude
    c_C: float  # CUE interference-plus-noise
    e_B: float  # largest eavesdropper SINR on the BS stream
    f_B: np.ndarray  # eavesdropper interference-plus-noise (BS stream)
    iteration: int = 0


def _amp2(h: np.ndarray, v: np.ndarray) -> float:
    return float(abs(np.vdot(h, v)) ** 2)


def _q(h: np.ndarray, Q: np.ndarray) -> float:
    return float(np.real(np.conj(h) @ Q @ h))


def expansion_point(ch: ChannelRealization, w, w_B, Q,
                    per_receiver: bool = True, iteration: int = 0) -> ScaState:
    """Exact signal/interference values of a design, used as expansion point."""
    sig = np.array([_amp2(ch.h_D[n], w) for n in range(ch.N)])
    den = np.array([_amp2(ch.h_Bn[n], w_B) + _q(ch.h_Bn[n], Q) + 1.0
                    for n in range(ch.N)])
    if per_receiver:
        b, c = np.sqrt(sig), den
    else:
        b, c = np.array([np.sqrt(sig.min())]), np.array([den.max()])
    e = e_B = 0.0
    f = f_B = np.ones(0)
    if ch.L:
        f = np.array([_amp2(ch.h_Bl[l], w_B) + _q(ch.h_Bl[l], Q) + 1.0
                      for l in range(ch.L)])
        s = np.array([_amp2(ch.h_E[l], w) for l in range(ch.L)])
        f_B = np.array([_amp2(ch.h_E[l], w) + _q(ch.h_Bl[l], Q) + 1.0
                        for l in range(ch.L)])
        t = np.array([_amp2(ch.h_Bl[l], w_B) for l in range(ch.L)])
        if per_receiver:
            e, e_B = float((s / f).max()), float((t / f_B).max())
        else:
            f, f_B = np.array([f.min()]), np.array([f_B.min()])
            e, e_B = float(s.max() / f[0]), float(t.max() / f_B[0])
    b_C = np.sqrt(_amp2(ch.h_BC, w_B))
    c_C = _amp2(ch.h_C, w) + _q(ch.h_BC, Q) + 1.0
    return ScaState(np.asarray(w, complex), np.asarray(w_B, complex),
                    np.asarray(Q, complex), b, c, e, f, float(b_C), float(c_C),
                    e_B, f_B, iteration)


def constraint_tally(cfg: SystemConfig, U: int = 6,
                     aux_per_receiver: bool = True) -> int:
    """Rate-related constraints in one subproblem (power budgets excluded)."""
    N, L = cfg.N, cfg.L
    macros = 2 * (U + 5)
    rx = 4 * N if aux_per_receiver else 2 + 2 * N
    eve = (1 + 2 * L) if L else 0
    cue = 4
    noma = (1 + 2 * L) if L else 0
    return macros + rx + eve + cue + noma


RATE_GROUPS = ("rx_", "eve_", "cue_", "noma_")
AMP_FLOOR = 1e-9
SINR_FLOOR = 1e-4


@dataclass
class Subproblem:
    prog: ConicProgram
    w: object
    w_B: object
    Q: object
    phi: object
    beta: object
    R_C: object
    objective: object = None


def _lin_amp2(h: np.ndarray, v0: np.ndarray, v):
    """First-order lower bound of |h^H v|^2 around v0 (affine in v)."""
    s0 = np.vdot(h, v0)
    return (np.conj(s0) * (np.conj(h) @ v)).real * 2.0 - abs(s0) ** 2


def _rate_block(p: ConicProgram, rate, b0: np.ndarray, c0: np.ndarray,
                U: int, name: str):
    """rate <= log(1 + a) with a <= b_i^2 / c_i linearized at (b0_i, c0_i).

    Returns the (b, c, d) expressions in natural units; every auxiliary is
    declared relative to its expansion value so the program stays scaled.
    """
    b0 = np.maximum(b0, AMP_FLOOR)
    sinr0 = b0**2 / c0
    a0 = float(sinr0.min())
    t = p.real(f"{name}_t")  # (1 + a) / (1 + a0)
    a = t * (1.0 + a0) - 1.0
    add_exp_cone_soc(p, a, rate, U, name=f"{name}_exp", center=np.log1p(a0))
    n = len(b0)
    bt = p.real(f"{name}_b", n)
    ct = p.real(f"{name}_c", n)
    dt = p.real(f"{name}_d", n)
    for i in range(n):
        # a <= 2 (b0/c0) b - (b0/c0)^2 c  with  b = b0 bt, c = c0 ct
        p.add_ge((bt[i] * 2.0 - ct[i]) * (sinr0[i] / (1.0 + a0)),
                 a / (1.0 + a0), name=f"{name}_ratio{i}")
        p.add_square_le(bt[i], dt[i], name=f"{name}_square{i}")
    return bt * b0, ct * c0, dt * b0**2, b0, c0


def build_subproblem(ch: ChannelRealization, cfg: SystemConfig,
                     state: ScaState, opts: ScaOptions | None = None) -> Subproblem:
    opts = opts or ScaOptions()
    K, M, N, L = cfg.K, cfg.M, cfg.N, cfg.L
    per = opts.aux_per_receiver
    p = ConicProgram("sca")
    # beamformers in units of their budgets, AN in units of the noise
    u = p.complex("w", M)
    v = p.complex("w_B", K)
    w = u * np.sqrt(cfg.P_max / M)
    w_B = v * np.sqrt(cfg.P_B)
    Q = p.hermitian("Q", K) if opts.use_an else None
    phi = p.real("phi")
    beta = p.real("beta") if L else 0.0
    R_C = p.real("R_C")

    def q_of(h):
        return quad_trace(Q, np.outer(h, np.conj(h))) if Q is not None else 0.0

    for m in range(M):
        p.add_soc(1.0, u[m], name=f"pow_elem{m}")
    p.add_square_le(v, 1.0 - (Q.trace().real / cfg.P_B if Q is not None else 0.0),
                    name="pow_bs")

    # receivers
    _, c, d, b0, c0 = _rate_block(p, phi, state.b, state.c, opts.U, "rx")
    for n in range(N):
        i = n if per else 0
        p.add_ge(_lin_amp2(ch.h_D[n], state.w, w) / b0[i]**2, d[i] / b0[i]**2,
                 name=f"rx_signal{n}")
        p.add_square_le((np.conj(ch.h_Bn[n]) @ w_B) / np.sqrt(c0[i]),
                        (c[i] - q_of(ch.h_Bn[n]) - 1.0) / c0[i],
                        name=f"rx_interf{n}")

    # eavesdroppers overhearing the D2D stream
    if L:
        _eaves_block(p, beta, state.e, state.f, ch.h_E, ch.h_Bl, w, w_B,
                     state.w_B, [q_of(h) for h in ch.h_Bl], per, "eve")

    # CUE rate: receiver template with the roles of w and w_B swapped
    _, c_C, d_C, bC0, cC0 = _rate_block(p, R_C, np.array([state.b_C]),
                                        np.array([state.c_C]), opts.U, "cue")
    p.add_ge(_lin_amp2(ch.h_BC, state.w_B, w_B) / bC0[0]**2, d_C[0] / bC0[0]**2,
             name="cue_signal")
    p.add_square_le((np.conj(ch.h_C) @ w) / np.sqrt(cC0[0]),
                    (c_C[0] - q_of(ch.h_BC) - 1.0) / cC0[0], name="cue_interf")

    # eavesdroppers must not decode the BS stream
    if L:
        _eaves_block(p, R_C - cfg.chi, state.e_B, state.f_B, ch.h_Bl, ch.h_E,
                     w_B, w, state.w, [q_of(h) for h in ch.h_Bl], per, "noma")

    obj = (phi - beta) * cfg.alpha + R_C * (1.0 - cfg.alpha)
    p.maximize(obj)
    return Subproblem(p, w, w_B, Q, phi, beta, R_C, obj)


def _eaves_block(p, cap, e0, f0, h_sig, h_jam, x_sig, x_jam, x_jam0, an,
                 per, name):
    """cap >= log(1 + e) linearized at e0, e f_l >= |h_sig_l^H x_sig|^2,
    f_l <= linearized |h_jam_l^H x_jam|^2 + an_l + 1."""
    L = h_sig.shape[0]
    se = max(e0, SINR_FLOOR)
    et = p.real(f"{name}_e")
    ft = p.real(f"{name}_f", len(f0))
    p.add_ge(cap, np.log1p(e0) + (et * se - e0) / (1.0 + e0), name=f"{name}_log")
    for l in range(L):
        j = l if per else 0
        p.add_rotated(et, ft[j], (np.conj(h_sig[l]) @ x_sig) / np.sqrt(se * f0[j]),
                      name=f"{name}_ratio{l}")
        p.add_ge((_lin_amp2(h_jam[l], x_jam0, x_jam) + an[l] + 1.0) / f0[j],
                 ft[j], name=f"{name}_interf{l}")


def initial_designs(ch: ChannelRealization, cfg: SystemConfig,
                    attempt: int = 0) -> list[tuple]:
    """Starting designs for one attempt.

    The VAA starts at equal power with random phases (redrawn per attempt).
    The BS starts at full power with MRT toward the CUE, and additionally
    with that MRT restricted to the null space of the D2D receivers, of the
    eavesdroppers, and of both, whenever such a null space exists.
    """
    rng = np.random.default_rng([int(ch.seed), 0x5CA, attempt])
    amp = np.sqrt(cfg.P_max / cfg.M)
    w0 = amp * np.exp(2j * np.pi * rng.random(cfg.M))
    bs = [ch.h_BC]
    for G in (ch.G_BN, ch.G_B, ch.G_BNE):
        if G.shape[1] and G.shape[1] < cfg.K:
            z = kernel_basis(G)
            v = z @ (z.conj().T @ ch.h_BC)
            if np.linalg.norm(v) > 1e-12:
                bs.append(v)
    Q0 = np.zeros((cfg.K, cfg.K), complex)
    return [(w0, np.sqrt(cfg.P_B) * v / np.linalg.norm(v), Q0) for v in bs]


def structured_design(ch: ChannelRealization, cfg: SystemConfig) -> tuple | None:
    """The null-space/GSVD design as a start, or None when it cannot be built."""
    from .suboptimal import SuboptOptions, plan_suboptimal
    try:
        sol = plan_suboptimal(ch, cfg, SuboptOptions(mode="normal"))
    except (ValueError, np.linalg.LinAlgError, RuntimeError):
        return None
    if sol.status.startswith(("error", "infeasible")) or not np.any(sol.w):
        return None
    return sol.w, sol.w_B, sol.Q


def run_sca(ch: ChannelRealization, cfg: SystemConfig, start: tuple,
            opts: ScaOptions | None = None, log=None) -> R.BeamformingSolution | None:
    """SCA iterations from one starting design; None if the first subproblem fails."""
    opts = opts or ScaOptions()
    per = opts.aux_per_receiver
    state = expansion_point(ch, *start, per)
    sub = build_subproblem(ch, cfg, state, opts)
    res = sub.prog.solve(opts.solver)
    if not res.ok:
        return None

    history: list[float] = []
    deltas: list[float] = []
    status = "max-iter"
    it = 0
    while True:
        it += 1
        w = res.value(sub.w)
        w_B = res.value(sub.w_B)
        Q = (_psd_clip(res.value(sub.Q)) if sub.Q is not None
             else np.zeros((cfg.K, cfg.K), complex))
        history.append(float(res.value(sub.objective)))
        last = (res, sub, w, w_B, Q)
        delta = float(np.linalg.norm(w - state.w) + np.linalg.norm(w_B - state.w_B))
        deltas.append(delta)
        if log is not None:
            log(f"iter {it}: objective {history[-1]:.9f} step {delta:.3e}")
        if delta <= opts.psi:
            status = "converged"
            break
        if it >= opts.max_iter:
            break
        state = expansion_point(ch, w, w_B, Q, per, it)
        sub_next = build_subproblem(ch, cfg, state, opts)
        res_next = sub_next.prog.solve(opts.solver)
        if not res_next.ok:
            status = f"stopped-{res_next.status}"
            break
        sub, res = sub_next, res_next

    res, sub, w, w_B, Q = last
    w, w_B, Q = R.scale_to_budget(cfg, w, w_B, Q)
    phi = float(res.value(sub.phi))
    beta = float(res.value(sub.beta)) if cfg.L else 0.0
    rc_sur = float(res.value(sub.R_C))
    sol = R.BeamformingSolution(w=w, w_B=w_B, Q=Q, R_S=max(0.0, phi - beta),
                                algorithm="normal", status=status,
                                iterations=it, history=history)
    R.attach_rates(ch, sol, "normal")
    sol.R_C = sol.rates.cue_rate
    sol.diagnostics.update(phi=phi, beta=beta, R_C_surrogate=rc_sur,
                           steps=deltas, solver_iterations=res.iterations,
                           surrogate_objective=history[-1])
    return sol


def silent_design(ch: ChannelRealization, cfg: SystemConfig,
                  mode: str = "normal") -> R.BeamformingSolution | None:
    """VAA off and the BS beamforming to the CUE at full power.

    The SCA cannot reach w = 0 (its linearizations degenerate there), yet
    the silent VAA is optimal when the D2D link costs the CUE more than it
    earns. In normal mode None when the eavesdroppers could decode the BS
    stream; in worst mode stripping is allowed and leaks nothing at w = 0.
    """
    algorithm = "normal" if mode == "normal" else "worst"
    w_B = np.sqrt(cfg.P_B) * ch.h_BC / np.linalg.norm(ch.h_BC)
    sol = R.BeamformingSolution(w=np.zeros(cfg.M, complex), w_B=w_B,
                                Q=np.zeros((cfg.K, cfg.K), complex),
                                algorithm=algorithm, status="silent-vaa")
    R.attach_rates(ch, sol, mode)
    if (mode == "normal" and cfg.L
            and sol.rates.per_eaves_sB.max() > sol.rates.cue_rate - cfg.chi):
        return None
    sol.R_S, sol.R_C = sol.rates.secrecy_rate, sol.rates.cue_rate
    sol.history = [sol.rates.weighted(cfg.alpha)]
    return sol


def solve_normal(ch: ChannelRealization, cfg: SystemConfig,
                 opts: ScaOptions | None = None, log=None) -> R.BeamformingSolution:
    """Run the SCA from every starting design and keep the best exact objective.

    Starting points are redrawn (new VAA phases) up to ``init_retries``
    times while no start yields a feasible first subproblem. The null-space
    design joins the first attempt, so the result never falls below it.
    The silent-VAA design replaces the SCA result when it is strictly better.
    """
    opts = opts or ScaOptions()
    best = None
    extra = structured_design(ch, cfg) if opts.structured_start else None
    for attempt in range(max(1, opts.init_retries)):
        starts = initial_designs(ch, cfg, attempt)
        if extra is not None and attempt == 0:
            starts.append(extra)
        for k, start in enumerate(starts):
            sol = run_sca(ch, cfg, start, opts, log)
            if sol is None:
                continue
            sol.diagnostics["start"] = k
            if best is None or _rank(sol, cfg.alpha) > _rank(best, cfg.alpha):
                best = sol
        if best is not None:
            best.diagnostics["attempt"] = attempt
            quiet = silent_design(ch, cfg)
            if quiet is not None and (quiet.rates.weighted(cfg.alpha)
                                      > best.rates.weighted(cfg.alpha) + TIE_TOL):
                quiet.diagnostics["sca_objective"] = best.rates.weighted(cfg.alpha)
                return quiet
            return best
    sol = R.BeamformingSolution.zeros(cfg.K, cfg.M, algorithm="normal",
                                      status="infeasible-init")
    return R.attach_rates(ch, sol, "normal")


TIE_TOL = 1e-6


def _rank(sol: R.BeamformingSolution, alpha: float) -> tuple:
    """Sort key: objective (ties within TIE_TOL), then convergence, then speed."""
    obj = sol.rates.weighted(alpha)
    return (round(obj / TIE_TOL), sol.status == "converged", -sol.iterations, obj)


def _psd_clip(Q: np.ndarray) -> np.ndarray:
    """Drop the tiny negative eigenvalues an interior-point solve leaves."""
    lam, v = np.linalg.eigh(0.5 * (Q + Q.conj().T))
    lam = np.clip(lam, 0.0, None)
    return (v * lam) @ v.conj().T
