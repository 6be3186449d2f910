"""Low-complexity beamforming: null-space designs and GSVD-aligned jamming.

Case one (M > rank G_EC) hides the D2D stream from every eavesdropper and
the CUE and solves a small max-min problem for the multicast gain. Case two
(M <= rank G_EC) keeps the D2D stream off the CUE, aligns BS jamming with
the weakest eavesdropping direction through a GSVD, and splits BS power
between the CUE signal and the jamming with a closed-form ratio.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import rates as R
from .conic import ConicProgram, SolverOptions
from .linalg import DegenerateInputError, gsvd, kernel_basis, numerical_rank, project_out
from .scenario import ChannelRealization, SystemConfig


@dataclass
class SuboptOptions:
    max_iter: int = 50
    tol: float = 1e-7  # relative step on the reduced beamformer
    mode: str = "worst"  # eavesdropper model used to report the secrecy rate
    solver: SolverOptions = field(default_factory=SolverOptions)


@dataclass
class SuboptPlan:
    case_id: str  # "one" | "two"
    w_hat: np.ndarray
    w: np.ndarray
    w_B: np.ndarray  # CUE beamformer (w_B^subopt or w_B^i)
    w_B_AN: np.ndarray  # jamming beamformer (zero in case one)
    theta: float = 0.0
    E: np.ndarray | None = None
    F: np.ndarray | None = None
    index: int = -1  # selected GSVD pair (0-based)
    coeffs: dict = field(default_factory=dict)
    notes: list[str] = field(default_factory=list)
    w_hat_an: np.ndarray | None = None


def _unit(x: np.ndarray) -> np.ndarray:
    n = np.linalg.norm(x)
    return x / n if n > 0 else np.zeros_like(x)


def _fit_elements(cfg: SystemConfig, w: np.ndarray) -> np.ndarray:
    """Uniformly shrink w until every element meets P_max/M.

    A common factor keeps the beamforming direction, hence every null-space
    property of w.
    """
    peak = float(np.max(np.abs(w) ** 2)) if w.size else 0.0
    cap = cfg.P_max / cfg.M
    if peak > cap:
        w = w * np.sqrt(cap / peak)
    return w


def _projected_mrt(g: np.ndarray, h: np.ndarray, power: float) -> np.ndarray:
    """MRT toward h restricted to the null space of g^H, at the given power."""
    return _unit(project_out(g, h)) * np.sqrt(max(power, 0.0))


def case_of(ch: ChannelRealization) -> str:
    return "one" if ch.M > numerical_rank(ch.G_EC) else "two"


# ---------------------------------------------------------------- case one

def maxmin_gain(a: np.ndarray, power: float, opts: SuboptOptions | None = None,
                x0: np.ndarray | None = None) -> tuple[np.ndarray, float, int]:
    """max_x min_n |a_n^H x|^2 s.t. ||x||^2 <= power, by SCA on the epigraph.

    Rows of ``a`` are the a_n^H. Each step linearizes |a_n^H x|^2 at the
    current point, which lower-bounds it, so the min-gain never decreases.
    Returns (x, min gain, iterations).
    """
    opts = opts or SuboptOptions()
    a = np.atleast_2d(np.asarray(a, complex))
    d = a.shape[1]
    if d == 0:
        return np.zeros(0, complex), 0.0, 0

    def gain(x):
        return float(np.min(np.abs(a @ x) ** 2))

    if x0 is None:
        # best of the basis directions and the dominant eigenvector
        cands = [np.eye(d, dtype=complex)[:, 0]]
        _, vec = np.linalg.eigh(a.conj().T @ a)
        cands.append(vec[:, -1])
        x0 = max(cands, key=gain)
    x = _unit(np.asarray(x0, complex)) * np.sqrt(power)
    if a.shape[0] == 1:
        x = _unit(a[0].conj()) * np.sqrt(power)
        return x, gain(x), 1

    scale = np.sqrt(power)
    it = 0
    for it in range(1, opts.max_iter + 1):
        p = ConicProgram("maxmin")
        z = p.complex("x", d)  # x / sqrt(power)
        kappa = p.real("kappa")  # gain / power
        p.add_soc(1.0, z, name="power")
        z0 = x / scale
        for n in range(a.shape[0]):
            s0 = np.dot(a[n], z0)
            lin = (np.conj(s0) * (a[n] @ z)).real * 2.0 - abs(s0) ** 2
            p.add_ge(lin, kappa, name=f"gain{n}")
        p.maximize(kappa)
        res = p.solve(opts.solver)
        if not res.ok:
            break
        x_new = res.value(z) * scale
        if gain(x_new) < gain(x):
            break
        step = np.linalg.norm(x_new - x)
        x = x_new
        if step <= opts.tol * scale:
            break
    return x, gain(x), it


def plan_case_one(ch: ChannelRealization, cfg: SystemConfig,
                  opts: SuboptOptions | None = None):
    opts = opts or SuboptOptions()
    basis = kernel_basis(ch.G_EC)
    if basis.shape[1] == 0:
        raise DegenerateInputError("no null space of G_EC: use case two")
    a = ch.h_D.conj() @ basis  # row n: h_Dn^H G_EC^perp
    w_hat, _, iters = maxmin_gain(a, cfg.P_max, opts)
    w = _fit_elements(cfg, basis @ w_hat)
    notes = []
    if cfg.K > numerical_rank(ch.G_BN):
        w_B = _projected_mrt(ch.G_BN, ch.h_BC, cfg.P_B)
    else:
        w_B = np.zeros(cfg.K, complex)
        notes.append("no null space of G_BN: BS silent")
    plan = SuboptPlan("one", w_hat, w, w_B, np.zeros(cfg.K, complex), notes=notes)
    sol = _emit(ch, plan, opts, iters)
    return plan, sol


# ---------------------------------------------------------------- case two

def theta_coefficients(lam1: float, lam2: float, I: float, J: float,
                       P: float, P_B: float, alpha: float) -> dict:
    """Quadratic A theta^2 + B theta + C = 0 whose root maximizes the split."""
    A = -(1.0 - alpha) * J * lam1**4 * P_B**3
    B = -(lam2**2) * P * lam1**2 * P_B**2 * J
    C = (alpha * lam2**2 * P * lam1**2 * P_B**2 * J
         + alpha * lam1**2 * P_B * lam2**2 * P)
    return dict(A=A, B=B, C=C, lam1=lam1, lam2=lam2, I=I, J=J, P=P, P_B=P_B,
                alpha=alpha)


def theta_closed_form(co: dict) -> tuple[float, str]:
    """Positive root of the stationarity quadratic, clipped to [0, 1].

    The root (-B - sqrt(B^2 - 4AC)) / (2A) is evaluated in the equivalent
    form 2C / (-B + sqrt(B^2 - 4AC)), which stays finite when A -> 0.
    """
    A, B, C = co["A"], co["B"], co["C"]
    disc = B * B - 4.0 * A * C
    if not np.isfinite(disc) or disc < 0:
        return 0.0, "negative-discriminant"
    den = -B + np.sqrt(disc)
    if den <= 0:
        # no coupling between split and leakage (lam1, lam2 or J vanish)
        return (0.0 if co["alpha"] < 1.0 else 1.0), "degenerate"
    th = 2.0 * C / den
    if th > 1.0:
        return 1.0, "clamped"
    if th < 0.0:
        return 0.0, "clamped"
    return float(th), "ok"


def theta_objective(theta: float, co: dict) -> float:
    """Design metric of the split: AWGN-free MMSE leakage, exact CUE rate."""
    lam1, lam2 = co["lam1"], co["lam2"]
    P, P_B, a = co["P"], co["P_B"], co["alpha"]
    if lam2 == 0.0:
        leak = 0.0
    elif theta <= 0.0 or lam1 == 0.0:
        leak = np.inf
    else:
        leak = np.log1p(lam2**2 * P / (lam1**2 * theta * P_B))
    sec = np.log1p(co["I"] * P) - leak
    cue = np.log1p(co["J"] * (1.0 - theta) * P_B)
    return float(a * sec + (1.0 - a) * cue) if a > 0 else float(cue)


def plan_case_two(ch: ChannelRealization, cfg: SystemConfig,
                  opts: SuboptOptions | None = None):
    opts = opts or SuboptOptions()
    notes: list[str] = []
    M, K = cfg.M, cfg.K

    # D2D stream kept off the CUE
    hc_perp = kernel_basis(ch.h_C[:, None]) if M > 1 else np.ones((1, 1), complex)
    if M == 1:
        notes.append("single transmitter: D2D stream reaches the CUE")
    E = ch.G_E.conj().T @ hc_perp  # L x (M-1)

    # jamming kept off the receivers and the CUE
    bnc_perp = kernel_basis(ch.G_BNC)
    F = ch.G_B.conj().T @ bnc_perp  # L x (K-N-1)

    # CUE signal kept off the receivers and, when possible, off Eve
    if K > numerical_rank(ch.G_BNE):
        d_i = _unit(project_out(ch.G_BNE, ch.h_BC))
    elif K > numerical_rank(ch.G_BN):
        d_i = _unit(project_out(ch.G_BN, ch.h_BC))
        notes.append("no null space of G_BNE: CUE signal visible at Eve")
    else:
        d_i = np.zeros(K, complex)
        notes.append("no null space of G_BN: CUE signal off")
    J = float(abs(np.vdot(ch.h_BC, d_i)) ** 2)

    # GSVD pairing: V column j and U column j - offset share X column j
    index = hc_perp.shape[1] - 1
    d_an = np.zeros(K, complex)
    w_hat_an = np.zeros(F.shape[1], complex)
    lam1 = 0.0
    if ch.L == 0:
        w_hat = np.ones(1, complex) if M == 1 else _best_receiver_dir(ch, hc_perp)
        lam2 = 0.0
    else:
        g = gsvd(F.conj().T, E.conj().T)
        w_hat = g.V[:, index]
        lam2 = float(g.lambda2[index])
        u = g.u_column(index) if F.shape[1] else None
        if u is not None:
            lam1 = float(g.lambda1[index])
            w_hat_an = u
            d_an = _unit(bnc_perp @ u)
        elif F.shape[1] and np.linalg.norm(F.conj().T @ (E @ w_hat)) > 0:
            # unpaired direction: jam along the projection of the leaked signal
            e_dir = _unit(E @ w_hat)
            w_hat_an = _unit(F.conj().T @ e_dir)
            d_an = _unit(bnc_perp @ w_hat_an)
            # in-line jamming gain relative to the leaked signal gain
            lam2 = float(np.linalg.norm(E @ w_hat))
            lam1 = float(abs(np.vdot(e_dir, F @ w_hat_an)))
            notes.append("selected eavesdropping direction is unpaired: projected jamming")
        else:
            notes.append("no jamming subspace")
    w = _fit_elements(cfg, _unit(hc_perp @ w_hat) * np.sqrt(cfg.P_max))
    P_eff = float(np.real(np.vdot(w, w)))
    w_dir = _unit(w)
    I = float(np.min(np.abs(ch.h_D.conj() @ w_dir) ** 2))

    co = theta_coefficients(lam1, lam2, I, J, P_eff, cfg.P_B, cfg.alpha)
    if lam1 == 0.0:
        theta, st = 0.0, "no-jamming"
    else:
        theta, st = theta_closed_form(co)
    if st != "ok":
        notes.append(f"theta {st}")
    w_B = d_i * np.sqrt((1.0 - theta) * cfg.P_B)
    w_B_AN = d_an * np.sqrt(theta * cfg.P_B)
    plan = SuboptPlan("two", w_hat, w, w_B, w_B_AN, theta, E, F, index, co, notes,
                      w_hat_an)
    return plan, _emit(ch, plan, opts, 1)


def _best_receiver_dir(ch: ChannelRealization, basis: np.ndarray) -> np.ndarray:
    x, _, _ = maxmin_gain(ch.h_D.conj() @ basis, 1.0)
    return x


# ---------------------------------------------------------------- dispatch

def _emit(ch, plan: SuboptPlan, opts: SuboptOptions, iters: int):
    Q = np.outer(plan.w_B_AN, plan.w_B_AN.conj())
    sol = R.BeamformingSolution(w=plan.w, w_B=plan.w_B, Q=Q,
                                algorithm="suboptimal", iterations=iters,
                                subcase=1 if plan.case_id == "one" else 2,
                                status="ok")
    R.attach_rates(ch, sol, opts.mode)
    sol.R_S = sol.rates.secrecy_rate
    sol.R_C = sol.rates.cue_rate
    sol.diagnostics.update(case=plan.case_id, theta=plan.theta,
                           notes=list(plan.notes))
    return sol


def plan_suboptimal(ch: ChannelRealization, cfg: SystemConfig,
                    opts: SuboptOptions | None = None) -> R.BeamformingSolution:
    """Dispatch on M versus rank(G_EC); always returns a power-feasible design."""
    if case_of(ch) == "one":
        _, sol = plan_case_one(ch, cfg, opts)
    else:
        _, sol = plan_case_two(ch, cfg, opts)
    return sol
