"""Achievable-rate evaluation for a beamforming triple (w, w_B, Q).

All rates are in nats per channel use; noise power is 1.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .scenario import ChannelRealization, SystemConfig

DECODE_MARGIN = 1e-9
LOG2 = np.log(2.0)


@dataclass
class BeamformingSolution:
    """Transmit design plus the rates it claims and solver diagnostics.

    ``R_S`` and ``R_C`` are the values the producing algorithm reports;
    ``rates`` (filled by :func:`attach_rates`) holds the exact re-evaluation.
    """

    w: np.ndarray
    w_B: np.ndarray
    Q: np.ndarray
    R_S: float = 0.0
    R_C: float = 0.0
    algorithm: str = ""
    status: str = "ok"
    iterations: int = 0
    W: np.ndarray | None = None
    W_B: np.ndarray | None = None
    rank_one: bool | None = None
    subcase: int = 0
    history: list[float] = field(default_factory=list)
    diagnostics: dict = field(default_factory=dict)
    rates: "RatePair | None" = None

    @classmethod
    def zeros(cls, K: int, M: int, **kw) -> "BeamformingSolution":
        return cls(np.zeros(M, complex), np.zeros(K, complex),
                   np.zeros((K, K), complex), **kw)

    def weighted(self, alpha: float) -> float:
        """Weighted objective from the exact rates when available."""
        if self.rates is not None:
            return self.rates.weighted(alpha)
        return alpha * self.R_S + (1.0 - alpha) * self.R_C


@dataclass
class RatePair:
    secrecy_rate: float
    cue_rate: float
    per_receiver: np.ndarray
    per_eaves: np.ndarray  # C_l: eavesdropper l overhearing the D2D stream
    per_eaves_sB: np.ndarray  # C'_l: eavesdropper l decoding the BS stream
    eve_colluding: float = float("nan")
    eve_colluding_sB: float = float("nan")
    eve_decodes_sB: bool = False
    mode: str = "normal"

    def weighted(self, alpha: float) -> float:
        return alpha * self.secrecy_rate + (1.0 - alpha) * self.cue_rate


def _quad(h: np.ndarray, Q: np.ndarray) -> float:
    """h^H Q h = Tr(h h^H Q), real for Hermitian Q."""
    return float(np.real(np.conj(h) @ Q @ h))


def _gain(h: np.ndarray, w: np.ndarray) -> float:
    return float(abs(np.vdot(h, w)) ** 2)


def capacity_receiver(ch: ChannelRealization, sol, n: int) -> float:
    sig = _gain(ch.h_D[n], sol.w)
    den = _gain(ch.h_Bn[n], sol.w_B) + _quad(ch.h_Bn[n], sol.Q) + 1.0
    return float(np.log1p(sig / den))


def capacity_eaves_sD(ch: ChannelRealization, sol, l: int) -> float:
    sig = _gain(ch.h_E[l], sol.w)
    den = _gain(ch.h_Bl[l], sol.w_B) + _quad(ch.h_Bl[l], sol.Q) + 1.0
    return float(np.log1p(sig / den))


def capacity_eaves_sB(ch: ChannelRealization, sol, l: int) -> float:
    sig = _gain(ch.h_Bl[l], sol.w_B)
    den = _gain(ch.h_E[l], sol.w) + _quad(ch.h_Bl[l], sol.Q) + 1.0
    return float(np.log1p(sig / den))


def capacity_cue(ch: ChannelRealization, sol) -> float:
    sig = _gain(ch.h_BC, sol.w_B)
    den = _gain(ch.h_C, sol.w) + _quad(ch.h_BC, sol.Q) + 1.0
    return float(np.log1p(sig / den))


def _interference(G: np.ndarray, w_B: np.ndarray | None, Q: np.ndarray) -> np.ndarray:
    cov = Q.copy()
    if w_B is not None:
        cov = cov + np.outer(w_B, np.conj(w_B))
    return G.conj().T @ cov @ G + np.eye(G.shape[1])


def _rank_one_logdet(a: np.ndarray, R: np.ndarray) -> float:
    """log(1 + a^H R^{-1} a) through a Cholesky factor of R."""
    c = np.linalg.cholesky(0.5 * (R + R.conj().T))
    y = np.linalg.solve(c, a)
    return float(np.log1p(np.real(np.vdot(y, y))))


def _logdet_path(a: np.ndarray, R: np.ndarray) -> float:
    """log det(I + a a^H R^{-1}) evaluated as a determinant ratio."""
    R = 0.5 * (R + R.conj().T)
    s1, l1 = np.linalg.slogdet(R + np.outer(a, np.conj(a)))
    s0, l0 = np.linalg.slogdet(R)
    if s1.real <= 0 or s0.real <= 0:
        raise np.linalg.LinAlgError("interference matrix is not positive definite")
    return float(l1 - l0)


def capacity_eve_colluding(ch: ChannelRealization, sol,
                           method: str = "cholesky",
                           include_bs_signal: bool = True) -> float:
    """Capacity of the colluding eavesdroppers for the D2D stream.

    ``include_bs_signal=False`` gives the capacity after the BS stream has
    been decoded and removed, leaving only artificial noise as jamming.
    """
    if ch.L < 1:
        raise ValueError("colluding capacity needs L >= 1")
    a = ch.G_E.conj().T @ sol.w
    R = _interference(ch.G_B, sol.w_B if include_bs_signal else None, sol.Q)
    if method == "det":
        return _logdet_path(a, R)
    return _rank_one_logdet(a, R)


def capacity_eve_decode_sB(ch: ChannelRealization, sol,
                           method: str = "cholesky") -> float:
    """Capacity of the colluding eavesdroppers for the BS stream."""
    if ch.L < 1:
        raise ValueError("colluding capacity needs L >= 1")
    a = ch.G_B.conj().T @ sol.w_B
    Gw = ch.G_E.conj().T @ sol.w
    R = ch.G_B.conj().T @ sol.Q @ ch.G_B + np.outer(Gw, np.conj(Gw)) + np.eye(ch.L)
    if method == "det":
        return _logdet_path(a, R)
    return _rank_one_logdet(a, R)


def capacity_eve_colluding_matrix(ch: ChannelRealization, W: np.ndarray,
                                  W_B: np.ndarray | None, Q: np.ndarray) -> float:
    """log det(I + G_E^H W G_E R^{-1}) for general (possibly high-rank) W."""
    R = ch.G_B.conj().T @ Q @ ch.G_B + np.eye(ch.L)
    if W_B is not None:
        R = R + ch.G_B.conj().T @ W_B @ ch.G_B
    S = ch.G_E.conj().T @ W @ ch.G_E
    s1, l1 = np.linalg.slogdet(R + S)
    s0, l0 = np.linalg.slogdet(R)
    return float(l1 - l0)


def rate_pair(ch: ChannelRealization, sol, mode: str = "normal") -> RatePair:
    """Secrecy and CUE rates of a design.

    ``normal`` takes the strongest individual eavesdropper. ``worst``
    takes the colluding eavesdroppers; when they can decode the BS stream
    (its colluding capacity reaches the CUE rate) they strip it, and the
    D2D leakage is evaluated against artificial noise alone.
    """
    if mode not in ("normal", "worst"):
        raise ValueError(f"unknown mode {mode!r}")
    cn = np.array([capacity_receiver(ch, sol, n) for n in range(ch.N)])
    cl = np.array([capacity_eaves_sD(ch, sol, l) for l in range(ch.L)])
    cl_b = np.array([capacity_eaves_sB(ch, sol, l) for l in range(ch.L)])
    cue = capacity_cue(ch, sol)
    best_rx = float(cn.min())
    out = RatePair(0.0, cue, cn, cl, cl_b, mode=mode)
    if ch.L == 0:
        out.secrecy_rate = max(0.0, best_rx)
        return out
    if mode == "normal":
        out.secrecy_rate = max(0.0, best_rx - float(cl.max()))
        return out
    ce = capacity_eve_colluding(ch, sol)
    ce_b = capacity_eve_decode_sB(ch, sol)
    decodes = ce_b > cue - DECODE_MARGIN and _gain_any(ch, sol)
    if decodes:
        ce = capacity_eve_colluding(ch, sol, include_bs_signal=False)
    out.eve_colluding = ce
    out.eve_colluding_sB = ce_b
    out.eve_decodes_sB = bool(decodes)
    out.secrecy_rate = max(0.0, best_rx - ce)
    return out


def _gain_any(ch: ChannelRealization, sol) -> bool:
    # a silent BS stream cannot be stripped and changes nothing
    return bool(np.linalg.norm(ch.G_B.conj().T @ sol.w_B) > 0.0)


def attach_rates(ch: ChannelRealization, sol: BeamformingSolution,
                 mode: str) -> BeamformingSolution:
    sol.rates = rate_pair(ch, sol, mode)
    return sol


def power_violation(cfg: SystemConfig, sol) -> tuple[float, float]:
    """Largest per-element excess over P_max/M and total BS excess over P_B."""
    per = float(np.max(np.abs(sol.w) ** 2) - cfg.P_max / cfg.M)
    bs = float(np.real(np.vdot(sol.w_B, sol.w_B)) + np.real(np.trace(sol.Q)) - cfg.P_B)
    return per, bs


def is_power_feasible(cfg: SystemConfig, sol) -> bool:
    per, bs = power_violation(cfg, sol)
    qmin = float(np.linalg.eigvalsh(0.5 * (sol.Q + sol.Q.conj().T))[0])
    return per <= 1e-7 and bs <= 1e-6 * cfg.P_B and qmin >= -1e-9


def scale_to_budget(cfg: SystemConfig, w: np.ndarray, w_B: np.ndarray,
                    Q: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Shrink a design onto the power budgets (never amplifies).

    Elements of w above P_max/M are clipped in magnitude (phase kept), and
    (w_B, Q) are scaled jointly when their total power exceeds P_B.
    """
    w = np.array(w, dtype=complex)
    cap = np.sqrt(cfg.P_max / cfg.M)
    mag = np.abs(w)
    over = mag > cap
    w[over] *= cap / mag[over]
    Q = 0.5 * (Q + Q.conj().T)
    tot = float(np.real(np.vdot(w_B, w_B)) + np.real(np.trace(Q)))
    if tot > cfg.P_B:
        s = cfg.P_B / tot
        w_B = w_B * np.sqrt(s)
        Q = Q * s
    return w, np.asarray(w_B, complex), Q
