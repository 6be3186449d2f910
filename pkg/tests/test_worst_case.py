import numpy as np
import pytest

from oracles import colluding_capacity
from vaasec import rates as R
from vaasec import worst_case as wc
from vaasec.normal_case import silent_design
from vaasec.scenario import SystemConfig, generate_channels

DESK = SystemConfig.from_db(20, 40, K=6, M=4, N=3, L=3)


def test_reduce_bs_rank_keeps_every_rate_term():
    rng = np.random.default_rng(0)
    a = rng.standard_normal((5, 3)) + 1j * rng.standard_normal((5, 3))
    W_B = a @ a.conj().T
    Q = np.eye(5) * 0.3
    h = rng.standard_normal(5) + 1j * rng.standard_normal(5)
    W1, Q1 = wc.reduce_bs_rank(W_B, Q, h)
    assert np.linalg.matrix_rank(W1, tol=1e-8) == 1
    assert np.isclose(np.real(h.conj() @ W1 @ h), np.real(h.conj() @ W_B @ h))
    assert np.allclose(W1 + Q1, W_B + Q)
    assert np.linalg.eigvalsh(Q1)[0] >= -1e-9
    assert np.isclose(np.real(h.conj() @ Q1 @ h), np.real(h.conj() @ Q @ h))


def test_inner_program_respects_the_leakage_lmi():
    ch = generate_channels(DESK, 1000)
    for beta in (0.2, 1.0):
        rel = wc.solve_inner(ch, DESK, beta)
        assert rel is not None
        lmi = (np.expm1(beta) * (ch.G_B.conj().T @ (rel.W_B + rel.Q) @ ch.G_B + np.eye(3))
               - ch.G_E.conj().T @ rel.W @ ch.G_E)
        assert np.linalg.eigvalsh(0.5 * (lmi + lmi.conj().T))[0] >= -1e-7
        assert np.all(np.diff(rel.history) >= -1e-7)
        # every leaked eigen-mode stays within beta, so log-det <= rank(W) beta
        Rj = ch.G_B.conj().T @ (rel.W_B + rel.Q) @ ch.G_B + np.eye(3)
        S = ch.G_E.conj().T @ rel.W @ ch.G_E
        lam = np.linalg.eigvals(np.linalg.solve(Rj, S)).real.max()
        assert np.log1p(lam) <= beta + 1e-6
        rank = np.sum(np.linalg.eigvalsh(rel.W) > 1e-6 * np.linalg.eigvalsh(rel.W)[-1])
        ce = R.capacity_eve_colluding_matrix(ch, rel.W, rel.W_B, rel.Q)
        assert ce <= rank * beta + 1e-6


def test_beta_upper_bound():
    ch = generate_channels(DESK, 0)
    g = np.sum(np.abs(ch.h_D) ** 2, axis=1)
    assert wc.beta_upper_bound(ch, DESK) == pytest.approx(np.log1p(4 * 100 * g.min()))


@pytest.fixture(scope="module")
def worst_solution():
    ch = generate_channels(DESK, 7)
    return ch, wc.solve_worst(ch, DESK)


def test_solve_worst_is_feasible_and_consistent(worst_solution):
    ch, sol = worst_solution
    assert R.is_power_feasible(DESK, sol)
    assert abs(sol.R_S - sol.rates.secrecy_rate) <= 1e-3
    assert abs(sol.R_C - sol.rates.cue_rate) <= 1e-3
    assert sol.subcase in (1, 2)


def test_worst_leakage_matches_beta_when_rank_one(worst_solution):
    ch, sol = worst_solution
    if not sol.rank_one:
        pytest.skip("relaxation is not rank one on this channel")
    w_B = np.zeros_like(sol.w_B) if sol.rates.eve_decodes_sB else sol.w_B
    ce = colluding_capacity(ch.G_E, ch.G_B, sol.w, w_B, sol.Q)
    assert ce <= sol.diagnostics["beta"] + 1e-3


def test_cold_start_survives_weak_links_at_low_power():
    # eta = 1 asks Tr(H_Dn W) >= 1/2, beyond receiver 1's reach at 0 dB
    cfg = SystemConfig.from_db(0, 40, K=6, M=4, N=3, L=3)
    ch = generate_channels(cfg, 16)
    reach = 0.25 * np.sum(np.abs(ch.h_D), axis=1) ** 2
    assert reach.min() < 0.5
    assert wc.solve_inner(ch, cfg, 0.3) is None
    rel = wc.solve_inner(ch, cfg, 0.3, opts=wc.WorstOptions(eta_ladder=(1.0, 4.0, 16.0)))
    assert rel is not None and np.all(np.diff(rel.history) >= -1e-7)
    sol = wc.solve_worst(ch, cfg)
    assert sol.diagnostics["eta_rescue"]
    assert R.is_power_feasible(cfg, sol)
    assert sol.rates.weighted(cfg.alpha) > 0


def test_worst_never_below_the_silent_design():
    cfg = SystemConfig.from_db(0, 40, K=6, M=4, N=3, L=3)
    for seed in (5, 19):
        ch = generate_channels(cfg, seed)
        quiet = silent_design(ch, cfg, mode="worst")
        sol = wc.solve_worst(ch, cfg)
        assert sol.rates.weighted(cfg.alpha) >= quiet.rates.weighted(cfg.alpha) - 1e-6
        assert abs(sol.R_S - sol.rates.secrecy_rate) <= 1e-3
        assert abs(sol.R_C - sol.rates.cue_rate) <= 1e-3


def test_constraint_tally():
    t = wc.constraint_tally(DESK)
    assert t["elem"] == 4 and t["rx_agm"] == 3


def test_negative_beta_rejected():
    ch = generate_channels(DESK, 0)
    aux = wc.WorstAux(0, 0, 0, 0, 0, 1.0, np.ones(3))
    with pytest.raises(ValueError):
        wc.build_inner_sdp(ch, DESK, -0.1, aux)
