import numpy as np
import pytest

from vaasec import rates as R
from vaasec import suboptimal as so
from vaasec.normal_case import (ScaOptions, build_subproblem, constraint_tally,
                                expansion_point, initial_designs, run_sca, silent_design,
                                solve_normal)
from vaasec.scenario import SystemConfig, generate_channels

DESK = SystemConfig.from_db(20, 40, K=6, M=4, N=3, L=3)


@pytest.fixture(scope="module")
def solved():
    ch = generate_channels(DESK, 11)
    return ch, solve_normal(ch, DESK)


def test_history_never_drops(solved):
    _, sol = solved
    assert len(sol.history) == sol.iterations
    assert np.all(np.diff(sol.history) >= -1e-7)


def test_solution_is_feasible_and_claims_hold(solved):
    ch, sol = solved
    assert R.is_power_feasible(DESK, sol)
    assert abs(sol.R_S - sol.rates.secrecy_rate) <= 1e-3
    assert abs(sol.R_C - sol.rates.cue_rate) <= 1e-3
    # the BS stream stays undecodable at every eavesdropper
    assert sol.rates.per_eaves_sB.max() <= sol.rates.cue_rate - DESK.chi + 1e-6


def test_first_subproblem_is_feasible_at_every_start():
    ch = generate_channels(DESK, 3)
    opts = ScaOptions()
    for start in initial_designs(ch, DESK):
        sub = build_subproblem(ch, DESK, expansion_point(ch, *start, True), opts)
        assert sub.prog.solve(opts.solver).ok


def test_never_below_the_null_space_design():
    for seed in range(3):
        ch = generate_channels(DESK, seed)
        sub = so.plan_suboptimal(ch, DESK, so.SuboptOptions(mode="normal"))
        sol = solve_normal(ch, DESK)
        assert sol.rates.weighted(DESK.alpha) >= sub.rates.weighted(DESK.alpha) - 1e-6


def test_no_eavesdroppers():
    cfg = DESK.with_(L=0)
    ch = generate_channels(cfg, 0)
    sol = solve_normal(ch, cfg)
    assert sol.rates.secrecy_rate > 0
    assert R.is_power_feasible(cfg, sol)


def test_silent_vaa_wins_when_the_link_costs_the_cue_more():
    cfg = SystemConfig.from_db(30, 40, K=6, M=1, N=3, L=0)
    ch = generate_channels(cfg, 4)
    quiet = silent_design(ch, cfg)
    sol = solve_normal(ch, cfg)
    assert not np.any(quiet.w)
    assert np.isclose(np.vdot(quiet.w_B, quiet.w_B).real, cfg.P_B)
    assert sol.status == "silent-vaa"
    assert sol.rates.weighted(cfg.alpha) >= quiet.rates.weighted(cfg.alpha) - 1e-12
    assert sol.diagnostics["sca_objective"] < sol.rates.weighted(cfg.alpha)


def test_silent_design_respects_bs_stream_blocking():
    for seed in range(5):
        ch = generate_channels(DESK, seed)
        quiet = silent_design(ch, DESK)
        if quiet is not None:
            assert quiet.rates.per_eaves_sB.max() <= quiet.rates.cue_rate - DESK.chi


def test_run_sca_logs_each_iteration():
    ch = generate_channels(DESK, 1)
    lines = []
    sol = run_sca(ch, DESK, initial_designs(ch, DESK)[0], log=lines.append)
    assert sol is not None and len(lines) == sol.iterations


def test_constraint_tally_counts_families():
    t = constraint_tally(DESK)
    assert t == constraint_tally(DESK.with_(M=7)) and t > 0
