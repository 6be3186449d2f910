import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import golden_max, split_metric
from vaasec import rates as R
from vaasec import suboptimal as so
from vaasec.scenario import SystemConfig, generate_channels

ONE = SystemConfig.from_db(20, 40, K=6, M=5, N=2, L=2)
TWO = SystemConfig.from_db(20, 40, K=15, M=5, N=5, L=5)


@given(st.integers(0, 10_000))
def test_case_one_zeros(seed):
    ch = generate_channels(ONE, seed)
    assert so.case_of(ch) == "one"
    plan, sol = so.plan_case_one(ch, ONE)
    assert np.abs(ch.G_EC.conj().T @ plan.w).max() <= 1e-8
    assert np.abs(ch.G_BN.conj().T @ plan.w_B).max() <= 1e-8
    assert R.is_power_feasible(ONE, sol)
    assert sol.rates.per_eaves.max() <= 1e-12


@given(st.integers(0, 10_000))
def test_case_two_invisibility(seed):
    ch = generate_channels(TWO, seed)
    assert so.case_of(ch) == "two"
    plan, sol = so.plan_case_two(ch, TWO)
    assert abs(np.vdot(ch.h_C, plan.w)) <= 1e-8
    assert np.abs(ch.G_BNE.conj().T @ plan.w_B).max() <= 1e-8
    assert np.abs(ch.G_BNC.conj().T @ plan.w_B_AN).max() <= 1e-8
    assert R.is_power_feasible(TWO, sol)
    assert 0.0 <= plan.theta <= 1.0


@given(st.floats(0.05, 0.95), st.floats(0.0, 3.0), st.integers(0, 1000))
def test_theta_matches_search(alpha, p_db, seed):
    cfg = TWO.with_(alpha=alpha, P_max=10 ** p_db)
    plan, _ = so.plan_case_two(generate_channels(cfg, seed), cfg)
    co = plan.coeffs
    args = (co["lam1"], co["lam2"], co["I"], co["J"], co["P"], co["P_B"], co["alpha"])
    ref = golden_max(lambda t: split_metric(t, *args), 1e-15, 1.0)
    assert abs(plan.theta - ref) <= 1e-5


def test_theta_root_agrees_with_textbook_formula():
    co = so.theta_coefficients(0.8, 0.6, 1.0, 0.5, 100.0, 1e4, 0.5)
    A, B, C = co["A"], co["B"], co["C"]
    th, status = so.theta_closed_form(co)
    assert status == "ok"
    assert th == pytest.approx((-B - np.sqrt(B * B - 4 * A * C)) / (2 * A), rel=1e-9)


def test_theta_without_cue_gain_jams_with_everything():
    # the CUE term vanishes, so the whole budget goes to jamming
    co = so.theta_coefficients(0.8, 0.6, 1.0, 1e-30, 100.0, 1e4, 0.5)
    th, status = so.theta_closed_form(co)
    assert np.isfinite(th) and th == 1.0 and status == "clamped"


def test_theta_objective_matches_oracle_formula():
    args = (0.7, 0.5, 2.0, 3.0, 50.0, 1e4, 0.4)
    co = so.theta_coefficients(*args)
    for t in (0.01, 0.3, 0.9):
        assert so.theta_objective(t, co) == pytest.approx(split_metric(t, *args), rel=1e-12)


@pytest.mark.parametrize("cfg", [
    SystemConfig.from_db(20, 40, K=4, M=4, N=3, L=3),   # no BS null space for receivers + Eve
    SystemConfig.from_db(20, 40, K=6, M=1, N=2, L=2),   # single transmitter
    SystemConfig.from_db(20, 40, K=6, M=4, N=3, L=0),   # no eavesdroppers
    SystemConfig.from_db(20, 40, K=2, M=2, N=1, L=1),
])
def test_fallbacks_stay_feasible(cfg):
    for seed in range(5):
        ch = generate_channels(cfg, seed)
        sol = so.plan_suboptimal(ch, cfg)
        assert R.is_power_feasible(cfg, sol)
        assert np.isfinite(sol.rates.weighted(cfg.alpha))


def test_maxmin_gain_never_below_start():
    rng = np.random.default_rng(3)
    a = rng.standard_normal((3, 4)) + 1j * rng.standard_normal((3, 4))
    x0 = np.ones(4, complex) / 2
    x, g, _ = so.maxmin_gain(a, 1.0, x0=x0)
    assert np.linalg.norm(x) <= 1.0 + 1e-7
    assert g >= np.min(np.abs(a @ x0) ** 2) - 1e-9
