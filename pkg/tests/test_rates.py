import numpy as np
from hypothesis import given
from hypothesis import strategies as st

from oracles import colluding_capacity
from vaasec import rates as R
from vaasec.scenario import ChannelRealization, SystemConfig, generate_channels


def random_solution(cfg, rng, an=True):
    def cn(*s):
        return (rng.standard_normal(s) + 1j * rng.standard_normal(s)) / np.sqrt(2)
    A = cn(cfg.K, cfg.K) if an else np.zeros((cfg.K, cfg.K))
    return R.BeamformingSolution(w=cn(cfg.M) * 3, w_B=cn(cfg.K) * 10, Q=A @ A.conj().T)


def test_hand_computed_single_antenna_rates():
    one = np.ones((1, 1), complex)
    ch = ChannelRealization(h_D=one, h_E=0.5 * one, h_C=one[0], h_Bn=0 * one,
                            h_Bl=one, h_BC=one[0])
    sol = R.BeamformingSolution(w=np.array([2.0 + 0j]), w_B=np.array([1.0 + 0j]),
                                Q=np.zeros((1, 1)))
    rp = R.rate_pair(ch, sol, "normal")
    assert np.isclose(rp.per_receiver[0], np.log(5.0))
    assert np.isclose(rp.per_eaves[0], np.log(1 + 1.0 / 2.0))
    assert np.isclose(rp.cue_rate, np.log(1 + 1.0 / 5.0))
    assert np.isclose(rp.secrecy_rate, np.log(5.0) - np.log(1.5))


@given(st.integers(0, 2**32 - 1))
def test_logdet_paths_agree_with_oracle(seed):
    rng = np.random.default_rng(seed)
    cfg = SystemConfig(K=4, M=3, N=2, L=3)
    ch = generate_channels(cfg, seed)
    sol = random_solution(cfg, rng)
    c1 = R.capacity_eve_colluding(ch, sol)
    c2 = R.capacity_eve_colluding(ch, sol, method="det")
    ref = colluding_capacity(ch.G_E, ch.G_B, sol.w, sol.w_B, sol.Q)
    assert np.isclose(c1, c2, rtol=1e-9, atol=1e-10)
    assert np.isclose(c1, ref, rtol=1e-8, atol=1e-10)


@given(st.integers(0, 2**32 - 1))
def test_worst_mode_never_beats_normal_mode(seed):
    rng = np.random.default_rng(seed)
    cfg = SystemConfig(K=4, M=3, N=2, L=3)
    ch = generate_channels(cfg, seed)
    sol = random_solution(cfg, rng, an=bool(seed % 2))
    n, w = R.rate_pair(ch, sol, "normal"), R.rate_pair(ch, sol, "worst")
    assert w.secrecy_rate <= n.secrecy_rate + 1e-12
    assert w.cue_rate == n.cue_rate
    assert n.secrecy_rate >= 0.0


def test_stripping_removes_bs_signal_from_jamming():
    cfg = SystemConfig(K=3, M=2, N=1, L=2)
    ch = generate_channels(cfg, 4)
    sol = R.BeamformingSolution(w=np.ones(2, complex), w_B=ch.h_Bl[0].conj() * 30,
                                Q=np.zeros((3, 3)))
    rp = R.rate_pair(ch, sol, "worst")
    assert rp.eve_decodes_sB
    assert np.isclose(rp.eve_colluding, R.capacity_eve_colluding(ch, sol, include_bs_signal=False))


def test_no_eavesdroppers_secrecy_is_multicast_rate():
    cfg = SystemConfig(L=0)
    ch = generate_channels(cfg, 0)
    sol = random_solution(cfg, np.random.default_rng(0))
    rp = R.rate_pair(ch, sol, "worst")
    assert np.isclose(rp.secrecy_rate, rp.per_receiver.min())


@given(st.integers(0, 2**32 - 1), st.floats(0.1, 100.0))
def test_scale_to_budget_is_feasible_and_never_amplifies(seed, gain):
    rng = np.random.default_rng(seed)
    cfg = SystemConfig(K=4, M=3)
    s = random_solution(cfg, rng)
    w, w_B, Q = R.scale_to_budget(cfg, s.w * gain, s.w_B * gain * 20, s.Q * gain * 100)
    out = R.BeamformingSolution(w=w, w_B=w_B, Q=Q)
    assert R.is_power_feasible(cfg, out)
    assert np.all(np.abs(w) <= np.abs(s.w * gain) + 1e-12)
