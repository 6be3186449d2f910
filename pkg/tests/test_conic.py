import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from vaasec.conic import ConicProgram, add_exp_cone_soc, quad_trace, stack
from vaasec.verify import macro_min_a


def test_linear_program():
    p = ConicProgram()
    x, y = p.real("x"), p.real("y")
    p.add_le(x + y, 4.0)
    p.add_le(x, 3.0)
    p.add_ge(y, 0.0)
    p.maximize(x * 2.0 + y)
    r = p.solve()
    assert r.ok and r.value(x) == pytest.approx(3.0, abs=1e-6)
    assert r.objective == pytest.approx(7.0, abs=1e-6)


def test_second_order_cone():
    p = ConicProgram()
    v = p.real("v", 2)
    p.add_soc(1.0, v)
    p.maximize(v[0] + v[1])
    r = p.solve()
    assert r.objective == pytest.approx(math.sqrt(2.0), abs=1e-6)


def test_rotated_cone():
    # max z s.t. z^2 <= e f with e = 1, f = 2
    p = ConicProgram()
    z = p.real("z")
    p.add_rotated(1.0, 2.0, stack([z]))
    p.maximize(z)
    assert p.solve().objective == pytest.approx(math.sqrt(2.0), abs=1e-6)


@given(st.integers(0, 2**32 - 1))
def test_hermitian_psd_gives_top_eigenvalue(seed):
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
    C = a @ a.conj().T
    p = ConicProgram()
    X = p.hermitian("X", 3)
    p.add_le(X.trace().real, 1.0)
    p.maximize(quad_trace(X, C))
    r = p.solve()
    lam = np.linalg.eigvalsh(C)[-1]
    assert r.objective == pytest.approx(lam, rel=1e-5)
    Xv = r.value(X)
    assert np.allclose(Xv, Xv.conj().T, atol=1e-8)
    assert np.linalg.eigvalsh(Xv)[0] >= -1e-7


@given(st.floats(-2.0, 2.0))
def test_exp_macro_tracks_exponential(phi):
    assert macro_min_a(phi) == pytest.approx(math.expm1(phi), abs=1e-4)


def test_exp_macro_center_extends_range():
    p = ConicProgram()
    a = p.real("a")
    add_exp_cone_soc(p, a, 6.0, 6, center=6.0)
    p.maximize(a * -1.0)
    r = p.solve()
    assert r.value(a) == pytest.approx(math.expm1(6.0), rel=1e-6)


def test_complex_constraint_is_rejected():
    p = ConicProgram()
    z = p.complex("z", 1)
    with pytest.raises(ValueError):
        p.add_le(z[0], 1.0)
