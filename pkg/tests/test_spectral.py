import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from delayheat.delayed_exp import delayed_exp
from delayheat.errors import ModeOverflow
from delayheat.reduction import ProblemData, ReducedProblem, zero_data
from delayheat.spectral import (
    ModeState,
    build_mode,
    forcing_coeff,
    history_coeff,
    lift_coeff,
    mode_constants,
    mode_solve,
    mode_solve_steps,
    sine_coeff,
    sine_coeffs,
    source_coeff,
)

PI = math.pi
zero_t = lambda t: 0.0 * np.asarray(t, float)


def rp(a1sq=1.0, a2sq=0.0, c1=0.0, c2=0.0, tau=1.0, length=PI):
    return ReducedProblem(a1sq, a2sq, c1, c2, tau, length)


def synthetic(L, raw, tau, phi=lambda s: 1.0 + 0.0 * np.asarray(s), F=None):
    D = raw * math.exp(-L * tau) if raw else 0.0
    return ModeState(1, L, D, raw, phi, F)


def test_mode_constants_examples():
    assert mode_constants(rp(), 2).big_l == pytest.approx(-4.0, rel=1e-15)
    c = mode_constants(rp(a2sq=0.0, c2=0.0), 5)
    assert (c.raw_delay, c.big_d) == (0.0, 0.0)
    c = mode_constants(rp(a2sq=1.0, tau=0.1), 1)
    assert c.big_l == pytest.approx(-1.0, rel=1e-15)
    assert c.raw_delay == pytest.approx(-1.0, rel=1e-15)
    assert c.big_d == pytest.approx(-math.exp(0.1), rel=1e-14)
    assert c.big_d == pytest.approx(-1.1051709180756477, rel=1e-14)


def test_mode_constants_invariants():
    p = rp(a1sq=0.7, a2sq=0.3, c1=0.4, c2=-1.2, tau=0.3, length=2.0)
    ls = []
    for n in range(1, 20):
        c = mode_constants(p, n)
        assert c.big_d == pytest.approx(c.raw_delay * math.exp(-c.big_l * p.tau), rel=1e-13)
        ls.append(c.big_l)
    assert np.all(np.diff(ls) < 0)
    with pytest.raises(ValueError):
        mode_constants(p, 0)


def test_mode_constants_overflow():
    with pytest.raises(ModeOverflow) as exc:
        mode_constants(rp(a2sq=1.0, tau=1.0), 30)
    assert exc.value.mode == 30


def test_sine_coeff_examples():
    assert sine_coeff(np.sin, PI, 1) == pytest.approx(1.0, abs=1e-12)
    assert sine_coeff(np.sin, PI, 2) == pytest.approx(0.0, abs=1e-12)
    assert sine_coeff(lambda x: 1.0 + 0 * x, 1.0, 1) == pytest.approx(4 / PI, abs=1e-12)
    assert sine_coeff(lambda x: x, 1.0, 3) == pytest.approx(2 / (3 * PI), abs=1e-12)


def test_orthogonality():
    l = 1.7
    ns = np.arange(1, 13)
    for k in range(1, 13):
        got = sine_coeffs(lambda x, k=k: np.sin(PI * k * x / l), l, ns)
        assert np.abs(got - (ns == k)).max() <= 1e-10


def test_lift_coeff_examples_and_cross_check():
    assert lift_coeff(1, 1, 2) == 0.0
    assert lift_coeff(1, 1, 1) == pytest.approx(4 / PI, rel=1e-15)
    assert lift_coeff(0, 1, 1) == pytest.approx(2 / PI, rel=1e-15)
    l, a, b = 2.5, 0.7, -1.3
    ns = np.arange(1, 21)
    want = sine_coeffs(lambda x: a + (b - a) * x / l, l, ns)
    assert np.abs(lift_coeff(a, b, ns) - want).max() <= 1e-10


def test_source_coeff_examples():
    const = ProblemData(lambda x, s: 2 + 0 * x, lambda t: 2 + zero_t(t), lambda t: 2 + zero_t(t))
    assert source_coeff(const, rp(), 1, 0.7) == pytest.approx(0.0, abs=1e-9)

    ramp = ProblemData(lambda x, s: s * (1 - x / PI), lambda t: np.asarray(t, float), zero_t)
    for t in (0.0, 0.5, 2.0):
        assert source_coeff(ramp, rp(c1=1.0), 1, t) == pytest.approx(2 / PI * (t - 1), rel=1e-8, abs=1e-9)

    expo = ProblemData(lambda x, s: np.exp(s) * (1 - x / PI), np.exp, zero_t)
    assert source_coeff(expo, rp(c2=1.0), 1, 1.0) == pytest.approx(2 / PI * (1 - math.e), rel=1e-8)


def test_history_coeff_examples():
    lift = ProblemData(lambda x, s: np.exp(s) + (np.cos(s) - np.exp(s)) * x / PI, np.exp, np.cos)
    assert np.abs(history_coeff(lift, rp(), 3, np.linspace(-1, 0, 5))).max() <= 1e-11

    sin1 = ProblemData(lambda x, s: np.sin(x) + 0 * s, zero_t, zero_t)
    assert history_coeff(sin1, rp(), 1, -0.3) == pytest.approx(1.0, abs=1e-12)
    assert history_coeff(sin1, rp(), 2, -0.3) == pytest.approx(0.0, abs=1e-12)

    decay = ProblemData(lambda x, s: np.exp(s) * np.sin(x), zero_t, zero_t)
    assert history_coeff(decay, rp(tau=0.4), 1, -0.4) == pytest.approx(math.exp(-0.4), rel=1e-12)


def test_forcing_coeff_examples():
    assert forcing_coeff(zero_data(), rp(), 2, 0.3) == 0.0
    d = ProblemData(lambda x, s: 0 * x, zero_t, zero_t, lambda x, t: np.sin(x) + 0 * t)
    assert forcing_coeff(d, rp(), 1, 0.5) == pytest.approx(1.0, abs=1e-12)
    assert forcing_coeff(d, rp(), 2, 0.5) == pytest.approx(0.0, abs=1e-12)
    d = ProblemData(lambda x, s: 0 * x, zero_t, zero_t, lambda x, t: t * x * (1 - x))
    assert forcing_coeff(d, rp(length=1.0), 1, 0.75) == pytest.approx(0.75 * 8 / PI**3, rel=1e-12)
    # vectorised in t
    ts = np.array([0.1, 0.2])
    assert forcing_coeff(d, rp(length=1.0), 1, ts) == pytest.approx(ts * 8 / PI**3, rel=1e-12)


def test_mode_solve_unit_history_is_delayed_exp():
    for raw in (-2.0, 0.5, 2.0):
        ms = synthetic(0.0, raw, 1.0)
        for t in (0.3, 1.5, 2.9):
            assert mode_solve(ms, 1.0, t) == pytest.approx(delayed_exp(raw, 1.0, t), rel=1e-8)
            assert mode_solve_steps(ms, 1.0, t, 1 / 2000) == pytest.approx(
                delayed_exp(raw, 1.0, t), rel=1e-8)


def test_mode_solve_no_delay_is_exponential():
    ms = synthetic(-1.3, 0.0, 0.5, phi=lambda s: 2.0 + 0 * np.asarray(s))
    for t in (0.0, 0.4, 1.7):
        assert mode_solve(ms, 0.5, t) == pytest.approx(2 * math.exp(-1.3 * t), rel=1e-13)
        assert mode_solve_steps(ms, 0.5, t, 0.5 / 2000) == pytest.approx(2 * math.exp(-1.3 * t), rel=1e-8)


def test_mode_solve_initial_value():
    ms = synthetic(-0.8, 1.1, 0.5, phi=lambda s: np.cos(3 * np.asarray(s)) + 0.2)
    assert mode_solve(ms, 0.5, 0.0) == pytest.approx(1.2, rel=1e-15)
    assert mode_solve_steps(ms, 0.5, 0.0, 0.01) == pytest.approx(1.2, rel=1e-15)
    with pytest.raises(ValueError):
        mode_solve(ms, 0.5, -0.1)


def test_continuity_across_knots():
    tau = 0.5
    d = ProblemData(lambda x, s: np.sin(x) * (1 + s) + np.sin(2 * x) * s**2, zero_t, zero_t,
                    lambda x, t: np.sin(x) * np.cos(t))
    p = rp(a2sq=0.2, c1=0.3, c2=-0.4, tau=tau)
    for n in (1, 2):
        ms = build_mode(d, p, n)
        for k in (1, 2, 3):
            t = k * tau
            assert abs(mode_solve(ms, tau, t - 1e-10) - mode_solve(ms, tau, t)) <= 1e-8


@settings(max_examples=15, deadline=None)
@given(L=st.floats(-3, 1), raw=st.floats(-3, 3), t=st.floats(0, 1.5), w=st.floats(0.5, 4))
def test_representation_matches_steps(L, raw, t, w):
    tau = 0.5
    ms = synthetic(L, raw, tau, phi=lambda s: np.cos(w * np.asarray(s)),
                   F=lambda s: np.sin(w * np.asarray(s)))
    a = mode_solve(ms, tau, t)
    b = mode_solve_steps(ms, tau, t, tau / 2000)
    assert a == pytest.approx(b, rel=1e-6, abs=1e-9)
