import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.optimize import least_squares

from kmtwist.estimate import deviation_metrics, mode_estimate, rotation_period


def profile(n, q, amp, psi, shift=0.0, extra=None):
    theta = 2 * math.pi * q * np.arange(1, n + 1) / n
    u = theta + shift + amp * np.sin(theta + psi)
    if extra is not None:
        ell, a = extra
        u = u + a * np.cos(2 * math.pi * ell * np.arange(1, n + 1) / n + 0.3)
    return u


def fit_oracle(u, q):
    """Grid search over (r, psi) followed by a local least-squares refinement."""
    n = u.size
    theta = 2 * math.pi * q * np.arange(1, n + 1) / n
    v = u - theta

    def resid(p):
        return v - p[0] - p[1] * np.sin(theta + p[2])

    grid = [(m, r, s) for m in (np.mean(v),) for r in np.linspace(0, 0.6, 13) for s in np.linspace(-3, 3, 25)]
    start = min(grid, key=lambda p: np.sum(resid(p) ** 2))
    sol = least_squares(resid, start, xtol=1e-14, ftol=1e-14, gtol=1e-14).x
    if sol[1] < 0:
        sol[1], sol[2] = -sol[1], sol[2] + math.pi
    return sol[0], sol[1], math.remainder(sol[2], 2 * math.pi)


def test_exact_twist():
    n = 400
    e = mode_estimate(2 * math.pi * 3 * np.arange(1, n + 1) / n, 3, n)
    assert e.r < 1e-14 and abs(e.mean_drift) < 1e-14


def test_example_amplitude_and_phase():
    u = profile(1000, 1, 0.2, 1.0)
    e = mode_estimate(u, 1, 1000)
    assert e.r == pytest.approx(0.2, abs=1e-3)
    assert e.psi == pytest.approx(1.0, abs=1e-3)
    drift, r, psi = fit_oracle(u, 1)
    assert (e.r, e.psi, e.mean_drift) == pytest.approx((r, psi, drift), abs=1e-10)


def test_constant_shift_is_drift():
    e = mode_estimate(profile(1000, 2, 0.0, 0.0, shift=0.3), 2)
    assert e.r < 1e-12 and e.mean_drift == pytest.approx(0.3, abs=1e-14)


def test_raw_projections():
    e = mode_estimate(profile(500, 2, 0.3, -2.0), 2)
    assert e.r == pytest.approx(2 * math.hypot(e.c_coef, e.s_coef), abs=1e-15)


@given(amp=st.floats(0, 0.5), psi=st.floats(-math.pi, math.pi).filter(lambda p: p > -math.pi + 1e-9),
       n=st.integers(100, 1500), q=st.integers(1, 4))
def test_round_trip(amp, psi, n, q):
    e = mode_estimate(profile(n, q, amp, psi), q, n)
    assert e.r == pytest.approx(amp, abs=2e-3)
    if amp > 0.01:
        assert abs(math.remainder(e.psi - psi, 2 * math.pi)) < 2e-3


@given(c=st.floats(-10, 10), seed=st.integers(0, 2**32 - 1))
def test_phase_equivariance(c, seed):
    rng = np.random.default_rng(seed)
    u = profile(300, 2, rng.uniform(0, 0.5), rng.uniform(-3, 3)) + 0.01 * rng.normal(size=300)
    a, b = mode_estimate(u, 2), mode_estimate(u + c, 2)
    assert b.mean_drift == pytest.approx(a.mean_drift + c, abs=1e-12)
    assert b.r == pytest.approx(a.r, abs=1e-12)
    assert abs(math.remainder(b.psi - a.psi, 2 * math.pi)) < 1e-12 or a.r < 1e-9


@pytest.mark.parametrize("q", [1, 2, 3])
def test_other_modes_do_not_leak(q):
    n = 1000
    base = mode_estimate(profile(n, q, 0.2, 0.4), q)
    for ell in range(1, n // 4 + 1, 7):
        if ell == q:
            continue
        e = mode_estimate(profile(n, q, 0.2, 0.4, extra=(ell, 0.1)), q)
        assert abs(e.r - base.r) < 1e-3 and abs(e.psi - base.psi) < 1e-3 / 0.2


def test_shape_validation():
    with pytest.raises(ValueError):
        mode_estimate(np.zeros(10), 1, 11)
    with pytest.raises(ValueError):
        mode_estimate(np.zeros(10), 0)


def test_deviation_examples():
    t = np.linspace(0, 1, 1000)
    assert deviation_metrics(t, t) == (0.0, 0.0)
    assert deviation_metrics(t + 1e-7, t) == pytest.approx((1e-7, 1e-7), rel=1e-6)
    u = t.copy()
    u[0] += 0.5
    assert deviation_metrics(u, t) == pytest.approx((0.5, 0.5 / math.sqrt(1000)), abs=1e-15)
    with pytest.raises(ValueError):
        deviation_metrics(t, t[:-1])


def test_rotation_period():
    ts = np.linspace(0, 100, 400)
    psi = np.mod(0.43 * ts + 1.0, 2 * math.pi) - math.pi
    assert rotation_period(ts, psi) == pytest.approx(2 * math.pi / 0.43, rel=1e-9)
    assert rotation_period(ts, np.zeros_like(ts)) == math.inf
    with pytest.raises(ValueError):
        rotation_period(ts[:2], psi[:2])
