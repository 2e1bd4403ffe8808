import math

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from kmtwist.graph import GraphSpec
from kmtwist.model import SystemParams, rotating_vector_field
from kmtwist.ode import (DivergenceError, IntegratorConfig, StepLimitError, integrate,
                         integrate_to_steady)

TIGHT = IntegratorConfig(rel_tol=1e-10, abs_tol=1e-10)


def decay(t, y):
    return -y


def oscillator(t, y):
    return np.array([y[1], -y[0]])


def expm_series(A, terms=40):
    out = np.eye(A.shape[0])
    term = np.eye(A.shape[0])
    for k in range(1, terms):
        term = term @ A / k
        out = out + term
    return out


def test_exponential_decay():
    tr = integrate(decay, [1.0], 0.0, 1.0, TIGHT)
    assert tr.final[0] == pytest.approx(math.exp(-1), abs=1e-8)
    assert tr.times.tolist() == [1.0]


def test_harmonic_orbit_closes():
    tr = integrate(oscillator, [1.0, 0.0], 0.0, 2 * math.pi, TIGHT, np.linspace(0, 2 * math.pi, 50))
    assert tr.final == pytest.approx([1.0, 0.0], abs=1e-7)
    energy = np.sum(tr.states**2, axis=1)
    assert np.max(np.abs(energy - 1.0)) < 1e-7


def test_linear_system_matches_series(rng):
    A = rng.normal(size=(5, 5))
    y0 = rng.normal(size=5)
    tr = integrate(lambda t, y: A @ y, y0, 0.0, 1.0, TIGHT)
    assert np.max(np.abs(tr.final - expm_series(A) @ y0)) < 1e-6


def test_agrees_with_reference_dop853(rng):
    A = rng.normal(size=(4, 4)) * 0.5

    def f(t, y):
        return A @ np.sin(y) + np.cos(t)

    y0 = rng.normal(size=4)
    ts = np.linspace(0, 5, 11)
    ours = integrate(f, y0, 0.0, 5.0, TIGHT, ts)
    ref = solve_ivp(f, (0, 5), y0, method="DOP853", rtol=1e-12, atol=1e-12, t_eval=ts)
    assert np.max(np.abs(ours.states - ref.y.T)) < 1e-8


def test_error_decreases_with_tolerance():
    errs = []
    for tol in (1e-6, 1e-7, 1e-8, 1e-9, 1e-10, 1e-11, 1e-12):
        tr = integrate(decay, [1.0], 0.0, 10.0, IntegratorConfig(rel_tol=tol, abs_tol=tol))
        errs.append(abs(tr.final[0] - math.exp(-10)))
    assert all(b < a for a, b in zip(errs, errs[1:])), errs


def test_bit_identical_reruns(rng):
    spec = GraphSpec(200, 0.4)
    f = rotating_vector_field(spec, SystemParams(sigma=0.5, b1=0.1, b3=0.5))
    v0 = rng.uniform(-1, 1, 200)
    a = integrate(f, v0, 0.0, 20.0, None, [5.0, 10.0, 20.0])
    b = integrate(f, v0, 0.0, 20.0, None, [5.0, 10.0, 20.0])
    assert np.array_equal(a.states, b.states) and np.array_equal(a.times, b.times)
    assert a.step_stats == b.step_stats


def test_dense_snapshot_matches_fresh_run():
    tol = 1e-9
    cfg = IntegratorConfig(rel_tol=tol, abs_tol=tol)
    snaps = [0.0, 0.3, 1.234, 2.5, 4.0]
    tr = integrate(oscillator, [1.0, 0.5], 0.0, 4.0, cfg, snaps)
    assert tr.times.tolist() == snaps
    for t, y in zip(tr.times[1:], tr.states[1:]):
        fresh = integrate(oscillator, [1.0, 0.5], 0.0, t, cfg).final
        assert np.max(np.abs(y - fresh)) < 10 * tol
        exact = [math.cos(t) + 0.5 * math.sin(t), 0.5 * math.cos(t) - math.sin(t)]
        assert y == pytest.approx(exact, abs=1e-7)


def test_times_strictly_increasing():
    tr = integrate(decay, [1.0], 0.0, 3.0, None, [2.0, 1.0, 1.0, 3.0])
    assert np.all(np.diff(tr.times) > 0) and tr.times.tolist() == [1.0, 2.0, 3.0]


def test_step_limit_carries_partial():
    cfg = IntegratorConfig(max_steps=5, max_step=0.01, initial_step=0.01)
    with pytest.raises(StepLimitError) as info:
        integrate(decay, [1.0], 0.0, 1.0, cfg, [0.0, 0.02, 0.5])
    part = info.value.partial
    assert part.times.tolist() == [0.0, 0.02]
    assert 0.04 < part.t_reached < 0.06


def test_blow_up_is_divergence():
    # y' = y^2 escapes at t = 1
    with pytest.raises(DivergenceError) as info:
        integrate(lambda t, y: y * y, [1.0], 0.0, 2.0, None, [0.5, 1.5])
    part = info.value.partial
    assert part.times.tolist() == [0.5]
    assert part.states[0, 0] == pytest.approx(2.0, rel=1e-7)


def test_non_finite_rhs_is_divergence():
    with pytest.raises(DivergenceError):
        integrate(lambda t, y: np.full_like(y, np.nan), [1.0], 0.0, 1.0)


@pytest.mark.parametrize("kw", [dict(rel_tol=1e-15), dict(abs_tol=0.1), dict(initial_step=2.0, max_step=1.0),
                                dict(max_steps=0)])
def test_config_validation(kw):
    with pytest.raises(ValueError):
        IntegratorConfig(**kw)


def test_argument_validation():
    with pytest.raises(ValueError):
        integrate(decay, [1.0], 1.0, 1.0)
    with pytest.raises(ValueError):
        integrate(decay, [1.0], 0.0, 1.0, None, [2.0])


def test_steady_cubic_decay():
    res = integrate_to_steady(lambda t, y: -y**3, [1.0], None, residual_tol=1e-6, t_max=1e6, chunk=1e3)
    assert res.converged and res.residual < 1e-6
    assert abs(res.y[0]) < 1e-2


def test_steady_never_for_constant_drift():
    res = integrate_to_steady(lambda t, y: np.ones_like(y), [0.0], None, residual_tol=1e-8, t_max=50.0)
    assert not res.converged and res.t == 50.0
    assert res.y[0] == pytest.approx(50.0)


def test_steady_twisted_state_above_threshold(rng):
    spec = GraphSpec(100, 0.5)
    f = rotating_vector_field(spec, SystemParams(b1=0.6, b3=0.5))
    res = integrate_to_steady(f, 0.1 * rng.normal(size=100), None, residual_tol=1e-9, t_max=500.0)
    assert res.converged and res.residual < 1e-9


def test_steady_on_amplitude_for_rotation():
    # a limit cycle of radius 1: the raw residual never vanishes, the radius settles
    def hopf(t, y):
        x, z = y
        r2 = x * x + z * z
        return np.array([x * (1 - r2) - z, z * (1 - r2) + x])

    res = integrate_to_steady(hopf, [0.1, 0.0], None, residual_tol=1e-8, t_max=500.0,
                              chunk=5.0, amplitude=lambda y: math.hypot(*y))
    assert res.converged and res.residual > 0.5
    assert math.hypot(*res.y) == pytest.approx(1.0, abs=1e-7)
