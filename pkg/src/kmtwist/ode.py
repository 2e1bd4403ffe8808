"""Adaptive explicit Runge-Kutta integration (Dormand-Prince 8(5,3)).

The stepping loop, error norm and PI step-size controller live here;
the Butcher tableau and interpolation weights are the published DOP853
tables shipped with SciPy.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.integrate._ivp import dop853_coefficients as _dop

log = logging.getLogger(__name__)

VectorField = Callable[[float, np.ndarray], np.ndarray]

_N = _dop.N_STAGES
_A = _dop.A[:_N, :_N]
_B = _dop.B
_C = _dop.C[:_N]
_E3 = _dop.E3
_E5 = _dop.E5
_A_EXTRA = _dop.A[_N + 1:]
_C_EXTRA = _dop.C[_N + 1:]
_D = _dop.D

_ERROR_EXPONENT = 1.0 / 8.0
_PI_ALPHA = 0.7 / 8.0
_PI_BETA = 0.4 / 8.0
_SAFETY = 0.9
_MIN_FACTOR = 0.2
_MAX_FACTOR = 5.0


class IntegrationError(RuntimeError):
    """Integration stopped early; ``partial`` holds what was computed."""

    def __init__(self, message: str, partial: "Trajectory"):
        super().__init__(message)
        self.partial = partial


class StepLimitError(IntegrationError):
    pass


class DivergenceError(IntegrationError):
    pass


@dataclass(frozen=True)
class IntegratorConfig:
    rel_tol: float = 1e-9
    abs_tol: float = 1e-9
    initial_step: float = 1e-2
    max_step: float = 10.0
    max_steps: int = 1_000_000

    def __post_init__(self) -> None:
        for name in ("rel_tol", "abs_tol"):
            val = getattr(self, name)
            if not 1e-14 <= val <= 1e-2:
                raise ValueError(f"{name} must lie in [1e-14, 1e-2], got {val!r}")
        if not 0.0 < self.initial_step <= self.max_step:
            raise ValueError("need 0 < initial_step <= max_step")
        if self.max_steps < 1:
            raise ValueError("max_steps must be positive")


@dataclass
class StepStats:
    accepted: int = 0
    rejected: int = 0
    evaluations: int = 0


@dataclass
class Trajectory:
    """Snapshots of an integration, in ascending time order."""

    times: np.ndarray
    states: np.ndarray
    step_stats: StepStats = field(default_factory=StepStats)
    t_reached: float = math.nan

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]


def _rms_error(K: np.ndarray, h: float, scale: np.ndarray) -> float:
    err5 = (K.T @ _E5) / scale
    err3 = (K.T @ _E3) / scale
    e5 = float(np.dot(err5, err5))
    e3 = float(np.dot(err3, err3))
    if e5 == 0.0 and e3 == 0.0:
        return 0.0
    denom = e5 + 0.01 * e3
    return abs(h) * e5 / math.sqrt(denom * scale.size)


class _Stepper:
    """One DOP853 step with reusable stage storage."""

    def __init__(self, f: VectorField, n: int, stats: StepStats):
        self.f = f
        self.stats = stats
        self.K = np.empty((_N + 1, n))
        self.K_ext = np.empty((_N + 4, n))

    def eval(self, t: float, y: np.ndarray) -> np.ndarray:
        self.stats.evaluations += 1
        return self.f(t, y)

    def step(self, t: float, y: np.ndarray, fy: np.ndarray, h: float) -> tuple[np.ndarray, np.ndarray]:
        K = self.K
        K[0] = fy
        for s in range(1, _N):
            dy = (K[:s].T @ _A[s, :s]) * h
            K[s] = self.eval(t + _C[s] * h, y + dy)
        y_new = y + h * (K[:_N].T @ _B)
        f_new = self.eval(t + h, y_new)
        K[_N] = f_new
        return y_new, f_new

    def interpolant(self, t: float, y: np.ndarray, y_new: np.ndarray, f_new: np.ndarray, h: float):
        """Seventh-order continuous extension over the last step."""
        Ke = self.K_ext
        Ke[: _N + 1] = self.K
        for s, (a, c) in enumerate(zip(_A_EXTRA, _C_EXTRA), start=_N + 1):
            dy = (Ke[:s].T @ a[:s]) * h
            Ke[s] = self.eval(t + c * h, y + dy)
        F = np.empty((7, y.size))
        delta = y_new - y
        F[0] = delta
        F[1] = h * Ke[0] - delta
        F[2] = 2.0 * delta - h * (f_new + Ke[0])
        F[3:] = h * (_D @ Ke)

        def at(tq: float) -> np.ndarray:
            x = (tq - t) / h
            out = np.zeros_like(y)
            for i, row in enumerate(F[::-1]):
                out += row
                out *= x if i % 2 == 0 else 1.0 - x
            return out + y

        return at


def integrate(
    rhs: VectorField,
    y0: np.ndarray,
    t0: float,
    t1: float,
    config: IntegratorConfig | None = None,
    snapshot_times: Sequence[float] | None = None,
) -> Trajectory:
    """Integrate ``y' = rhs(t, y)`` from ``t0`` to ``t1``.

    Snapshots are produced at ``snapshot_times`` (default: ``t1`` only) by
    dense interpolation; ``t1`` itself is always reached exactly.

    Raises
    ------
    StepLimitError
        More than ``config.max_steps`` steps were attempted.
    DivergenceError
        The state or the step size became non-finite or underflowed.
    """
    cfg = config or IntegratorConfig()
    if not t1 > t0:
        raise ValueError("need t1 > t0")
    y = np.array(y0, dtype=float, copy=True)
    if y.ndim != 1:
        raise ValueError("y0 must be a 1-D vector")
    if snapshot_times is None:
        snaps = np.array([t1])
    else:
        snaps = np.unique(np.asarray(snapshot_times, dtype=float))
        if snaps.size and (snaps[0] < t0 or snaps[-1] > t1):
            raise ValueError("snapshot_times must lie in [t0, t1]")

    stats = StepStats()
    stepper = _Stepper(rhs, y.size, stats)
    out_t: list[float] = []
    out_y: list[np.ndarray] = []

    def partial(t_now: float) -> Trajectory:
        states = np.array(out_y) if out_y else np.empty((0, y.size))
        return Trajectory(np.array(out_t), states, stats, t_now)

    i_snap = 0
    while i_snap < snaps.size and snaps[i_snap] == t0:
        out_t.append(t0)
        out_y.append(y.copy())
        i_snap += 1

    t = t0
    fy = stepper.eval(t, y)
    h = min(cfg.initial_step, cfg.max_step, t1 - t0)
    err_prev = 1e-4
    attempts = 0
    while t < t1:
        if attempts >= cfg.max_steps:
            raise StepLimitError(f"exceeded {cfg.max_steps} steps at t={t:.6g}", partial(t))
        attempts += 1
        h = min(h, cfg.max_step)
        last = t + h >= t1 or (t1 - (t + h)) < 1e-12 * max(1.0, abs(t1))
        if last:
            h = t1 - t
        if h <= 8.0 * np.spacing(max(abs(t), 1.0)):
            raise DivergenceError(f"step size underflow at t={t:.6g}", partial(t))

        scale = cfg.abs_tol + cfg.rel_tol * np.abs(y)
        y_new, f_new = stepper.step(t, y, fy, h)
        if not np.all(np.isfinite(y_new)):
            stats.rejected += 1
            h *= _MIN_FACTOR
            if h <= 8.0 * np.spacing(max(abs(t), 1.0)):
                raise DivergenceError(f"non-finite state near t={t:.6g}", partial(t))
            continue
        scale = np.maximum(scale, cfg.abs_tol + cfg.rel_tol * np.abs(y_new))
        err = _rms_error(stepper.K, h, scale)

        if err <= 1.0:
            t_new = t1 if last else t + h
            if i_snap < snaps.size and snaps[i_snap] <= t_new:
                at = stepper.interpolant(t, y, y_new, f_new, h)
                while i_snap < snaps.size and snaps[i_snap] <= t_new:
                    ts = snaps[i_snap]
                    out_t.append(ts)
                    out_y.append(y_new.copy() if ts == t_new else at(ts))
                    i_snap += 1
            stats.accepted += 1
            if err == 0.0:
                factor = _MAX_FACTOR
            else:
                factor = _SAFETY * err ** -_PI_ALPHA * err_prev ** _PI_BETA
                factor = min(_MAX_FACTOR, max(_MIN_FACTOR, factor))
            err_prev = max(err, 1e-4)
            t, y, fy = t_new, y_new, f_new
            h *= factor
        else:
            stats.rejected += 1
            factor = max(_MIN_FACTOR, _SAFETY * err ** -_ERROR_EXPONENT)
            h *= factor

    log.debug("integrate: %d accepted, %d rejected, %d evaluations",
              stats.accepted, stats.rejected, stats.evaluations)
    return Trajectory(np.array(out_t), np.array(out_y), stats, t)


@dataclass
class SteadyResult:
    y: np.ndarray
    converged: bool
    residual: float
    t: float
    step_stats: StepStats


def integrate_to_steady(
    rhs: VectorField,
    y0: np.ndarray,
    config: IntegratorConfig | None = None,
    residual_tol: float = 1e-8,
    t_max: float = 1000.0,
    *,
    chunk: float = 10.0,
    amplitude: Callable[[np.ndarray], float] | None = None,
    window: int = 5,
) -> SteadyResult:
    """Integrate an autonomous field until it settles or ``t_max`` is hit.

    Without ``amplitude`` the test is ``max|rhs(y)| < residual_tol``.  With
    it (oscillating regimes) the run is steady once ``amplitude(y)``,
    sampled every ``chunk`` time units, varies by less than
    ``residual_tol`` over the last ``window`` samples.
    """
    if residual_tol <= 0:
        raise ValueError("residual_tol must be positive")
    y = np.array(y0, dtype=float, copy=True)
    t = 0.0
    history: list[float] = []
    total = StepStats()

    def residual(yv: np.ndarray) -> float:
        return float(np.max(np.abs(rhs(t, yv))))

    res = residual(y)
    while True:
        if amplitude is None and res < residual_tol:
            return SteadyResult(y, True, res, t, total)
        if amplitude is not None:
            history.append(float(amplitude(y)))
            recent = history[-window:]
            if len(recent) == window and max(recent) - min(recent) < residual_tol:
                return SteadyResult(y, True, res, t, total)
        if t >= t_max:
            return SteadyResult(y, False, res, t, total)
        t_next = min(t + chunk, t_max)
        traj = integrate(rhs, y, t, t_next, config)
        total.accepted += traj.step_stats.accepted
        total.rejected += traj.step_stats.rejected
        total.evaluations += traj.step_stats.evaluations
        y, t = traj.final, t_next
        res = residual(y)
