"""Experiment orchestration: single runs, gain sweeps and convergence studies."""

from __future__ import annotations

import dataclasses
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .center_manifold import (DegenerateCoefficientError, SubcriticalError, amplitude_prediction,
                              coefficients)
from .estimate import ModeEstimate, deviation_metrics, mode_estimate, rotation_period
from .graph import GraphSpec
from .model import (PhaseState, SystemParams, capital_omega_discrete, full_vector_field,
                    lattice_angles, rhs_rotating, rotating_vector_field, target_state)
from .ode import IntegrationError, IntegratorConfig, StepStats, Trajectory, integrate

log = logging.getLogger(__name__)

IC_KINDS = ("exact_target", "uniform_band", "custom_file")
FRAMES = ("full", "rotating")


class ConfigError(ValueError):
    """Invalid experiment configuration."""


@dataclass(frozen=True)
class ExperimentConfig:
    """Flat experiment description; every field is a config-file key."""

    n: int = 1000
    kappa: float = 0.5
    sigma: float = 0.0
    b1: float = 0.52
    b3: float = 0.5
    q: int = 1
    omega: float | None = None
    rel_tol: float = 1e-9
    abs_tol: float = 1e-9
    initial_step: float = 1e-2
    max_step: float = 10.0
    max_steps: int = 1_000_000
    t_end: float = 1000.0
    t_extend: float = 5000.0
    snapshot_times: tuple[float, ...] = ()
    rng_seed: int = 0
    ic_kind: str = "uniform_band"
    ic_file: str | None = None
    frame: str = "full"
    residual_tol: float = 1e-8
    amplitude_tol: float = 1e-6
    monitor_window: float = 100.0
    monitor_samples: int = 201
    b1_values: tuple[float, ...] = ()
    n_values: tuple[int, ...] = (100, 200, 400, 800)
    t_converge: float = 10.0
    workers: int = 1
    rho2_convention: str = "tabulated"

    def __post_init__(self) -> None:
        object.__setattr__(self, "snapshot_times", tuple(float(t) for t in self.snapshot_times))
        object.__setattr__(self, "b1_values", tuple(float(b) for b in self.b1_values))
        object.__setattr__(self, "n_values", tuple(int(m) for m in self.n_values))
        if not self.t_end > 0:
            raise ConfigError("t_end must be positive")
        if any(not 0.0 <= t <= self.t_end for t in self.snapshot_times):
            raise ConfigError("snapshot_times must lie in [0, t_end]")
        if self.ic_kind not in IC_KINDS:
            raise ConfigError(f"ic_kind must be one of {IC_KINDS}, got {self.ic_kind!r}")
        if self.ic_kind == "custom_file" and not self.ic_file:
            raise ConfigError("ic_kind = 'custom_file' needs ic_file")
        if self.frame not in FRAMES:
            raise ConfigError(f"frame must be one of {FRAMES}, got {self.frame!r}")
        if not 0 < self.monitor_window <= self.t_end or self.monitor_samples < 3:
            raise ConfigError("need 0 < monitor_window <= t_end and monitor_samples >= 3")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if self.rho2_convention not in ("tabulated", "projection"):
            raise ConfigError("rho2_convention must be 'tabulated' or 'projection'")
        if not 0 <= self.rng_seed < 2**64:
            raise ConfigError("rng_seed must be a 64-bit unsigned integer")
        try:
            self.graph()
            self.params()
            self.integrator()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def graph(self) -> GraphSpec:
        return GraphSpec(self.n, self.kappa)

    def params(self) -> SystemParams:
        return SystemParams(sigma=self.sigma, b1=self.b1, b3=self.b3, q=self.q, omega=self.omega)

    def integrator(self) -> IntegratorConfig:
        return IntegratorConfig(self.rel_tol, self.abs_tol, self.initial_step, self.max_step, self.max_steps)

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)


def config_keys() -> tuple[str, ...]:
    return tuple(f.name for f in dataclasses.fields(ExperimentConfig))


def sample_initial_condition(spec: GraphSpec, params: SystemParams, seed: int) -> PhaseState:
    """``u_k(0) = 2 pi q k / n + U(-pi, pi)``, i.i.d., from a Philox stream."""
    rng = np.random.Generator(np.random.Philox(seed))
    theta = lattice_angles(spec.n, params.q)
    return PhaseState(0.0, theta + rng.uniform(-math.pi, math.pi, spec.n))


def row_seed(master_seed: int, index: int) -> int:
    """Independent 64-bit seed for sweep row ``index``."""
    ss = np.random.SeedSequence(master_seed, spawn_key=(index,))
    return int(ss.generate_state(1, np.uint64)[0])


def initial_condition(config: ExperimentConfig) -> PhaseState:
    spec, params = config.graph(), config.params()
    if config.ic_kind == "exact_target":
        return target_state(spec, params, 0.0)
    if config.ic_kind == "custom_file":
        from .csvio import read_snapshot_csv

        u = read_snapshot_csv(config.ic_file)
        if u.size != spec.n:
            raise ConfigError(f"{config.ic_file}: {u.size} phases, expected n = {spec.n}")
        return PhaseState(0.0, u)
    return sample_initial_condition(spec, params, config.rng_seed)


@dataclass
class SimulationResult:
    trajectory: Trajectory
    estimate: ModeEstimate
    max_dev: float
    l2_dev: float
    converged: bool
    residual: float
    t_final: float
    extended: bool
    history_t: np.ndarray
    history_r: np.ndarray
    history_psi: np.ndarray
    step_stats: StepStats = field(default_factory=StepStats)

    @property
    def final_u(self) -> np.ndarray:
        return self.trajectory.final

    def psi_period(self) -> float:
        return rotation_period(self.history_t, self.history_psi)


def _monitor_times(config: ExperimentConfig, t_stop: float) -> np.ndarray:
    return np.linspace(t_stop - config.monitor_window, t_stop, config.monitor_samples)


def _run_segment(config, f, y0, t0, t1, to_u):
    spec_times = [t for t in config.snapshot_times if t0 <= t <= t1]
    monitor = _monitor_times(config, t1)
    monitor = monitor[monitor >= t0]
    snaps = np.union1d(np.union1d(spec_times, monitor), [t1])
    traj = integrate(f, y0, t0, t1, config.integrator(), snaps)
    u = np.array([to_u(t, y) for t, y in zip(traj.times, traj.states)])
    keep_user = np.isin(traj.times, np.union1d(spec_times, [t1]))
    keep_mon = np.isin(traj.times, monitor)
    est = [mode_estimate(row, config.q) for row in u[keep_mon]]
    user = Trajectory(traj.times[keep_user], u[keep_user], traj.step_stats, traj.t_reached)
    return (user, traj.final, traj.times[keep_mon],
            np.array([e.r for e in est]), np.array([e.psi for e in est]))


def run_simulation(config: ExperimentConfig) -> SimulationResult:
    """Integrate the controlled model from the configured initial condition.

    The run is steady when the rotating-frame residual drops below
    ``residual_tol`` or, for rotating modulations, when the mode amplitude
    varies by less than ``amplitude_tol`` over the final monitoring
    window.  Runs that are not steady at ``t_end`` continue to
    ``t_extend``.
    """
    spec, params = config.graph(), config.params()
    u0 = initial_condition(config).u
    theta = lattice_angles(spec.n, params.q)
    big_omega = capital_omega_discrete(spec, params)

    if config.frame == "full":
        f = full_vector_field(spec, params)
        y0 = u0

        def to_u(t, y):
            return y
    else:
        f = rotating_vector_field(spec, params)
        y0 = u0 - theta

        def to_u(t, y):
            return y + theta + big_omega * t

    stats = StepStats()

    def accumulate(tr: Trajectory) -> None:
        stats.accepted += tr.step_stats.accepted
        stats.rejected += tr.step_stats.rejected
        stats.evaluations += tr.step_stats.evaluations

    def steady(t: float, y: np.ndarray, r_hist: np.ndarray) -> tuple[bool, float]:
        v = to_u(t, y) - theta - big_omega * t
        res = float(np.max(np.abs(rhs_rotating(spec, params, v))))
        spread = float(np.ptp(r_hist)) if r_hist.size else math.inf
        return res < config.residual_tol or spread < config.amplitude_tol, res

    user, y, ht, hr, hp = _run_segment(config, f, y0, 0.0, config.t_end, to_u)
    accumulate(user)
    t_final = config.t_end
    converged, res = steady(t_final, y, hr)
    extended = False
    if not converged and config.t_extend > config.t_end:
        log.info("not steady at t=%g (residual %.3g); extending to %g", t_final, res, config.t_extend)
        ext_cfg = config.replace(snapshot_times=())
        more, y, ht, hr, hp = _run_segment(ext_cfg, f, y, config.t_end, config.t_extend, to_u)
        accumulate(more)
        user = Trajectory(np.append(user.times, more.times[-1:]),
                          np.vstack((user.states, more.states[-1:])), stats, more.t_reached)
        t_final = config.t_extend
        converged, res = steady(t_final, y, hr)
        extended = True
    user.step_stats = stats

    u_final = user.final
    est = mode_estimate(u_final, params.q)
    max_dev, l2_dev = deviation_metrics(u_final, target_state(spec, params, t_final).u)
    return SimulationResult(user, est, max_dev, l2_dev, converged, res, t_final, extended,
                            ht, hr, hp, stats)


@dataclass(frozen=True)
class SweepRow:
    b1: float
    r_measured: float
    r_predicted: float
    psi: float
    mean_drift: float
    max_dev: float
    converged: bool
    seed: int
    wall_time: float
    error: str | None = None


def predicted_amplitude(config: ExperimentConfig, b1: float) -> float:
    """Normal-form amplitude, or ``nan`` where no stable prediction exists."""
    try:
        co = coefficients(config.q, config.kappa, config.sigma, config.b3, config.rho2_convention)
        return amplitude_prediction(co, b1).r_amplitude
    except (SubcriticalError, DegenerateCoefficientError):
        return math.nan


def _sweep_row(args: tuple[ExperimentConfig, float, int]) -> SweepRow:
    config, b1, seed = args
    cfg = config.replace(b1=b1, rng_seed=seed)
    r_pred = predicted_amplitude(cfg, b1)
    start = time.perf_counter()
    try:
        res = run_simulation(cfg)
    except (IntegrationError, ArithmeticError) as exc:
        nan = math.nan
        return SweepRow(b1, nan, r_pred, nan, nan, nan, False, seed, time.perf_counter() - start,
                        f"{type(exc).__name__}: {exc}")
    e = res.estimate
    return SweepRow(b1, e.r, r_pred, e.psi, e.mean_drift, res.max_dev, res.converged, seed,
                    time.perf_counter() - start)


def _pool_map(fn, items: Sequence, workers: int) -> list:
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=min(workers, len(items))) as pool:
        return list(pool.map(fn, items))


def sweep_b1(config: ExperimentConfig, b1_values: Sequence[float] | None = None) -> list[SweepRow]:
    """One simulation per gain, each with its own derived seed; rows keep input order."""
    values = tuple(config.b1_values if b1_values is None else b1_values)
    if not values:
        raise ConfigError("b1_values must be nonempty")
    if any(b > a for a, b in zip(values[1:], values[:-1])):
        raise ConfigError("b1_values must be ascending")
    jobs = [(config, float(b), row_seed(config.rng_seed, i)) for i, b in enumerate(values)]
    return _pool_map(_sweep_row, jobs, config.workers)


def smooth_profile(n: int, q: int, amplitude: float = 0.3) -> np.ndarray:
    """``g(x) = 2 pi q x + a sin(2 pi x)`` sampled at ``x_k = k/n``."""
    x = np.arange(1, n + 1) / n
    return 2.0 * math.pi * q * x + amplitude * np.sin(2.0 * math.pi * x)


def _deviation_at(args: tuple[ExperimentConfig, int, float, float]) -> np.ndarray:
    config, n, T, amplitude = args
    cfg = config.replace(n=n)
    spec, params = cfg.graph(), cfg.params()
    traj = integrate(full_vector_field(spec, params), smooth_profile(n, params.q, amplitude),
                     0.0, T, cfg.integrator())
    return traj.final - target_state(spec, params, T).u


def convergence_study(config: ExperimentConfig, n_values: Sequence[int] | None = None,
                      T: float | None = None, amplitude: float = 0.3) -> list[tuple[int, float]]:
    """Discrete L2 distance at time ``T`` to a run at twice the largest ``n``.

    Deviations from each lattice's own twisted state are compared as
    step functions on ``[0, 1]``.
    """
    ns = sorted(int(m) for m in (config.n_values if n_values is None else n_values))
    T = config.t_converge if T is None else T
    if not ns:
        raise ConfigError("n_values must be nonempty")
    n_ref = 2 * ns[-1]
    bad = [m for m in ns if n_ref % m]
    if bad:
        raise ConfigError(f"every n must divide the reference size {n_ref}: {bad}")
    devs = _pool_map(_deviation_at, [(config, m, T, amplitude) for m in ns + [n_ref]], config.workers)
    ref = devs[-1]
    out = []
    for m, dev in zip(ns, devs):
        fine = np.repeat(dev, n_ref // m)
        out.append((m, float(math.sqrt(np.mean((fine - ref) ** 2)))))
    return out
