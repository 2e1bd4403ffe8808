"""Controlled Kuramoto model on a circulant band graph.

The full-frame system is

    du_k/dt = omega + (1/n) sum_j w_kj sin(u_j - u_k + sigma)
              + b1 (uhat_k - u_k) + b3 (uhat_k - u_k)^3

with the twisted target ``uhat_k(t) = 2 pi q k / n + Omega_D t``.  The
coupling sum is evaluated in O(n) from two banded window sums of
``sin u`` and ``cos u``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np

from .graph import GraphSpec

TWO_PI = 2.0 * math.pi

# Above this size the window prefix sums are accumulated in extended precision.
COMPENSATED_MIN_N = 10_000


@dataclass(frozen=True)
class SystemParams:
    """Physical and control parameters.

    ``omega`` defaults to the value that makes the continuum twisted
    solution stationary (see :func:`omega_default`).
    """

    sigma: float = 0.0
    b1: float = 0.0
    b3: float = 0.0
    q: int = 1
    omega: float | None = None

    def __post_init__(self) -> None:
        if not abs(self.sigma) < math.pi / 2:
            raise ValueError(f"|sigma| must be < pi/2, got {self.sigma!r}")
        if int(self.q) != self.q or self.q < 1:
            raise ValueError(f"q must be a positive integer, got {self.q!r}")
        object.__setattr__(self, "q", int(self.q))

    def resolved_omega(self, kappa: float) -> float:
        if self.omega is None:
            return omega_default(self.q, kappa, self.sigma)
        return float(self.omega)


@dataclass(frozen=True)
class PhaseState:
    """Unwrapped phases ``u`` at time ``t``."""

    t: float
    u: np.ndarray

    def __post_init__(self) -> None:
        u = np.asarray(self.u, dtype=float)
        if u.ndim != 1:
            raise ValueError("phases must be a 1-D vector")
        if not np.all(np.isfinite(u)):
            raise ValueError("phases must be finite")
        object.__setattr__(self, "u", u)

    @property
    def n(self) -> int:
        return self.u.size

    def wrapped(self) -> np.ndarray:
        return np.mod(self.u, TWO_PI)


def omega_default(q: int, kappa: float, sigma: float) -> float:
    return -math.sin(TWO_PI * q * kappa) * math.sin(sigma) / (math.pi * q)


def capital_omega_cl(params: SystemParams, kappa: float) -> float:
    """Rotation rate of the continuum twisted solution."""
    q = params.q
    return params.resolved_omega(kappa) + math.sin(TWO_PI * q * kappa) * math.sin(params.sigma) / (math.pi * q)


def capital_omega_discrete(spec: GraphSpec, params: SystemParams) -> float:
    """Rotation rate ``Omega_D^n`` of the discrete twisted state.

    The lattice sum runs over the distinct neighbor offsets of the
    circulant mask, so the twisted state solves the network exactly even
    when the band wraps onto itself (complete graph, even ``n``).
    """
    n = spec.n
    d = np.flatnonzero(spec.mask)
    d = np.where(d > n // 2, d - n, d)
    terms = np.sin(TWO_PI * params.q * d / n + params.sigma)
    return params.resolved_omega(spec.kappa) + math.fsum(terms) / n


def lattice_angles(n: int, q: int) -> np.ndarray:
    """``2 pi q k / n`` for ``k = 1..n``."""
    return TWO_PI * q * np.arange(1, n + 1) / n


@lru_cache(maxsize=64)
def _lattice_trig(n: int, q: int) -> tuple[np.ndarray, np.ndarray]:
    theta = lattice_angles(n, q)
    c, s = np.cos(theta), np.sin(theta)
    c.setflags(write=False)
    s.setflags(write=False)
    return c, s


def target_state(spec: GraphSpec, params: SystemParams, t: float) -> PhaseState:
    u = lattice_angles(spec.n, params.q) + capital_omega_discrete(spec, params) * t
    return PhaseState(t=t, u=u)


def coupling_sum_fast(spec: GraphSpec, f: np.ndarray) -> np.ndarray:
    """Banded circular window sums ``s_k = sum_j w_kj f_j`` in O(n).

    Prefix sums over the periodically padded vector give every window as
    the difference of two running totals, i.e. the sliding-window update
    with the entering and leaving entries applied in one vectorized pass.
    The vector is centered first so the running totals stay small.
    """
    f = np.asarray(f, dtype=float)
    n = spec.n
    if f.shape != (n,):
        raise ValueError(f"expected a vector of length {n}, got shape {f.shape}")
    if spec.is_complete:
        return np.full(n, math.fsum(f))
    r = spec.band_radius
    width = 2 * r + 1
    dtype = np.longdouble if n >= COMPENSATED_MIN_N else np.float64
    mean = np.mean(f, dtype=dtype)
    g = f.astype(dtype) - mean
    padded = np.concatenate((g[n - r:], g, g[:r]))
    prefix = np.empty(padded.size + 1, dtype=dtype)
    prefix[0] = 0.0
    np.cumsum(padded, out=prefix[1:])
    window = prefix[width:] - prefix[:-width]
    return (window + width * mean).astype(np.float64)


def coupling_sum_naive(spec: GraphSpec, f: np.ndarray) -> np.ndarray:
    """O(n^2) reference: dense weight matrix times ``f``."""
    return spec.dense() @ np.asarray(f, dtype=float)


def _sine_coupling(spec: GraphSpec, su: np.ndarray, cu: np.ndarray, sigma: float) -> np.ndarray:
    # sin(u_j - u_k + sigma) = sin u_j cos(u_k - sigma) - cos u_j sin(u_k - sigma)
    S = coupling_sum_fast(spec, su)
    C = coupling_sum_fast(spec, cu)
    if sigma == 0.0:
        a, b = cu, su
    else:
        cs, ss = math.cos(sigma), math.sin(sigma)
        a = cu * cs + su * ss  # cos(u_k - sigma)
        b = su * cs - cu * ss  # sin(u_k - sigma)
    return (a * S - b * C) / spec.n


def rhs_full(spec: GraphSpec, params: SystemParams, state: PhaseState) -> np.ndarray:
    """Full-frame vector field at ``state`` (target evaluated at ``state.t``)."""
    u = state.u
    dev = target_state(spec, params, state.t).u - u
    omega = params.resolved_omega(spec.kappa)
    return omega + _sine_coupling(spec, np.sin(u), np.cos(u), params.sigma) + params.b1 * dev + params.b3 * dev**3


def rhs_rotating(spec: GraphSpec, params: SystemParams, v: np.ndarray) -> np.ndarray:
    """Autonomous vector field for the deviation ``v = u - uhat``.

    Equals ``rhs_full(v + uhat(t)) - Omega_D^n`` for every ``t``, so
    ``v = 0`` is an exact equilibrium at finite ``n``.
    """
    v = np.asarray(v, dtype=float)
    ct, st = _lattice_trig(spec.n, params.q)
    sv, cv = np.sin(v), np.cos(v)
    # angle addition with the precomputed lattice angles
    su = sv * ct + cv * st
    cu = cv * ct - sv * st
    drift = params.resolved_omega(spec.kappa) - capital_omega_discrete(spec, params)
    coupling = _sine_coupling(spec, su, cu, params.sigma)
    return drift + coupling - params.b1 * v - params.b3 * v**3


def full_vector_field(spec: GraphSpec, params: SystemParams) -> Callable[[float, np.ndarray], np.ndarray]:
    """``f(t, u)`` closure for the integrator with constants hoisted."""
    theta = lattice_angles(spec.n, params.q)
    big_omega = capital_omega_discrete(spec, params)
    omega = params.resolved_omega(spec.kappa)
    sigma, b1, b3 = params.sigma, params.b1, params.b3

    def f(t: float, u: np.ndarray) -> np.ndarray:
        dev = theta + big_omega * t - u
        return omega + _sine_coupling(spec, np.sin(u), np.cos(u), sigma) + b1 * dev + b3 * dev**3

    return f


def rotating_vector_field(spec: GraphSpec, params: SystemParams) -> Callable[[float, np.ndarray], np.ndarray]:
    ct, st = _lattice_trig(spec.n, params.q)
    drift = params.resolved_omega(spec.kappa) - capital_omega_discrete(spec, params)
    sigma, b1, b3 = params.sigma, params.b1, params.b3

    def f(t: float, v: np.ndarray) -> np.ndarray:
        sv, cv = np.sin(v), np.cos(v)
        coupling = _sine_coupling(spec, sv * ct + cv * st, cv * ct - sv * st, sigma)
        return drift + coupling - b1 * v - b3 * v**3

    return f
