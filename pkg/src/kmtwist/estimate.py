"""Least-squares read-out of the leading deviation mode.

A snapshot ``u`` is compared with the twisted profile ``2 pi q k / n``;
the deviation ``v`` is fitted by ``mean_drift + r sin(2 pi q k / n + psi)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import lattice_angles


@dataclass(frozen=True)
class ModeEstimate:
    mean_drift: float
    r: float
    psi: float
    c_coef: float
    s_coef: float


def mode_estimate(u: np.ndarray, q: int, n: int | None = None) -> ModeEstimate:
    """Fit the mode-``q`` modulation of a phase snapshot.

    With ``c = <v cos theta>`` and ``s = <v sin theta>`` the fitted profile
    is ``r sin(theta + psi)`` where ``r = 2 sqrt(c^2 + s^2)`` and
    ``psi = atan2(c, s)``.
    """
    u = np.asarray(u, dtype=float)
    n = u.size if n is None else n
    if u.shape != (n,):
        raise ValueError(f"expected {n} phases, got shape {u.shape}")
    if q < 1:
        raise ValueError("q must be >= 1")
    theta = lattice_angles(n, q)
    v = u - theta
    drift = float(np.mean(v))
    dev = v - drift
    c = float(np.mean(dev * np.cos(theta)))
    s = float(np.mean(dev * np.sin(theta)))
    return ModeEstimate(drift, 2.0 * math.hypot(c, s), math.atan2(c, s), c, s)


def deviation_metrics(u: np.ndarray, target: np.ndarray) -> tuple[float, float]:
    """Max-norm and discrete L2 norm of ``u - target``."""
    u = np.asarray(u, dtype=float)
    target = np.asarray(target, dtype=float)
    if u.shape != target.shape:
        raise ValueError(f"shape mismatch: {u.shape} vs {target.shape}")
    d = u - target
    return float(np.max(np.abs(d))), float(math.sqrt(np.mean(d * d)))


def rotation_period(times: np.ndarray, psi: np.ndarray) -> float:
    """Period of a steadily rotating phase from its unwrapped linear trend.

    Returns ``inf`` when the phase does not drift.
    """
    times = np.asarray(times, dtype=float)
    psi = np.unwrap(np.asarray(psi, dtype=float))
    if times.size < 3:
        raise ValueError("need at least three samples")
    rate = np.polyfit(times, psi, 1)[0]
    return math.inf if rate == 0.0 else float(2.0 * math.pi / abs(rate))
