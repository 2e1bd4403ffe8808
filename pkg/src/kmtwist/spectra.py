"""Linear stability of the q-twisted solution of the continuum model.

Around the twisted solution the linearization is diagonal in the Fourier
basis ``cos 2 pi l x, sin 2 pi l x``.  Mode ``l`` contributes the conjugate
pair ``chi1 cos(sigma) - b1 -/+ i chi2 sin(sigma)`` and the constant mode
contributes ``-b1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

TWO_PI = 2.0 * math.pi

# Below this |z| the ratio sin(z)/z is taken from its Taylor series.
_SINC_GUARD = 1e-8


def _window(m: float, kappa: float) -> float:
    """``sin(2 pi m kappa) / (2 pi m)``, continuous through ``m = 0`` (value ``kappa``)."""
    z = TWO_PI * m * kappa
    if abs(z) < _SINC_GUARD:
        return kappa * (1.0 - z * z / 6.0)
    return math.sin(z) / (TWO_PI * m)


def _check(q: int, kappa: float) -> None:
    if q < 1:
        raise ValueError(f"q must be >= 1, got {q!r}")
    if not 0.0 < kappa <= 0.5:
        raise ValueError(f"kappa must lie in (0, 1/2], got {kappa!r}")


def chi1(ell: float, q: int, kappa: float) -> float:
    """Symmetric spectral coefficient.  ``ell`` may be a formal real."""
    _check(q, kappa)
    return _window(ell - q, kappa) + _window(ell + q, kappa) - math.sin(TWO_PI * q * kappa) / (math.pi * q)


def chi2(ell: float, q: int, kappa: float) -> float:
    """Antisymmetric spectral coefficient."""
    _check(q, kappa)
    return _window(ell - q, kappa) - _window(ell + q, kappa)


@dataclass(frozen=True)
class ChiPair:
    ell: int
    q: int
    kappa: float
    chi1: float
    chi2: float

    @classmethod
    def at(cls, ell: int, q: int, kappa: float) -> "ChiPair":
        return cls(ell, q, kappa, chi1(ell, q, kappa), chi2(ell, q, kappa))


def eigenvalue(ell: int, q: int, kappa: float, sigma: float, b1: float) -> tuple[complex, complex]:
    """Conjugate eigenvalue pair of Fourier mode ``ell >= 1``."""
    if not abs(sigma) < math.pi / 2:
        raise ValueError("|sigma| must be < pi/2")
    re = chi1(ell, q, kappa) * math.cos(sigma) - b1
    im = chi2(ell, q, kappa) * math.sin(sigma)
    return complex(re, -im), complex(re, im)


def constant_mode_eigenvalue(b1: float) -> float:
    return -b1


def b1_critical(q: int, kappa: float, sigma: float) -> float:
    """Gain at which mode ``q`` loses stability."""
    return chi1(q, q, kappa) * math.cos(sigma)


def _tail_bound(q: int, kappa: float, ell_min: int) -> float:
    # chi1 over l >= ell_min is at most the window bounds plus the fixed term.
    return (1.0 / (TWO_PI * (ell_min - q)) + 1.0 / (TWO_PI * (ell_min + q))
            - math.sin(TWO_PI * q * kappa) / (math.pi * q))


def chi1_supremum(q: int, kappa: float, ell_max: int = 64) -> tuple[float, int]:
    """Certified upper bound of ``chi1(l, q)`` over all ``l >= 1``.

    Returns the bound and the maximizing mode (``-1`` when the tail bound
    dominates the finite scan).
    """
    if ell_max < 4 * q:
        raise ValueError(f"ell_max must be >= 4q = {4 * q}")
    best, arg = -math.inf, 0
    for ell in range(1, ell_max + 1):
        c = chi1(ell, q, kappa)
        if c > best:
            best, arg = c, ell
    tail = _tail_bound(q, kappa, ell_max + 1)
    if tail > best:
        return tail, -1
    return best, arg


def is_linearly_stable(q: int, kappa: float, sigma: float, b1: float, ell_max: int = 64) -> tuple[bool, float]:
    """Stability of the q-twisted solution and the margin ``b1 - sup``."""
    sup, _ = chi1_supremum(q, kappa, ell_max)
    margin = b1 - sup * math.cos(sigma)
    return margin > 0.0, margin


def phi(zeta: float) -> float:
    if abs(zeta) < _SINC_GUARD:
        return 1.0
    return math.sin(zeta) * (2.0 - math.cos(zeta)) / zeta


def zeta0(tol: float = 1e-12) -> float:
    """Nonzero root of ``phi(zeta) = 1`` in ``(0, pi)``, by bisection.

    ``phi - 1`` behaves like ``zeta^2 / 3`` near zero, so the bracket starts
    away from the trivial root.
    """
    lo, hi = 0.5, math.pi
    g_lo = phi(lo) - 1.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        g_mid = phi(mid) - 1.0
        if g_mid == 0.0:
            return mid
        if (g_mid > 0.0) == (g_lo > 0.0):
            lo, g_lo = mid, g_mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def kappa_q(q: int) -> float:
    """Neighbor fraction at which ``chi1(q, q)`` changes sign."""
    if q < 1:
        raise ValueError("q must be >= 1")
    return zeta0() / (TWO_PI * q)


def spectrum_rows(q: int, kappa: float, sigma: float, b1: float, ell_max: int = 16) -> list[dict]:
    """Per-mode table used by the ``spectrum`` CLI subcommand."""
    rows = [{"ell": 0, "chi1": math.nan, "chi2": math.nan, "re": constant_mode_eigenvalue(b1), "im": 0.0}]
    for ell in range(1, ell_max + 1):
        _, lam = eigenvalue(ell, q, kappa, sigma, b1)
        rows.append({"ell": ell, "chi1": chi1(ell, q, kappa), "chi2": chi2(ell, q, kappa),
                     "re": lam.real, "im": lam.imag})
    return rows
