"""Center-manifold reduction at the loss of stability of the q-twisted solution.

Near ``b1 = b1q`` the dynamics of the continuum model reduce to the
(xi_q, eta_q) plane.  The second harmonic is slaved as

    xi_2q  =  c1 (xi^2 - eta^2) + 2 c2 xi eta
    eta_2q = -c2 (xi^2 - eta^2) + 2 c1 xi eta

and the radial part of the reduced flow is ``r' = -mu r - beta r^3`` with
``mu = b1 - b1q``.  For ``sigma = 0`` the bifurcation is a pitchfork onto a
circle of equilibria; for ``sigma != 0`` it is a Hopf bifurcation with
frequency ``nu_q``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Literal

import numpy as np

from .spectra import TWO_PI, b1_critical, chi1, chi2

Rho2Convention = Literal["tabulated", "projection"]

_DEGENERATE_TOL = 1e-12


class DegenerateCoefficientError(ArithmeticError):
    """A denominator of the reduction vanishes."""


class SubcriticalError(ArithmeticError):
    """The cubic coefficient is non-positive, so the bifurcating family is unstable."""


def a1(q: int, j: int, kappa: float) -> float:
    if j == q:
        return math.sin(2.0 * TWO_PI * q * kappa) / (2.0 * TWO_PI * q) - kappa
    sj, cj = math.sin(TWO_PI * j * kappa), math.cos(TWO_PI * j * kappa)
    sq, cq = math.sin(TWO_PI * q * kappa), math.cos(TWO_PI * q * kappa)
    return (q * sj * cq - j * cj * sq) / (math.pi * (q * q - j * j))


def a2(q: int, j: int, kappa: float) -> float:
    if j == q:
        return -math.sin(2.0 * TWO_PI * q * kappa) / (2.0 * TWO_PI * q) - kappa
    sj, cj = math.sin(TWO_PI * j * kappa), math.cos(TWO_PI * j * kappa)
    sq, cq = math.sin(TWO_PI * q * kappa), math.cos(TWO_PI * q * kappa)
    return (j * sj * cq - q * cj * sq) / (math.pi * (q * q - j * j))


def rho2_value(q: int, kappa: float, convention: Rho2Convention = "tabulated") -> float:
    """Quadratic coupling of mode ``q`` into the ``sin``-part of mode ``2q``.

    ``"tabulated"`` is the combination behind the published coefficient
    table; ``"projection"`` is the Galerkin projection of the continuum
    nonlinearity, which tracks direct simulation more closely for
    ``sigma != 0``.
    """
    if convention == "tabulated":
        return 0.5 * a2(q, q, kappa) - 0.25 * a2(q, 2 * q, kappa)
    if convention == "projection":
        return 0.25 * a2(q, 0, kappa) - 0.5 * a2(q, q, kappa) + 0.25 * a2(q, 2 * q, kappa)
    raise ValueError(f"unknown rho2 convention {convention!r}")


@dataclass(frozen=True)
class CMCoefficients:
    q: int
    kappa: float
    sigma: float
    b3: float
    rho2_convention: str
    a1_qq: float
    a1_q2q: float
    a2_q0: float
    a2_qq: float
    a2_q2q: float
    beta1: float
    beta2: float
    delta1: float
    delta2: float
    rho1: float
    rho2: float
    b1q: float
    mu_2q: float
    nu_q: float
    nu_2q: float
    c1: float
    c2: float
    beta1_bar: float
    beta0: float
    beta1_sigma_bar: float
    beta_sigma: float

    def mu(self, j: int) -> float:
        """Real part of the mode-``j`` eigenvalue at ``b1 = b1q``."""
        return -self.b1q + chi1(j, self.q, self.kappa) * math.cos(self.sigma)

    def nu(self, j: int) -> float:
        return chi2(j, self.q, self.kappa) * math.sin(self.sigma)

    @property
    def beta(self) -> float:
        """Cubic coefficient of the radial normal form for this ``sigma``."""
        return self.beta0 if self.sigma == 0.0 else self.beta_sigma


def coefficients(q: int, kappa: float, sigma: float, b3: float,
                 rho2_convention: Rho2Convention = "tabulated") -> CMCoefficients:
    """All reduction constants for ``(q, kappa, sigma, b3)``.

    Raises
    ------
    DegenerateCoefficientError
        If ``mu_2q^2 + (2 nu_q - nu_2q)^2`` is below ``1e-12``.
    """
    if not abs(sigma) < math.pi / 2:
        raise ValueError("|sigma| must be < pi/2")
    if not 0.0 < kappa <= 0.5:
        raise ValueError("kappa must lie in (0, 1/2]")
    c, s = math.cos(sigma), math.sin(sigma)
    a1qq, a1q2q = a1(q, q, kappa), a1(q, 2 * q, kappa)
    a2q0, a2qq, a2q2q = a2(q, 0, kappa), a2(q, q, kappa), a2(q, 2 * q, kappa)

    beta1 = 0.375 * a2q0 - 0.5 * a2qq + 0.125 * a2q2q
    beta2 = 0.25 * a1qq - 0.125 * a1q2q
    delta1 = a1qq - 0.5 * a1q2q
    delta2 = 0.5 * a2q0 - 0.5 * a2q2q
    rho1 = 0.5 * a1qq - 0.25 * a1q2q
    rho2 = rho2_value(q, kappa, rho2_convention)

    b1q = b1_critical(q, kappa, sigma)
    mu2q = -b1q + chi1(2 * q, q, kappa) * c
    nuq = chi2(q, q, kappa) * s
    nu2q = chi2(2 * q, q, kappa) * s
    gap = 2.0 * nuq - nu2q
    denom = mu2q * mu2q + gap * gap
    if denom < _DEGENERATE_TOL:
        raise DegenerateCoefficientError(
            f"mu_2q^2 + (2 nu_q - nu_2q)^2 = {denom:.3g} vanishes (mu_2q = {mu2q:.3g})")

    # Invariance of the slaved second harmonic under the linear rotation at rate nu_q.
    c1 = (gap * rho1 * c - mu2q * rho2 * s) / denom
    c2 = (mu2q * rho1 * c + gap * rho2 * s) / denom

    beta1_bar = beta1 + delta1 * rho1 / mu2q
    beta1_sigma_bar = beta1 * c + (
        mu2q * (delta1 * rho1 + delta2 * rho2)
        + mu2q * (delta1 * rho1 - delta2 * rho2) * math.cos(2.0 * sigma)
        + gap * (delta1 * rho2 - delta2 * rho1) * math.sin(2.0 * sigma)
    ) / (2.0 * denom)

    return CMCoefficients(
        q=q, kappa=kappa, sigma=sigma, b3=b3, rho2_convention=rho2_convention,
        a1_qq=a1qq, a1_q2q=a1q2q, a2_q0=a2q0, a2_qq=a2qq, a2_q2q=a2q2q,
        beta1=beta1, beta2=beta2, delta1=delta1, delta2=delta2, rho1=rho1, rho2=rho2,
        b1q=b1q, mu_2q=mu2q, nu_q=nuq, nu_2q=nu2q, c1=c1, c2=c2,
        beta1_bar=beta1_bar, beta0=0.75 * b3 + beta1_bar,
        beta1_sigma_bar=beta1_sigma_bar, beta_sigma=0.75 * b3 + beta1_sigma_bar,
    )


TABLE_ROWS = ("b1q/cos", "beta1", "delta1", "delta2", "rho1", "rho2",
              "(mu2q+b1q)/cos", "nu_q/sin", "nu_2q/sin")


def table_column(q: int, kappa: float, rho2_convention: Rho2Convention = "tabulated") -> dict[str, float]:
    """The sigma-normalized constants in the layout of the published table."""
    co = coefficients(q, kappa, 0.0, 0.0, rho2_convention)
    return {
        "b1q/cos": co.b1q,
        "beta1": co.beta1,
        "delta1": co.delta1,
        "delta2": co.delta2,
        "rho1": co.rho1,
        "rho2": co.rho2,
        "(mu2q+b1q)/cos": co.mu_2q + co.b1q,
        "nu_q/sin": chi2(q, q, kappa),
        "nu_2q/sin": chi2(2 * q, q, kappa),
    }


@dataclass(frozen=True)
class ModePrediction:
    r_amplitude: float
    hopf_frequency: float
    family_kind: Literal["modulated", "oscillating"]
    twisted_stable: bool

    @property
    def period(self) -> float:
        return TWO_PI / self.hopf_frequency if self.hopf_frequency else math.inf


def amplitude_prediction(coeffs: CMCoefficients, b1: float) -> ModePrediction:
    """Amplitude of the bifurcated family, or zero on the stable side."""
    kind = "modulated" if coeffs.sigma == 0.0 else "oscillating"
    if b1 > coeffs.b1q:
        return ModePrediction(0.0, coeffs.nu_q, kind, True)
    beta = coeffs.beta
    if beta <= 0.0:
        raise SubcriticalError(f"cubic coefficient beta = {beta:.6g} <= 0: the bifurcating family is unstable")
    r = math.sqrt(-(b1 - coeffs.b1q) / beta)
    return ModePrediction(r, coeffs.nu_q, kind, False)


def reduced_rhs_radial(coeffs: CMCoefficients, r: float, mu: float) -> float:
    if r < 0.0:
        raise ValueError("r must be nonnegative")
    return -mu * r - coeffs.beta * r**3


def reduced_rhs_phase(coeffs: CMCoefficients, r: float) -> float:
    """Angular velocity of the reduced flow to order ``r^2``."""
    c, s = math.cos(coeffs.sigma), math.sin(coeffs.sigma)
    return coeffs.nu_q + (s * coeffs.beta2 - s * coeffs.delta2 * coeffs.c2
                          - c * coeffs.delta1 * coeffs.c1) * r * r


def slaved_second_harmonic(coeffs: CMCoefficients, xi: float, eta: float) -> tuple[float, float]:
    x, y = xi * xi - eta * eta, 2.0 * xi * eta
    return coeffs.c1 * x + coeffs.c2 * y, -coeffs.c2 * x + coeffs.c1 * y


@dataclass(frozen=True)
class FourierState:
    """Coordinates of the deviation in the Fourier basis, modes ``1..J``."""

    xi0: float
    xi: np.ndarray
    eta: np.ndarray
    mu: float

    @property
    def modes(self) -> int:
        return self.xi.size

    def pack(self) -> np.ndarray:
        return np.concatenate(([self.xi0], self.xi, self.eta, [self.mu]))

    @classmethod
    def unpack(cls, y: np.ndarray) -> "FourierState":
        y = np.asarray(y, dtype=float)
        if y.size < 4 or y.size % 2:
            raise ValueError("packed Fourier state has length 2J + 2")
        J = (y.size - 2) // 2
        return cls(float(y[0]), y[1:J + 1].copy(), y[J + 1:2 * J + 1].copy(), float(y[-1]))

    @classmethod
    def zeros(cls, J: int, mu: float = 0.0) -> "FourierState":
        return cls(0.0, np.zeros(J), np.zeros(J), mu)


def default_modes(q: int) -> int:
    return 3 * q + 2


def fourier_vector_field(coeffs: CMCoefficients, J: int | None = None) -> Callable[[float, np.ndarray], np.ndarray]:
    """Packed-state closure of the truncated Fourier-mode system.

    Modes ``q`` and ``2q`` carry the quadratic and cubic terms of the
    reduction; every other mode relaxes linearly with ``(mu_j, nu_j)``.
    """
    q = coeffs.q
    J = default_modes(q) if J is None else J
    if J < 3 * q:
        raise ValueError(f"need at least 3q = {3 * q} modes, got {J}")
    c, s = math.cos(coeffs.sigma), math.sin(coeffs.sigma)
    j = np.arange(1, J + 1)
    mu_j = np.array([coeffs.mu(int(m)) for m in j])
    nu_j = np.array([coeffs.nu(int(m)) for m in j])
    iq, i2 = q - 1, 2 * q - 1
    cubic = 0.75 * coeffs.b3 + coeffs.beta1 * c
    d1, d2, b2 = coeffs.delta1, coeffs.delta2, coeffs.beta2
    r1, r2 = coeffs.rho1, coeffs.rho2
    mu2q, nu2q = coeffs.mu_2q, coeffs.nu_2q
    b1q = coeffs.b1q

    def f(t: float, y: np.ndarray) -> np.ndarray:
        xi, eta = y[1:J + 1], y[J + 1:2 * J + 1]
        mu = y[-1]
        dxi = mu_j * xi - nu_j * eta
        deta = nu_j * xi + mu_j * eta

        x1, y1, x2, y2 = xi[iq], eta[iq], xi[i2], eta[i2]
        r_sq = x1 * x1 + y1 * y1
        cross = x1 * y2 - x2 * y1
        dot = x1 * x2 + y1 * y2
        dxi[iq] = (-mu * x1 - coeffs.nu_q * y1 - cubic * r_sq * x1 + d1 * c * cross
                   + s * (-b2 * r_sq * y1 + d2 * dot))
        deta[iq] = (coeffs.nu_q * x1 - mu * y1 - cubic * r_sq * y1 - d1 * c * dot
                    + s * (b2 * r_sq * x1 + d2 * cross))
        diff = x1 * x1 - y1 * y1
        dxi[i2] = mu2q * x2 - nu2q * y2 - 2.0 * r1 * x1 * y1 * c + r2 * s * diff
        deta[i2] = nu2q * x2 + mu2q * y2 + r1 * c * diff + 2.0 * r2 * x1 * y1 * s

        out = np.empty_like(y)
        out[0] = -b1q * y[0]
        out[1:J + 1] = dxi
        out[J + 1:2 * J + 1] = deta
        out[-1] = 0.0
        return out

    return f


def fourier_truncated_rhs(coeffs: CMCoefficients, state: FourierState) -> FourierState:
    """Time derivative of ``state`` under the truncated Fourier-mode system."""
    f = fourier_vector_field(coeffs, state.modes)
    return FourierState.unpack(f(0.0, state.pack()))
