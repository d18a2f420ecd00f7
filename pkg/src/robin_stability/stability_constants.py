"""Explicit constants of the quantitative second-eigenvalue inequality.

With ``k = sqrt(lambda_2(B_1; R alpha))``, ``nu = n/2`` and
``c_n = 7 (n-1) / (16**2 n)``:

* ``eta   = omega_n**(-2/n) * n omega_n * int_0^1 r J_nu(k r)**2 dr``
* ``gamma = |Omega|**(-2/n) omega_n J_nu(k)**2 c_n / eta``,  ``|Omega| = omega_n R**n``
* ``delta = c_n omega_n**((n+2)/n) J_nu(xi)**2 / (n omega_n int_0^1 r J_nu(xi r)**2 dr)``

so that ``gamma * |Omega|**(2/n) -> delta`` as ``alpha -> 0-``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .ball_spectrum import BallSpec, RadialProfile, _check_dim, ball_mode, neumann_root, unit_ball_volume
from .errors import InvalidArgumentError, OutOfRangeError
from .quadrature import adaptive_gauss_legendre
from .special_fns import bessel_j

QUAD_REL_TOL = 1e-10


def _coef(n: int) -> float:
    return 7.0 * (n - 1) / (16.0**2 * n)


def _check_alpha(n: int, alpha: float, R: float) -> BallSpec:
    ball = BallSpec(n, R)
    if not math.isfinite(alpha) or not -1.0 / R < alpha < 0:
        raise OutOfRangeError(f"alpha={alpha} outside (-1/R, 0) for R={R}")
    return ball


def _radial_bessel_l2(nu: float, k: float) -> float:
    # int_0^1 r J_nu(k r)^2 dr
    jv = np.vectorize(lambda x: bessel_j(nu, x))
    return adaptive_gauss_legendre(lambda r: r * jv(k * r) ** 2, 0.0, 1.0, rel_tol=QUAD_REL_TOL)


def _ball_integral(n: int, k: float) -> float:
    # int_{B_1} r^{2-n} J_{n/2}(k r)^2 dx
    return n * unit_ball_volume(n) * _radial_bessel_l2(n / 2, k)


@dataclass(frozen=True)
class StabilityConstants:
    eta: float
    gamma: float
    R: float
    n: int
    alpha: float


def eta_constant(n: int, alpha: float, R: float) -> float:
    n = _check_dim(n)
    ball = _check_alpha(n, alpha, R)
    k = ball_mode(ball, alpha).k
    return unit_ball_volume(n) ** (-2.0 / n) * _ball_integral(n, k)


def gamma_constant(n: int, alpha: float, R: float) -> StabilityConstants:
    n = _check_dim(n)
    ball = _check_alpha(n, alpha, R)
    k = ball_mode(ball, alpha).k
    omega = unit_ball_volume(n)
    eta = omega ** (-2.0 / n) * _ball_integral(n, k)
    vol = ball.volume
    gamma = vol ** (-2.0 / n) * omega * bessel_j(n / 2, k) ** 2 * _coef(n) / eta
    return StabilityConstants(eta=eta, gamma=gamma, R=float(R), n=n, alpha=float(alpha))


def delta_constant(n: int) -> float:
    """Neumann-limit constant ``delta(n)``."""
    n = _check_dim(n)
    xi = neumann_root(n)
    omega = unit_ball_volume(n)
    return _coef(n) * omega ** ((n + 2.0) / n) * bessel_j(n / 2, xi) ** 2 / _ball_integral(n, xi)


def keypoint_gap(n: int, alpha: float, R: float, beta: float) -> tuple[float, float]:
    """Both sides of the lower bound on ``int_R^{R2} (h(R) - h(r)) r**(n-1) dr``.

    ``R2 = R (1 + beta/2)**(1/n)``; the right side is
    ``7 (n-1) R**(n-2) g(R)**2 beta**2 / (16**2 n**2)``.
    """
    n = _check_dim(n)
    ball = _check_alpha(n, alpha, R)
    if not math.isfinite(beta) or not 0.0 <= beta <= 2.0:
        raise OutOfRangeError(f"beta must lie in [0, 2], got {beta}")
    prof = RadialProfile.build(ball, alpha)
    R2 = R * (1.0 + beta / 2.0) ** (1.0 / n)
    hR = prof.h_outside(R)
    lhs = adaptive_gauss_legendre(
        lambda r: (hR - prof.h_outside(r)) * r ** (n - 1), R, R2, rel_tol=QUAD_REL_TOL
    )
    rhs = 7.0 * (n - 1) * R ** (n - 2) * prof.g_R**2 * beta**2 / (16.0**2 * n**2)
    return lhs, rhs


def elementary_inequality_margin(n: int, x: float) -> tuple[float | None, float]:
    """Slack in the two polynomial bounds used for the integral estimate.

    ``m1 = 1 + (n-2)/n x - (n-2)/(4 n**2) x**2 - (1+x)**((n-2)/n)`` (``None`` when ``n < 3``),
    ``m2 = x - x**2/8 - log(1+x)``.
    """
    n = _check_dim(n)
    if not math.isfinite(x) or not 0.0 <= x <= 1.0:
        raise InvalidArgumentError(f"x must lie in [0, 1], got {x}")
    m2 = x - x * x / 8.0 - math.log1p(x)
    if n < 3:
        return None, m2
    p = (n - 2) / n
    m1 = 1.0 + p * x - (n - 2) / (4.0 * n * n) * x * x - (1.0 + x) ** p
    return m1, m2
