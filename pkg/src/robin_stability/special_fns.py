"""Bessel functions of real order and bracketed root finding.

Only non-negative real orders and non-negative real arguments are handled.
:func:`bessel_j` uses the ascending power series for ``x <= 10`` and Miller's
backward recurrence beyond, normalised with the Neumann-type
sum ``(x/2)**mu = sum_k (mu + 2k) Gamma(mu + k) / k! * J_{mu+2k}(x)``.
"""
from __future__ import annotations

import math
from typing import Callable

from .errors import BracketError, InvalidArgumentError

_SERIES_EPS = 1e-17
# above this the alternating series loses more than ~3 digits
_SERIES_MAX_X = 10.0


def _check(nu: float, x: float) -> tuple[float, float]:
    nu = float(nu)
    x = float(x)
    if not (math.isfinite(nu) and math.isfinite(x)):
        raise InvalidArgumentError(f"non-finite Bessel argument (nu={nu}, x={x})")
    if nu < 0:
        raise InvalidArgumentError(f"negative order nu={nu} is not supported")
    if x < 0:
        raise InvalidArgumentError(f"negative argument x={x} is not supported")
    return nu, x


def _series(nu: float, x: float, sign: int) -> float:
    # sign=-1 gives J_nu, sign=+1 gives I_nu
    if x == 0.0:
        return 1.0 if nu == 0.0 else 0.0
    q = 0.25 * x * x
    term = math.exp(nu * math.log(0.5 * x) - math.lgamma(nu + 1.0))
    total = term
    m = 0
    while True:
        m += 1
        term *= sign * q / (m * (m + nu))
        total += term
        if abs(term) <= _SERIES_EPS * abs(total) and m > 0.5 * x:
            return total
        if m > 10_000:  # pragma: no cover - unreachable for supported ranges
            return total


def _miller(nu: float, x: float) -> float:
    mu = nu - math.floor(nu)
    k_target = int(round(nu - mu))
    top = max(k_target, int(x)) + 40 + int(2.0 * math.sqrt(x)) + 20
    top += top % 2
    vals = [0.0] * (top + 2)
    vals[top] = 1e-250
    for k in range(top, 0, -1):
        vals[k - 1] = 2.0 * (mu + k) / x * vals[k] - vals[k + 1]
        if abs(vals[k - 1]) > 1e250:
            for j in range(k - 1, top + 1):
                vals[j] *= 1e-250
    if mu == 0.0:
        norm = vals[0] + 2.0 * math.fsum(vals[2:top + 1:2])
        scale = 1.0 / norm
    else:
        # k = 0 weight mu Gamma(mu) written as Gamma(mu + 1): Gamma(mu) overflows for tiny mu
        coeffs = [math.exp(math.lgamma(mu + 1.0)) * vals[0]] + [
            (mu + 2 * k) * math.exp(math.lgamma(mu + k) - math.lgamma(k + 1.0)) * vals[2 * k]
            for k in range(1, top // 2 + 1)
        ]
        scale = math.exp(mu * math.log(0.5 * x)) / math.fsum(coeffs)
    return vals[k_target] * scale


def bessel_j(nu: float, x: float) -> float:
    """Bessel function of the first kind ``J_nu(x)`` for ``nu, x >= 0``."""
    nu, x = _check(nu, x)
    if x <= _SERIES_MAX_X:
        return _series(nu, x, -1)
    return _miller(nu, x)


def bessel_j_prime(nu: float, x: float) -> float:
    """Derivative ``J'_nu(x)``.

    Uses ``(J_{nu-1} - J_{nu+1}) / 2`` for ``nu >= 1`` and ``-J_1`` for
    ``nu = 0``. For ``0 < nu < 1`` the derivative is unbounded at the origin.
    """
    nu, x = _check(nu, x)
    if nu == 0.0:
        return -bessel_j(1.0, x)
    if nu >= 1.0:
        return 0.5 * (bessel_j(nu - 1.0, x) - bessel_j(nu + 1.0, x))
    if x == 0.0:
        raise InvalidArgumentError(f"J'_nu(0) is unbounded for 0 < nu={nu} < 1")
    return nu / x * bessel_j(nu, x) - bessel_j(nu + 1.0, x)


def bessel_i(nu: float, x: float) -> float:
    """Modified Bessel function ``I_nu(x)``; the series has no cancellation."""
    nu, x = _check(nu, x)
    return _series(nu, x, +1)


def find_bracketed_root(
    f: Callable[[float], float], lo: float, hi: float, tol: float = 1e-12
) -> float:
    """Bisection root of ``f`` on ``[lo, hi]``.

    Returns the midpoint of the final bracket, whose width is ``<= tol``.

    Raises
    ------
    BracketError
        If ``f(lo)`` and ``f(hi)`` have the same strict sign.
    """
    if not tol > 0:
        raise InvalidArgumentError(f"tol must be positive, got {tol}")
    lo, hi = float(lo), float(hi)
    if lo > hi:
        lo, hi = hi, lo
    flo, fhi = f(lo), f(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if (flo > 0) == (fhi > 0):
        raise BracketError(f"no sign change on [{lo}, {hi}]: f={flo:.3e}, {fhi:.3e}")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        fmid = f(mid)
        if fmid == 0.0:
            return mid
        if (fmid > 0) == (flo > 0):
            lo, flo = mid, fmid
        else:
            hi = mid
    return 0.5 * (lo + hi)
