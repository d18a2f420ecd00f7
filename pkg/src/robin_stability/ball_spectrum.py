"""Robin eigenvalues of balls and the radial profiles of their eigenfunctions.

Second eigenfunctions of ``B_R`` are ``g(r) x_i / r`` with
``g(r) = r**(1 - n/2) * J_{n/2}(k r / R)``, where ``k`` solves the Robin
condition ``g'(R) = -alpha g(R)``. Dividing that condition by ``J_{n/2}(k)``
gives the form solved here::

    G(k) = (1 + R*alpha) - k J_{n/2+1}(k) / J_{n/2}(k) = 0,   k in (0, xi]

with ``xi = xi_{n/2,1}`` the Neumann root (``G(xi) = 0`` at ``alpha = 0``).
``G(0) = 1 + R*alpha`` so the bracket is valid for ``-1 < R*alpha < 0``.

The first eigenvalue for ``alpha < 0`` is not given in closed form in the
literature we follow; we use the increasing radial solution
``r**(1 - n/2) I_{n/2-1}(kappa r)`` of ``Delta u = kappa**2 u`` and solve
``kappa I_{n/2}(kappa) / I_{n/2-1}(kappa) = -R*alpha``, giving
``lambda_1 = -(kappa/R)**2``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import InvalidArgumentError, OutOfRangeError
from .special_fns import bessel_i, bessel_j, find_bracketed_root

ROOT_TOL = 1e-12


def unit_ball_volume(n: int) -> float:
    """Volume ``omega_n`` of the unit ball in ``R^n``."""
    return math.pi ** (n / 2) / math.gamma(n / 2 + 1)


def _check_dim(n) -> int:
    if int(n) != n or n < 2:
        raise InvalidArgumentError(f"dimension must be an integer >= 2, got {n}")
    return int(n)


def _check_finite(**kw) -> None:
    for name, val in kw.items():
        if not math.isfinite(val):
            raise InvalidArgumentError(f"{name} must be finite, got {val}")


@dataclass(frozen=True)
class BallSpec:
    n: int
    R: float

    def __post_init__(self):
        _check_dim(self.n)
        _check_finite(R=self.R)
        if self.R <= 0:
            raise InvalidArgumentError(f"radius must be positive, got {self.R}")

    @property
    def volume(self) -> float:
        return unit_ball_volume(self.n) * self.R**self.n


@dataclass(frozen=True)
class RadialEigenSolution:
    """Wavenumber/eigenvalue pair of a radial ball mode.

    ``k`` is the unit-ball wavenumber (``kappa`` on the negative branch),
    so ``lam = (k/R)**2`` or ``lam = -(k/R)**2``.
    """

    k: float
    lam: float
    nu: float
    R: float = 1.0
    branch: str = "positive"
    residual: float = 0.0


def _ratio_j(nu: float, k: float) -> float:
    # k J_{nu+1}(k) / J_nu(k), continuous extension 0 at k = 0
    if k == 0.0:
        return 0.0
    return k * bessel_j(nu + 1.0, k) / bessel_j(nu, k)


@lru_cache(maxsize=None)
def neumann_root(n: int) -> float:
    """``xi_{n/2,1}``: first positive zero of the derivative of ``t**(1-n/2) J_{n/2}(t)``.

    ``mu_2`` of the unit ball equals ``xi**2``.
    """
    n = _check_dim(n)
    nu = n / 2
    G = lambda k: 1.0 - _ratio_j(nu, k)
    # G decreases from 1 to -inf before the first zero of J_nu; step below that gap
    step = 0.05
    lo = 0.0
    hi = step
    while G(hi) > 0:
        lo, hi = hi, hi + step
    return find_bracketed_root(G, lo, hi, ROOT_TOL)


def lambda2_unit_ball(n: int, a: float) -> RadialEigenSolution:
    """Second Robin eigenvalue of the unit ball for ``-1 <= a <= 0``.

    At ``a = -1`` the eigenfunction radial part is ``g(r) = r`` and the
    eigenvalue is exactly 0 (returned with ``k = 0``).
    """
    n = _check_dim(n)
    _check_finite(a=a)
    nu = n / 2
    if a == -1.0:
        return RadialEigenSolution(k=0.0, lam=0.0, nu=nu)
    if not -1.0 < a <= 0.0:
        raise OutOfRangeError(f"lambda_2 of the unit ball needs -1 <= a <= 0, got a={a}")
    xi = neumann_root(n)
    G = lambda t: (1.0 + a) - _ratio_j(nu, t)
    if a == 0.0 or G(xi) >= 0.0:
        # for |a| below the root tolerance the root is xi to working precision
        k = xi
    else:
        k = find_bracketed_root(G, 0.0, xi, ROOT_TOL)
    jk = bessel_j(nu, k)
    # g'(1) + a g(1) = (1 + a) J_nu(k) - k J_{nu+1}(k)
    resid = abs((1.0 + a) * jk - k * bessel_j(nu + 1.0, k)) / abs(jk)
    return RadialEigenSolution(k=k, lam=k * k, nu=nu, residual=resid)


def _check_lambda2_range(ball: BallSpec, alpha: float, allow_endpoint: bool) -> float:
    _check_finite(alpha=alpha)
    a = ball.R * alpha
    if allow_endpoint and a == -1.0:
        return a
    if not -1.0 < a <= 0.0:
        raise OutOfRangeError(
            f"alpha={alpha} outside (-1/R, 0] for R={ball.R}"
        )
    return a


def ball_mode(ball: BallSpec, alpha: float) -> RadialEigenSolution:
    """Second-eigenvalue mode of ``B_R`` via the scaling relation."""
    a = _check_lambda2_range(ball, alpha, allow_endpoint=True)
    unit = lambda2_unit_ball(ball.n, a)
    return RadialEigenSolution(
        k=unit.k, lam=unit.lam / ball.R**2, nu=unit.nu, R=ball.R, residual=unit.residual
    )


def lambda2_ball(ball: BallSpec, alpha: float) -> float:
    """``lambda_2(B_R; alpha) = lambda_2(B_1; R alpha) / R**2`` for ``-1/R <= alpha <= 0``."""
    return ball_mode(ball, alpha).lam


def lambda1_unit_ball(n: int, a: float) -> RadialEigenSolution:
    n = _check_dim(n)
    _check_finite(a=a)
    if a > 0:
        raise OutOfRangeError(f"lambda_1 is only implemented for a <= 0, got a={a}")
    if a == 0.0:
        return RadialEigenSolution(k=0.0, lam=0.0, nu=n / 2 - 1, branch="negative")
    mu = n / 2 - 1

    def H(kappa):
        if kappa == 0.0:
            return a
        return kappa * bessel_i(mu + 1.0, kappa) / bessel_i(mu, kappa) + a

    hi = 1.0
    while H(hi) <= 0:
        hi *= 2.0
        if hi > 512:
            raise OutOfRangeError(f"a={a} too negative for the modified Bessel series")
    kappa = find_bracketed_root(H, 0.0, hi, ROOT_TOL)
    resid = abs(H(kappa)) / max(1.0, abs(a))
    return RadialEigenSolution(k=kappa, lam=-kappa * kappa, nu=mu, branch="negative", residual=resid)


def lambda1_ball(ball: BallSpec, alpha: float) -> float:
    """First Robin eigenvalue of ``B_R`` for ``alpha <= 0`` (0 at ``alpha = 0``, negative otherwise)."""
    _check_finite(alpha=alpha)
    if alpha > 0:
        raise OutOfRangeError(f"lambda_1 is only implemented for alpha <= 0, got {alpha}")
    return lambda1_unit_ball(ball.n, ball.R * alpha).lam / ball.R**2


@dataclass(frozen=True)
class RadialProfile:
    """The radial part ``g`` of the second ball eigenfunction and its ``C^1`` extension.

    Inside ``B_R``: ``g(r) = r**(1-n/2) J_{n/2}(k r/R)``; outside:
    ``g(R) exp(-alpha (r - R))``.
    """

    ball: BallSpec
    alpha: float
    k: float

    @classmethod
    def build(cls, ball: BallSpec, alpha: float) -> "RadialProfile":
        _check_finite(alpha=alpha)
        if not -1.0 / ball.R < alpha < 0:
            raise OutOfRangeError(f"alpha={alpha} outside (-1/R, 0) for R={ball.R}")
        return cls(ball, float(alpha), ball_mode(ball, alpha).k)

    @property
    def nu(self) -> float:
        return self.ball.n / 2

    @property
    def g_R(self) -> float:
        R = self.ball.R
        return R ** (1 - self.nu) * bessel_j(self.nu, self.k)

    def g(self, r: float) -> float:
        R = self.ball.R
        if r < 0:
            raise InvalidArgumentError(f"radius must be >= 0, got {r}")
        if r == 0:
            return 0.0
        if r <= R:
            return r ** (1 - self.nu) * bessel_j(self.nu, self.k * r / R)
        return self.g_R * math.exp(-self.alpha * (r - R))

    def dg(self, r: float) -> float:
        R, nu, k = self.ball.R, self.nu, self.k
        if r < 0:
            raise InvalidArgumentError(f"radius must be >= 0, got {r}")
        if r == 0:
            return (k / (2 * R)) ** nu / math.gamma(nu + 1)
        if r <= R:
            x = k * r / R
            # (r^{1-nu} J_nu(kr/R))' = r^{-nu} J_nu(x) - r^{1-nu} (k/R) J_{nu+1}(x)
            return r**-nu * bessel_j(nu, x) - r ** (1 - nu) * (k / R) * bessel_j(nu + 1, x)
        return -self.alpha * self.g(r)

    def h_definition(self, r: float) -> float:
        if r <= 0:
            raise InvalidArgumentError(f"h(r) needs r > 0, got {r}")
        n, a = self.ball.n, self.alpha
        g, dg = self.g(r), self.dg(r)
        return dg * dg + (n - 1) * g * g / r**2 + 2 * a * g * dg + a * (n - 1) / r * g * g

    def h_outside(self, r):
        """Closed form of ``h`` for ``r >= R``; accepts arrays."""
        n, a, R = self.ball.n, self.alpha, self.ball.R
        r = np.asarray(r, dtype=float)
        out = self.g_R**2 * (-a * a + (n - 1) * (1 + a * r) / r**2) * np.exp(-2 * a * (r - R))
        return out if out.ndim else float(out)

    def h(self, r: float) -> float:
        if r <= 0:
            raise InvalidArgumentError(f"h(r) needs r > 0, got {r}")
        if r >= self.ball.R:
            return self.h_outside(r)
        return self.h_definition(r)


def radial_g(ball: BallSpec, alpha: float, r: float) -> float:
    return RadialProfile.build(ball, alpha).g(r)


def radial_h(ball: BallSpec, alpha: float, r: float) -> float:
    return RadialProfile.build(ball, alpha).h(r)
