"""Planar star-shaped domains ``r(theta) = R (1 + eps psi(theta))``.

``psi`` is a finite Fourier series without modes 0, 1 and 2, i.e. orthogonal
on the circle to spherical harmonics of degree at most two. With the
``symmetric`` flag only even cosine modes are allowed, which makes the
domain invariant under both coordinate reflections.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

import numpy as np
from scipy.optimize import minimize, minimize_scalar

from .ball_spectrum import BallSpec
from .errors import DomainError, DomainFileError, InvalidArgumentError

Modes = tuple[tuple[int, float], ...]


@dataclass(frozen=True)
class StarDomain2D:
    R: float
    eps: float
    cosine_coeffs: Modes = ()
    sine_coeffs: Modes = ()
    symmetric: bool = False
    name: str = ""

    def psi(self, theta):
        theta = np.asarray(theta, dtype=float)
        out = np.zeros_like(theta)
        for m, c in self.cosine_coeffs:
            out = out + c * np.cos(m * theta)
        for m, s in self.sine_coeffs:
            out = out + s * np.sin(m * theta)
        return out

    def dpsi(self, theta):
        theta = np.asarray(theta, dtype=float)
        out = np.zeros_like(theta)
        for m, c in self.cosine_coeffs:
            out = out - m * c * np.sin(m * theta)
        for m, s in self.sine_coeffs:
            out = out + m * s * np.cos(m * theta)
        return out

    def radius(self, theta):
        return self.R * (1.0 + self.eps * self.psi(theta))

    @property
    def max_mode(self) -> int:
        modes = [m for m, _ in self.cosine_coeffs + self.sine_coeffs]
        return max(modes, default=0)

    @property
    def is_disk(self) -> bool:
        return self.eps == 0.0 or all(c == 0.0 for _, c in self.cosine_coeffs + self.sine_coeffs)

    def scaled(self, t: float) -> "StarDomain2D":
        return StarDomain2D(self.R * t, self.eps, self.cosine_coeffs, self.sine_coeffs, self.symmetric, self.name)


def _min_radial_factor(dom: StarDomain2D, samples: int | None = None) -> float:
    # min over theta of 1 + eps psi(theta): dense sampling, then a bounded local polish
    n = samples or max(4096, 64 * dom.max_mode)
    theta = 2 * np.pi * np.arange(n) / n
    f = 1.0 + dom.eps * dom.psi(theta)
    i = int(np.argmin(f))
    best = float(f[i])
    step = 2 * np.pi / n
    res = minimize_scalar(
        lambda t: float(1.0 + dom.eps * dom.psi(t)),
        bounds=(theta[i] - step, theta[i] + step),
        method="bounded",
        options={"xatol": 1e-14},
    )
    return min(best, float(res.fun))


def _normalise_modes(coeffs: Mapping[int, float] | None, kind: str) -> Modes:
    if not coeffs:
        return ()
    out = []
    for m, c in sorted(coeffs.items()):
        if int(m) != m:
            raise DomainError(f"{kind} mode {m} is not an integer")
        m = int(m)
        c = float(c)
        if not math.isfinite(c):
            raise InvalidArgumentError(f"{kind} coefficient for mode {m} is not finite")
        if m < 3:
            raise DomainError(
                f"{kind} mode {m} not allowed: psi must be orthogonal to harmonics of degree 0, 1, 2"
            )
        out.append((m, c))
    return tuple(out)


def make_star_domain(
    R: float,
    eps: float,
    coeffs: Mapping[int, float] | None,
    symmetric: bool = False,
    sine_coeffs: Mapping[int, float] | None = None,
    name: str = "",
) -> StarDomain2D:
    """Validated :class:`StarDomain2D`.

    Raises
    ------
    DomainError
        Forbidden mode (0, 1, 2; odd or sine modes when ``symmetric``) or
        ``min(1 + eps psi) <= 0``.
    """
    R, eps = float(R), float(eps)
    if not (math.isfinite(R) and math.isfinite(eps)):
        raise InvalidArgumentError(f"R and eps must be finite (R={R}, eps={eps})")
    if R <= 0:
        raise InvalidArgumentError(f"R must be positive, got {R}")
    if eps < 0:
        raise InvalidArgumentError(f"eps must be >= 0, got {eps}")
    cos_modes = _normalise_modes(coeffs, "cosine")
    sin_modes = _normalise_modes(sine_coeffs, "sine")
    if symmetric:
        if sin_modes:
            raise DomainError("sine modes break the reflection symmetry")
        odd = [m for m, _ in cos_modes if m % 2]
        if odd:
            raise DomainError(f"odd modes {odd} break the reflection symmetry")
    dom = StarDomain2D(R, eps, cos_modes, sin_modes, bool(symmetric), name)
    fmin = _min_radial_factor(dom)
    if fmin <= 0:
        raise DomainError(f"not star-shaped: min(1 + eps psi) = {fmin:.3g} <= 0")
    return dom


def disk(R: float = 1.0, name: str = "disk") -> StarDomain2D:
    return make_star_domain(R, 0.0, {}, symmetric=True, name=name)


def volume(dom: StarDomain2D) -> float:
    """Exact area ``pi R**2 (1 + eps**2 sum c_m**2 / 2)``."""
    energy = sum(c * c for _, c in dom.cosine_coeffs) + sum(s * s for _, s in dom.sine_coeffs)
    return math.pi * dom.R**2 * (1.0 + 0.5 * dom.eps**2 * energy)


def equivalent_ball(dom: StarDomain2D) -> BallSpec:
    return BallSpec(2, math.sqrt(volume(dom) / math.pi))


def t_eps(dom: StarDomain2D) -> float:
    """Radius ratio ``(|Omega| / |B_R|)**(1/2)`` of the equal-area ball to the base ball."""
    return math.sqrt(volume(dom) / (math.pi * dom.R**2))


def boundary_jacobian(dom: StarDomain2D, theta):
    """Boundary length element relative to the base circle: ``sqrt((1+eps psi)**2 + eps**2 psi'**2)``."""
    f = 1.0 + dom.eps * dom.psi(theta)
    d = dom.eps * dom.dpsi(theta)
    out = np.sqrt(f * f + d * d)
    return out if np.ndim(out) else float(out)


def _ray_to_circle(theta: np.ndarray, center: np.ndarray, r: float) -> np.ndarray:
    # distance from the origin to the circle |x - c| = r along direction theta (origin inside)
    proj = np.cos(theta) * center[0] + np.sin(theta) * center[1]
    return proj + np.sqrt(proj * proj - center @ center + r * r)


def symmetric_difference_ratio(
    dom: StarDomain2D, center, radius: float | None = None, n_angles: int = 16384
) -> float:
    """``|Omega Delta B_r(c)| / |B_r|`` by polar quadrature about the origin.

    Both sets are star-shaped about the origin (``|c| < r``), so
    ``|Omega cap B| = 1/2 int min(rho_Omega, rho_B)**2 dtheta``.
    """
    center = np.asarray(center, dtype=float)
    r = radius if radius is not None else equivalent_ball(dom).R
    if center @ center >= r * r:
        return 2.0
    theta = 2 * np.pi * np.arange(n_angles) / n_angles
    rho_o = dom.radius(theta)
    rho_b = _ray_to_circle(theta, center, r)
    inter = 0.5 * np.mean(np.minimum(rho_o, rho_b) ** 2) * 2 * np.pi
    area_b = math.pi * r * r
    return (volume(dom) + area_b - 2.0 * inter) / area_b


def fraenkel_asymmetry(dom: StarDomain2D, tol: float = 1e-7, n_angles: int = 16384) -> float:
    """Fraenkel asymmetry: minimum over ball centres of the relative symmetric difference.

    Centres are searched on a coarse grid over a disk of radius ``R eps``
    and polished with Nelder-Mead; the region is widened four-fold when the
    optimum sits on its rim.
    """
    if dom.is_disk:
        return 0.0
    r = equivalent_ball(dom).R
    obj = lambda c: symmetric_difference_ratio(dom, c, r, n_angles)
    search = dom.R * dom.eps
    for _ in range(4):
        grid = np.linspace(-search, search, 9)
        pts = [np.array([x, y]) for x in grid for y in grid if x * x + y * y <= search * search]
        start = min(pts, key=obj)
        res = minimize(
            obj,
            start,
            method="Nelder-Mead",
            options={
                "xatol": tol * dom.R,
                "fatol": tol * 1e-2,
                "initial_simplex": [start, start + [search / 4, 0], start + [0, search / 4]],
                "maxiter": 2000,
            },
        )
        best = min(float(res.fun), obj(start))
        if np.hypot(*res.x) < 0.9 * search:
            break
        search *= 4.0
    return float(min(max(best, 0.0), 2.0))


# -- domain files -------------------------------------------------------------

_TRUE = {"true", "yes", "1", "on"}
_FALSE = {"false", "no", "0", "off"}


def parse_domain_text(text: str, name: str = "") -> StarDomain2D:
    """Parse the key-value domain format.

    Recognised lines (``#`` starts a comment)::

        R = 1.0
        eps = 0.1
        symmetric = true
        mode 4 = 1.0        # cosine coefficient
        sine 5 = 0.3        # sine coefficient
    """
    fields: dict[str, str] = {}
    cos: dict[int, float] = {}
    sin: dict[int, float] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise DomainFileError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        words = key.split()
        try:
            if len(words) == 2 and words[0] in ("mode", "sine"):
                target = cos if words[0] == "mode" else sin
                m = int(words[1])
                if m in target:
                    raise DomainFileError(f"line {lineno}: duplicate {words[0]} {m}")
                target[m] = float(value)
            elif len(words) == 1 and words[0] in ("R", "eps", "symmetric", "name"):
                if words[0] in fields:
                    raise DomainFileError(f"line {lineno}: duplicate key {words[0]}")
                fields[words[0]] = value
            else:
                raise DomainFileError(f"line {lineno}: unknown key {key!r}")
        except ValueError as exc:
            if isinstance(exc, DomainFileError):
                raise
            raise DomainFileError(f"line {lineno}: bad number in {raw!r}") from None
    for required in ("R", "eps"):
        if required not in fields:
            raise DomainFileError(f"missing required key {required!r}")
    sym = fields.get("symmetric", "false").lower()
    if sym not in _TRUE | _FALSE:
        raise DomainFileError(f"symmetric must be true/false, got {sym!r}")
    try:
        R, eps = float(fields["R"]), float(fields["eps"])
    except ValueError:
        raise DomainFileError("R and eps must be numbers") from None
    try:
        return make_star_domain(R, eps, cos, sym in _TRUE, sin, name=fields.get("name", name))
    except (DomainError, InvalidArgumentError) as exc:
        raise DomainFileError(str(exc)) from exc


def load_domain(path) -> StarDomain2D:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise DomainFileError(f"{path}: {exc.strerror}") from exc
    try:
        return parse_domain_text(text, name=path.stem)
    except DomainFileError as exc:
        raise DomainFileError(f"{path}: {exc}") from exc


def format_domain(dom: StarDomain2D) -> str:
    lines = []
    if dom.name:
        lines.append(f"name = {dom.name}")
    lines += [f"R = {dom.R!r}", f"eps = {dom.eps!r}", f"symmetric = {str(dom.symmetric).lower()}"]
    lines += [f"mode {m} = {c!r}" for m, c in dom.cosine_coeffs]
    lines += [f"sine {m} = {s!r}" for m, s in dom.sine_coeffs]
    return "\n".join(lines) + "\n"
