"""Adaptive Gauss-Legendre quadrature with interval bisection."""
from __future__ import annotations

from functools import lru_cache
from typing import Callable

import numpy as np


@lru_cache(maxsize=None)
def _rule(npts: int) -> tuple[np.ndarray, np.ndarray]:
    return np.polynomial.legendre.leggauss(npts)


def _fixed(f, a: float, b: float, npts: int) -> float:
    x, w = _rule(npts)
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    vals = np.asarray(f(mid + half * x), dtype=float)
    return float(half * np.dot(w, vals))


def adaptive_gauss_legendre(
    f: Callable[[np.ndarray], np.ndarray],
    a: float,
    b: float,
    rel_tol: float = 1e-10,
    abs_tol: float = 1e-14,
    npts: int = 16,
    max_depth: int = 40,
) -> float:
    """Integrate a vectorised ``f`` over ``[a, b]``.

    Each interval is accepted once its ``npts``-point estimate agrees with the
    sum over its two halves to ``max(abs_tol, rel_tol * |estimate|)``.
    """
    if a == b:
        return 0.0
    sign = 1.0
    if b < a:
        a, b, sign = b, a, -1.0
    whole = _fixed(f, a, b, npts)
    stack = [(a, b, whole, 0)]
    pieces = []
    while stack:
        lo, hi, est, depth = stack.pop()
        mid = 0.5 * (lo + hi)
        left = _fixed(f, lo, mid, npts)
        right = _fixed(f, mid, hi, npts)
        refined = left + right
        if abs(refined - est) <= max(abs_tol, rel_tol * abs(refined)) or depth >= max_depth:
            pieces.append(refined)
        else:
            stack.append((mid, hi, right, depth + 1))
            stack.append((lo, mid, left, depth + 1))
    return sign * float(np.sum(pieces))
