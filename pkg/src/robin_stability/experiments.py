"""End-to-end checks of the quantitative second-eigenvalue inequality.

Every domain eigenvalue comes from a pair of nested ring meshes (``M`` and
``2M`` rings, ``M`` chosen from the requested ``h``). The fine value is
reported, and the Richardson estimate ``|lam_f - lam_c| / (2**p - 1)`` of
its error feeds the numerical allowance::

    allowance = 3 * fem_error + C * (2 A tol + tol**2)

where ``C`` is the constant multiplying ``A**2`` and ``tol`` the asymmetry
tolerance. A case passes when ``margin = deficit - C A**2 >= -allowance``.
"""
from __future__ import annotations

import csv
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from functools import lru_cache
from pathlib import Path
from typing import Callable, Iterable, Optional, Sequence, TextIO

import numpy as np

from .ball_spectrum import BallSpec, lambda2_ball
from .errors import InvalidArgumentError, OutOfRangeError, RobinStabilityError
from .fem import DiscreteOperator, assemble, solve_lowest
from .geometry import StarDomain2D, equivalent_ball, fraenkel_asymmetry, load_domain, make_star_domain, t_eps, volume
from .mesh import triangulate, triangulate_rings
from .stability_constants import delta_constant, gamma_constant

log = logging.getLogger(__name__)

CSV_COLUMNS = (
    "domain_id", "n", "R", "alpha", "eps", "lambda2_ball", "lambda2_domain",
    "asymmetry", "gamma", "deficit", "margin", "allowance", "pass",
)
THREADS_ENV = "ROBIN_STABILITY_THREADS"
NOISE_FLOOR_FACTOR = 10.0


@dataclass(frozen=True)
class FemSettings:
    order: int = 1
    n_eigs: int = 6
    solver_tol: float = 1e-8
    asym_tol: float = 1e-7

    def __post_init__(self):
        if self.order not in (1, 2):
            raise InvalidArgumentError(f"order must be 1 or 2, got {self.order}")
        if self.n_eigs < 3:
            raise InvalidArgumentError("need at least 3 eigenpairs")
        if not (self.solver_tol > 0 and self.asym_tol > 0):
            raise InvalidArgumentError("tolerances must be positive")


@dataclass(frozen=True)
class RichardsonEstimate:
    coarse: float
    fine: float
    ratio: float
    order: float

    @property
    def error(self) -> float:
        """Estimated error of the fine value."""
        return abs(self.fine - self.coarse) / (self.ratio**self.order - 1.0)

    @property
    def extrapolated(self) -> float:
        return self.fine + (self.fine - self.coarse) / (self.ratio**self.order - 1.0)


def richardson(coarse: float, fine: float, ratio: float = 2.0, order: float = 2.0) -> RichardsonEstimate:
    if not ratio > 1 or not order > 0:
        raise InvalidArgumentError(f"need ratio > 1 and order > 0 (ratio={ratio}, order={order})")
    return RichardsonEstimate(float(coarse), float(fine), float(ratio), float(order))


@dataclass(frozen=True)
class StabilityReport:
    domain_id: str
    n: int
    R: float  # equivalent-ball radius
    alpha: float
    eps: float
    lambda2_ball: float
    lambda2_domain: float
    asymmetry: float
    gamma: float
    deficit: float
    margin: float
    numerical_allowance: float
    fem: Optional[RichardsonEstimate] = None
    rings: int = 0
    dof: int = 0

    @property
    def passed(self) -> bool:
        return self.margin >= -self.numerical_allowance

    @property
    def trivial(self) -> bool:
        """``lambda_2(Omega) <= 0``: the inequality then holds without the proof machinery."""
        return self.lambda2_domain <= 0.0


# -- FEM eigenvalue with error estimate --------------------------------------

@lru_cache(maxsize=4)
def _operator(dom: StarDomain2D, rings: int, order: int) -> DiscreteOperator:
    return assemble(triangulate_rings(dom, rings), 0.0, order)


@lru_cache(maxsize=64)
def _asymmetry(dom: StarDomain2D, tol: float) -> float:
    return fraenkel_asymmetry(dom, tol)


def base_rings(dom: StarDomain2D, h: float) -> int:
    return triangulate(dom, h).rings


def fem_lambda2(dom: StarDomain2D, alpha: float, h: float, settings: FemSettings = FemSettings()) -> tuple[RichardsonEstimate, int, int]:
    """``lambda_2`` on meshes of ``M`` and ``2M`` rings; returns ``(estimate, 2M, fine dof count)``."""
    M = base_rings(dom, h)
    values = []
    for rings in (M, 2 * M):
        op = _operator(dom, rings, settings.order).with_alpha(alpha)
        res = solve_lowest(op, settings.n_eigs, settings.solver_tol)
        values.append(float(res.eigenvalues[1]))
    return richardson(values[0], values[1], 2.0, 2.0 * settings.order), 2 * M, op.dof_count


def _check_alpha(dom: StarDomain2D, alpha: float) -> BallSpec:
    ball = equivalent_ball(dom)
    if not (math.isfinite(alpha) and -1.0 / ball.R < alpha < 0.0):
        raise OutOfRangeError(f"alpha={alpha} outside (-1/R, 0) with equivalent radius R={ball.R:.12g}")
    return ball


def _report(dom: StarDomain2D, alpha: float, h: float, settings: FemSettings, lam_ball: float) -> StabilityReport:
    ball = equivalent_ball(dom)
    est, rings, dof = fem_lambda2(dom, alpha, h, settings)
    A = _asymmetry(dom, settings.asym_tol)
    gamma = gamma_constant(2, alpha, ball.R).gamma
    deficit = lam_ball - est.fine
    tol = settings.asym_tol
    allowance = 3.0 * est.error + gamma * (2.0 * A * tol + tol * tol)
    return StabilityReport(
        domain_id=dom.name, n=2, R=ball.R, alpha=float(alpha), eps=dom.eps,
        lambda2_ball=lam_ball, lambda2_domain=est.fine, asymmetry=A, gamma=gamma,
        deficit=deficit, margin=deficit - gamma * A * A, numerical_allowance=allowance,
        fem=est, rings=rings, dof=dof,
    )


def verify_main_inequality(dom: StarDomain2D, alpha: float, h: float, settings: FemSettings = FemSettings()) -> StabilityReport:
    """Compare ``lambda_2(B) - lambda_2(Omega)`` with ``gamma A(Omega)**2``.

    Raises
    ------
    OutOfRangeError
        Unless ``-1/R < alpha < 0`` for the equivalent radius ``R``.
    """
    ball = _check_alpha(dom, alpha)
    return _report(dom, alpha, h, settings, lambda2_ball(ball, alpha))


# -- sharpness ----------------------------------------------------------------

@dataclass
class SharpnessTable:
    alpha: float
    coeffs: dict
    rows: list[StabilityReport]
    included: list[bool]
    fitted_slope: float = math.nan
    fitted_intercept: float = math.nan
    partial: bool = False
    error: Optional[str] = None

    @property
    def eps(self) -> np.ndarray:
        return np.array([r.eps for r in self.rows])

    @property
    def deficits(self) -> np.ndarray:
        return np.array([r.deficit for r in self.rows])


def ball_reference(R: float, alpha: float, t: float) -> float:
    """``lambda_2(B_eps; alpha) = t**-2 lambda_2(B_R; t alpha)`` from the exact area ratio ``t``."""
    return lambda2_ball(BallSpec(2, R), t * alpha) / t**2


def _sharpness_row(task) -> tuple[Optional[StabilityReport], Optional[str]]:
    dom, alpha, h, settings = task
    try:
        _check_alpha(dom, alpha)
        return _report(dom, alpha, h, settings, ball_reference(dom.R, alpha, t_eps(dom))), None
    except RobinStabilityError as exc:
        return None, f"eps={dom.eps}: {exc}"


def sharpness_sweep(
    coeffs: dict,
    alpha: float,
    eps_list: Sequence[float],
    h: float,
    settings: FemSettings = FemSettings(),
    R: float = 1.0,
    sine_coeffs: Optional[dict] = None,
) -> SharpnessTable:
    """Deficit of ``Omega_eps = {r < R (1 + eps psi)}`` against its equal-area ball, per ``eps``.

    The slope of ``log(deficit)`` against ``log(eps)`` is fitted over rows
    whose deficit clears ``10 x allowance``. A FEM failure stops the sweep and
    returns the rows computed so far with ``partial=True``.
    """
    symmetric = not sine_coeffs and all(m % 2 == 0 for m in coeffs)
    doms = []
    for eps in eps_list:
        tag = "+".join(f"c{m}" for m in sorted(coeffs)) + "".join(f"+s{m}" for m in sorted(sine_coeffs or {}))
        doms.append(make_star_domain(R, eps, coeffs, symmetric, sine_coeffs, name=f"{tag}-eps{eps:g}"))
    table = SharpnessTable(float(alpha), dict(coeffs), [], [])
    for dom, (row, err) in zip(doms, parallel_map(_sharpness_row, [(d, alpha, h, settings) for d in doms])):
        if err is not None:
            table.partial, table.error = True, err
            break
        keep = row.eps > 0 and row.deficit >= NOISE_FLOOR_FACTOR * row.numerical_allowance
        if not keep:
            log.warning("excluding eps=%g from slope fit: deficit %.3e below %g x allowance %.3e",
                        row.eps, row.deficit, NOISE_FLOOR_FACTOR, row.numerical_allowance)
        table.rows.append(row)
        table.included.append(keep)
    mask = np.array(table.included, dtype=bool)
    if mask.sum() >= 2:
        slope, intercept = np.polyfit(np.log(table.eps[mask]), np.log(table.deficits[mask]), 1)
        table.fitted_slope, table.fitted_intercept = float(slope), float(intercept)
    return table


# -- Neumann limit -----------------------------------------------------------

@dataclass(frozen=True)
class LimitRow:
    alpha: float
    gamma_scaled: float  # gamma(2, alpha, R) |Omega|
    delta: float
    rel_gap: float


@dataclass
class NeumannLimitReport:
    domain_id: str
    mu2_ball: float
    mu2_domain: float
    asymmetry: float
    delta: float
    deficit: float
    bound: float  # delta |Omega|^-1 A^2
    allowance: float
    limit_rows: list[LimitRow]
    fem: Optional[RichardsonEstimate] = None

    @property
    def margin(self) -> float:
        return self.deficit - self.bound

    @property
    def inequality_holds(self) -> bool:
        return self.margin >= -self.allowance

    @property
    def converging(self) -> bool:
        """Relative gaps shrink monotonically as ``alpha -> 0-``."""
        gaps = [r.rel_gap for r in sorted(self.limit_rows, key=lambda r: r.alpha)]
        return all(b <= a for a, b in zip(gaps, gaps[1:]))

    @property
    def passed(self) -> bool:
        return self.inequality_holds and self.converging


def neumann_limit_check(
    dom: StarDomain2D, alpha_list: Sequence[float], h: float, settings: FemSettings = FemSettings()
) -> NeumannLimitReport:
    """Neumann (``alpha = 0``) form of the inequality plus the ``alpha -> 0-`` limit of ``gamma``."""
    ball = equivalent_ball(dom)
    for a in alpha_list:
        _check_alpha(dom, a)
    vol = volume(dom)
    delta = delta_constant(2)
    rows = []
    for a in alpha_list:
        g = gamma_constant(2, a, ball.R).gamma * vol
        rows.append(LimitRow(float(a), g, delta, abs(g - delta) / delta))
    est, _, _ = fem_lambda2(dom, 0.0, h, settings)
    A = _asymmetry(dom, settings.asym_tol)
    mu2_ball = lambda2_ball(ball, 0.0)
    tol = settings.asym_tol
    c = delta / vol
    return NeumannLimitReport(
        domain_id=dom.name, mu2_ball=mu2_ball, mu2_domain=est.fine, asymmetry=A, delta=delta,
        deficit=mu2_ball - est.fine, bound=c * A * A,
        allowance=3.0 * est.error + c * (2.0 * A * tol + tol * tol), limit_rows=rows, fem=est,
    )


# -- corpus -------------------------------------------------------------------

@dataclass(frozen=True)
class CorpusRow:
    domain_id: str
    alpha: float
    report: Optional[StabilityReport] = None
    error: Optional[str] = None

    @property
    def passed(self) -> bool:
        return self.report is not None and self.report.passed


@dataclass
class CorpusReport:
    rows: list[CorpusRow] = field(default_factory=list)

    @property
    def errors(self) -> list[CorpusRow]:
        return [r for r in self.rows if r.error is not None]

    @property
    def all_passed(self) -> bool:
        return bool(self.rows) and all(r.passed for r in self.rows)

    @property
    def worst_margin(self) -> float:
        margins = [r.report.margin for r in self.rows if r.report is not None]
        return min(margins) if margins else math.nan

    @property
    def exit_code(self) -> int:
        if self.errors:
            return 2
        return 0 if self.all_passed else 1


def _corpus_case(task) -> CorpusRow:
    dom, alpha, h, settings = task
    try:
        return CorpusRow(dom.name, float(alpha), report=verify_main_inequality(dom, alpha, h, settings))
    except RobinStabilityError as exc:
        return CorpusRow(dom.name, float(alpha), error=str(exc))


def run_corpus(
    corpus: Sequence, alpha_grid: Sequence[float], h: float, settings: FemSettings = FemSettings()
) -> CorpusReport:
    """``verify_main_inequality`` over ``corpus x alpha_grid``.

    ``corpus`` holds domain-file paths or :class:`StarDomain2D` values. Rows
    follow input order (domain-major); unreadable files and failed cases
    become error rows.
    """
    if not corpus:
        raise InvalidArgumentError("corpus is empty")
    report = CorpusReport()
    tasks, slots = [], []
    for item in corpus:
        if isinstance(item, StarDomain2D):
            dom = item
        else:
            try:
                dom = load_domain(item)
            except RobinStabilityError as exc:
                for a in alpha_grid:
                    slots.append(CorpusRow(Path(item).stem, float(a), error=str(exc)))
                continue
        for a in alpha_grid:
            slots.append(None)
            tasks.append((dom, a, h, settings))
    results = iter(parallel_map(_corpus_case, tasks))
    report.rows = [row if row is not None else next(results) for row in slots]
    return report


# -- plumbing -----------------------------------------------------------------

def thread_cap() -> int:
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise InvalidArgumentError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None


def parallel_map(fn: Callable, tasks: list) -> list:
    """Order-preserving map; uses worker processes when ``ROBIN_STABILITY_THREADS > 1``."""
    workers = min(thread_cap(), len(tasks))
    if workers <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, tasks))


def _num(x) -> str:
    return "" if x is None or (isinstance(x, float) and math.isnan(x)) else f"{x:.12e}"


def report_row(r: StabilityReport) -> list[str]:
    return [
        r.domain_id, str(r.n), _num(r.R), _num(r.alpha), _num(r.eps), _num(r.lambda2_ball),
        _num(r.lambda2_domain), _num(r.asymmetry), _num(r.gamma), _num(r.deficit),
        _num(r.margin), _num(r.numerical_allowance), "true" if r.passed else "false",
    ]


def error_row(domain_id: str, alpha: float) -> list[str]:
    return [domain_id, "2", "", _num(float(alpha))] + [""] * 8 + ["error"]


def write_csv(rows: Iterable, stream: TextIO) -> None:
    """Write reports (or corpus rows) with the fixed column order."""
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for row in rows:
        if isinstance(row, CorpusRow):
            w.writerow(report_row(row.report) if row.report is not None else error_row(row.domain_id, row.alpha))
        else:
            w.writerow(report_row(row))
