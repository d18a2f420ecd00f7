"""Command-line entry point.

Exit codes: 0 all checks pass, 1 a mathematical check failed, 2 invalid
input or configuration (also used when a case could not be computed).
CSV goes to stdout (or ``--csv``); a rounded summary goes to stderr.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass, field, fields
from importlib import resources
from pathlib import Path
from typing import Optional, Sequence

from .ball_spectrum import BallSpec, ball_mode, lambda1_ball
from .errors import RobinStabilityError
from .experiments import (
    FemSettings,
    neumann_limit_check,
    run_corpus,
    sharpness_sweep,
    write_csv,
)
from .geometry import load_domain
from .mesh import dump_mesh, triangulate
from .stability_constants import delta_constant, gamma_constant

SLOPE_RANGE = (1.8, 2.2)

COMMANDS = ("ball-eig", "constants", "verify", "sharpness", "neumann-limit", "mesh-dump")

DEFAULTS = {
    "n": 2,
    "R": 1.0,
    "alpha": None,  # per command, see _ALPHA_DEFAULTS
    "eps": [0.02, 0.03, 0.05, 0.07, 0.1],
    "mode": {4: 1.0},
    "sine": {},
    "h": 0.02,
    "order": 1,
    "solver_tol": 1e-8,
    "asym_tol": 1e-7,
    "domain": [],
    "corpus": False,
    "csv": None,
    "plot": None,
    "out": None,
}
_ALPHA_DEFAULTS = {
    "ball-eig": [-0.5],
    "constants": [-0.5],
    "verify": [-0.2, -0.5, -0.8],
    "sharpness": [-0.5],
    "neumann-limit": [-0.1, -0.01, -0.001, -0.0001],
    "mesh-dump": [],
}


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    n: int = 2
    R: float = 1.0
    alpha: list = field(default_factory=list)
    eps: list = field(default_factory=list)
    mode: dict = field(default_factory=dict)
    sine: dict = field(default_factory=dict)
    h: float = 0.02
    order: int = 1
    solver_tol: float = 1e-8
    asym_tol: float = 1e-7
    domain: list = field(default_factory=list)
    corpus: bool = False
    csv: Optional[str] = None
    plot: Optional[str] = None
    out: Optional[str] = None

    def settings(self) -> FemSettings:
        return FemSettings(order=self.order, solver_tol=self.solver_tol, asym_tol=self.asym_tol)

    def validate(self) -> None:
        finite = lambda xs: all(isinstance(x, (int, float)) and math.isfinite(x) for x in xs)
        if int(self.n) != self.n or self.n < 2:
            raise UsageError(f"--n must be an integer >= 2, got {self.n}")
        if not (finite([self.R]) and self.R > 0):
            raise UsageError(f"--R must be positive, got {self.R}")
        if not finite(self.alpha):
            raise UsageError("--alpha values must be finite numbers")
        if not finite([self.h]) or self.h <= 0:
            raise UsageError(f"--h must be positive, got {self.h}")
        if self.order not in (1, 2):
            raise UsageError(f"--order must be 1 or 2, got {self.order}")
        if not (self.solver_tol > 0 and self.asym_tol > 0):
            raise UsageError("tolerances must be positive")
        cmd = self.command
        if cmd in ("verify", "sharpness", "neumann-limit") and any(a >= 0 for a in self.alpha):
            raise UsageError("--alpha values must be negative")
        if cmd == "verify" and not (self.domain or self.corpus):
            raise UsageError("verify needs --domain or --corpus")
        if cmd in ("neumann-limit", "mesh-dump") and len(self.domain) != 1:
            raise UsageError(f"{cmd} needs exactly one --domain")
        if cmd == "mesh-dump" and not self.out:
            raise UsageError("mesh-dump needs --out")
        if cmd == "sharpness":
            if len(self.alpha) != 1:
                raise UsageError("sharpness takes a single --alpha")
            if not self.eps or not finite(self.eps) or any(e <= 0 for e in self.eps):
                raise UsageError("--eps must be a list of positive numbers")
            if not self.mode and not self.sine:
                raise UsageError("sharpness needs --mode")
            if self.h >= self.R / 4:
                raise UsageError(f"--h must be below R/4 = {self.R / 4}")


# -- parsing -----------------------------------------------------------------

def _floats(text: str) -> list[float]:
    try:
        return [float(t) for t in str(text).split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _modes(text: str) -> dict[int, float]:
    """``4`` -> {4: 1}; ``4:1,8:-0.5`` -> {4: 1, 8: -0.5}."""
    out = {}
    try:
        for item in str(text).split(","):
            m, _, c = item.partition(":")
            out[int(m)] = float(c) if c else 1.0
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected modes like '4' or '4:1,8:-0.5', got {text!r}") from None
    return out


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="robin-stability",
        description="Robin second-eigenvalue stability: ball spectra, constants and FEM verification.",
        epilog="Precedence: command-line flags > --config JSON > defaults.",
    )
    sub = p.add_subparsers(dest="command", metavar="COMMAND")
    sub.required = True

    def common(sp, alpha_default):
        sp.add_argument("--config", help="JSON file with option values (keys as flag names, '-' -> '_')")
        sp.add_argument("--alpha", type=_floats, help=f"comma-separated Robin parameters (default {alpha_default})")
        sp.add_argument("--csv", help="write CSV here instead of stdout")

    def fem(sp):
        sp.add_argument("--h", type=float, help=f"target mesh size; the error estimate also uses h/2 (default {DEFAULTS['h']})")
        sp.add_argument("--order", type=int, choices=(1, 2), help=f"element order (default {DEFAULTS['order']})")
        sp.add_argument("--solver-tol", type=float, help=f"eigen-residual tolerance (default {DEFAULTS['solver_tol']})")
        sp.add_argument("--asym-tol", type=float, help=f"Fraenkel asymmetry tolerance (default {DEFAULTS['asym_tol']})")

    sp = sub.add_parser("ball-eig", help="analytic lambda_1, lambda_2 of a ball")
    common(sp, "-0.5")
    sp.add_argument("--n", type=int, help="dimension (default 2)")
    sp.add_argument("--R", type=float, help="radius (default 1)")

    sp = sub.add_parser("constants", help="eta, gamma and delta")
    common(sp, "-0.5")
    sp.add_argument("--n", type=int, help="dimension (default 2)")
    sp.add_argument("--R", type=float, help="radius (default 1)")

    sp = sub.add_parser("verify", help="check the stability inequality on domain files")
    common(sp, "-0.2,-0.5,-0.8")
    fem(sp)
    sp.add_argument("--domain", action="append", help="domain file (repeatable)")
    sp.add_argument("--corpus", action="store_true", default=None, help="include the shipped 10-domain corpus")

    sp = sub.add_parser("sharpness", help="deficit vs eps for R (1 + eps psi)")
    common(sp, "-0.5")
    fem(sp)
    sp.add_argument("--mode", type=_modes, help="cosine modes, e.g. 4 or 4:1,8:-0.5 (default 4)")
    sp.add_argument("--sine", type=_modes, help="sine modes, same syntax (default none)")
    sp.add_argument("--eps", type=_floats, help="comma-separated amplitudes (default 0.02,0.03,0.05,0.07,0.1)")
    sp.add_argument("--R", type=float, help="base radius (default 1)")
    sp.add_argument("--plot", help="write a log-log SVG of deficit vs eps with the fitted line")

    sp = sub.add_parser("neumann-limit", help="Neumann form of the inequality and the alpha -> 0- limit")
    common(sp, "-0.1,-0.01,-0.001,-0.0001")
    fem(sp)
    sp.add_argument("--domain", action="append", help="domain file")

    sp = sub.add_parser("mesh-dump", help="write the triangulation of a domain as text")
    sp.add_argument("--config", help="JSON config file")
    sp.add_argument("--domain", action="append", help="domain file")
    sp.add_argument("--h", type=float, help="target mesh size (default 0.02)")
    sp.add_argument("--out", help="output path")
    return p


def resolve_config(ns: argparse.Namespace) -> RunConfig:
    file_cfg = {}
    if getattr(ns, "config", None):
        try:
            file_cfg = json.loads(Path(ns.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {ns.config}: {exc}") from None
        if not isinstance(file_cfg, dict):
            raise UsageError("config file must hold a JSON object")
        file_cfg = {k.replace("-", "_"): v for k, v in file_cfg.items()}
    known = {f.name for f in fields(RunConfig)} - {"command"}
    unknown = set(file_cfg) - known
    if unknown:
        raise UsageError(f"unknown config keys: {sorted(unknown)}")
    cfg = RunConfig(command=ns.command)
    for name in known:
        flag = getattr(ns, name, None)
        if flag is not None:
            value = flag
        elif name in file_cfg:
            value = file_cfg[name]
            try:
                if name in ("alpha", "eps") and not isinstance(value, list):
                    value = _floats(value)
                if name in ("mode", "sine"):
                    value = _modes(value) if not isinstance(value, dict) else {int(k): float(v) for k, v in value.items()}
                if name == "domain" and isinstance(value, str):
                    value = [value]
            except (argparse.ArgumentTypeError, ValueError) as exc:
                raise UsageError(f"config key {name!r}: {exc}") from None
        elif name == "alpha":
            value = list(_ALPHA_DEFAULTS[ns.command])
        else:
            value = DEFAULTS[name]
            value = dict(value) if isinstance(value, dict) else list(value) if isinstance(value, list) else value
        setattr(cfg, name, value)
    cfg.validate()
    return cfg


# -- output ------------------------------------------------------------------

def _fmt(x) -> str:
    return f"{x:.12e}"


def _emit_csv(cfg: RunConfig, text: str) -> None:
    if cfg.csv:
        Path(cfg.csv).write_text(text)
    else:
        sys.stdout.write(text)


def _table(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _say(msg: str) -> None:
    print(msg, file=sys.stderr)


def sharpness_svg(eps, deficits, slope: float, intercept: float, width: int = 480, height: int = 360) -> str:
    """Log-log scatter of ``deficit`` against ``eps`` with the fitted line, as bare SVG."""
    lx = [math.log10(e) for e in eps]
    ly = [math.log10(d) for d in deficits]
    fit = lambda x: (slope * x * math.log(10) + intercept) / math.log(10)
    x0, x1 = min(lx), max(lx)
    ys = ly + [fit(x0), fit(x1)]
    y0, y1 = min(ys), max(ys)
    padx, pady = 0.05 * (x1 - x0 or 1), 0.05 * (y1 - y0 or 1)
    x0, x1, y0, y1 = x0 - padx, x1 + padx, y0 - pady, y1 + pady
    m = 50
    sx = lambda x: m + (x - x0) / (x1 - x0) * (width - 2 * m)
    sy = lambda y: height - m - (y - y0) / (y1 - y0) * (height - 2 * m)
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
        f'<rect x="{m}" y="{m}" width="{width - 2 * m}" height="{height - 2 * m}" fill="none" stroke="black"/>',
        f'<path d="M {sx(min(lx)):.2f} {sy(fit(min(lx))):.2f} L {sx(max(lx)):.2f} {sy(fit(max(lx))):.2f}" stroke="steelblue" fill="none"/>',
    ]
    parts += [f'<circle cx="{sx(a):.2f}" cy="{sy(b):.2f}" r="3" fill="black"/>' for a, b in zip(lx, ly)]
    parts += [
        f'<text x="{width / 2:.0f}" y="{height - 15}" text-anchor="middle" font-size="12">log10 eps</text>',
        f'<text x="15" y="{height / 2:.0f}" font-size="12" transform="rotate(-90 15 {height / 2:.0f})" text-anchor="middle">log10 deficit</text>',
        f'<text x="{m + 5}" y="{m + 15}" font-size="12">slope {slope:.6g}</text>',
        "</svg>",
    ]
    return "\n".join(parts) + "\n"


# -- commands ----------------------------------------------------------------

def _ball_eig(cfg: RunConfig) -> int:
    ball = BallSpec(cfg.n, cfg.R)
    rows = []
    for a in cfg.alpha:
        mode = ball_mode(ball, a)
        lam1 = lambda1_ball(ball, a)
        rows.append([str(cfg.n), _fmt(cfg.R), _fmt(a), _fmt(lam1), _fmt(mode.lam), _fmt(mode.k)])
        _say(f"alpha={a:.6g}: lambda1 = {lam1:.6g}, lambda2 = {mode.lam:.6g}")
    _emit_csv(cfg, _table(["n", "R", "alpha", "lambda1", "lambda2", "k"], rows))
    return 0


def _constants(cfg: RunConfig) -> int:
    delta = delta_constant(cfg.n)
    rows = []
    for a in cfg.alpha:
        c = gamma_constant(cfg.n, a, cfg.R)
        rows.append([str(cfg.n), _fmt(cfg.R), _fmt(a), _fmt(c.eta), _fmt(c.gamma), _fmt(delta)])
        _say(f"alpha={a:.6g}: eta = {c.eta:.6g}, gamma = {c.gamma:.6g}, delta = {delta:.6g}")
    _emit_csv(cfg, _table(["n", "R", "alpha", "eta", "gamma", "delta"], rows))
    return 0


def shipped_corpus() -> list[Path]:
    root = resources.files("robin_stability") / "corpus"
    return sorted(Path(str(p)) for p in root.iterdir() if p.name.endswith(".txt"))


def _verify(cfg: RunConfig) -> int:
    paths = list(cfg.domain) + (shipped_corpus() if cfg.corpus else [])
    report = run_corpus(paths, cfg.alpha, cfg.h, cfg.settings())
    buf = io.StringIO()
    write_csv(report.rows, buf)
    _emit_csv(cfg, buf.getvalue())
    for row in report.rows:
        if row.error:
            _say(f"ERROR {row.domain_id} alpha={row.alpha:.6g}: {row.error}")
        else:
            r = row.report
            _say(f"{'PASS' if r.passed else 'FAIL'} {r.domain_id} alpha={r.alpha:.6g} "
                 f"margin={r.margin:.6g} allowance={r.numerical_allowance:.6g}")
    _say(f"{len(report.rows)} cases, worst margin {report.worst_margin:.6g}, exit {report.exit_code}")
    return report.exit_code


def _sharpness(cfg: RunConfig) -> int:
    table = sharpness_sweep(cfg.mode, cfg.alpha[0], cfg.eps, cfg.h, cfg.settings(), R=cfg.R, sine_coeffs=cfg.sine or None)
    buf = io.StringIO()
    write_csv(table.rows, buf)
    _emit_csv(cfg, buf.getvalue())
    for r, keep in zip(table.rows, table.included):
        _say(f"eps={r.eps:.6g} deficit={r.deficit:.6g} A={r.asymmetry:.6g} {'' if keep else '(excluded from fit)'}")
    _say(f"fitted slope {table.fitted_slope:.6g}")
    if table.partial:
        _say(f"sweep aborted: {table.error}")
        return 2
    if cfg.plot and sum(table.included) >= 2:
        kept = [r for r, k in zip(table.rows, table.included) if k]
        Path(cfg.plot).write_text(
            sharpness_svg([r.eps for r in kept], [r.deficit for r in kept], table.fitted_slope, table.fitted_intercept)
        )
    ok = (
        SLOPE_RANGE[0] <= table.fitted_slope <= SLOPE_RANGE[1]
        and all(r.deficit > 0 for r, k in zip(table.rows, table.included) if k)
        and all(r.passed for r in table.rows)
    )
    return 0 if ok else 1


def _neumann(cfg: RunConfig) -> int:
    dom = load_domain(cfg.domain[0])
    rep = neumann_limit_check(dom, cfg.alpha, cfg.h, cfg.settings())
    header = ["domain_id", "alpha", "mu2_ball", "mu2_domain", "asymmetry", "deficit", "bound", "allowance",
              "gamma_times_volume", "delta", "rel_gap", "pass"]
    rows = [[rep.domain_id, _fmt(0.0), _fmt(rep.mu2_ball), _fmt(rep.mu2_domain), _fmt(rep.asymmetry),
             _fmt(rep.deficit), _fmt(rep.bound), _fmt(rep.allowance), "", _fmt(rep.delta), "",
             "true" if rep.inequality_holds else "false"]]
    for r in rep.limit_rows:
        rows.append([rep.domain_id, _fmt(r.alpha)] + [""] * 6 + [_fmt(r.gamma_scaled), _fmt(r.delta), _fmt(r.rel_gap), ""])
    _emit_csv(cfg, _table(header, rows))
    _say(f"mu2(B) - mu2(Omega) = {rep.deficit:.6g} vs bound {rep.bound:.6g} (allowance {rep.allowance:.6g})")
    _say(f"gamma |Omega| vs delta: gaps {[float(f'{r.rel_gap:.6g}') for r in rep.limit_rows]}, converging={rep.converging}")
    return 0 if rep.passed else 1


def _mesh_dump(cfg: RunConfig) -> int:
    mesh = triangulate(load_domain(cfg.domain[0]), cfg.h)
    dump_mesh(mesh, cfg.out)
    _say(f"{mesh.n_vertices} vertices, {len(mesh.triangles)} triangles, h = {mesh.h:.6g} -> {cfg.out}")
    return 0


_HANDLERS = {
    "ball-eig": _ball_eig,
    "constants": _constants,
    "verify": _verify,
    "sharpness": _sharpness,
    "neumann-limit": _neumann,
    "mesh-dump": _mesh_dump,
}


def _attach_negative_lists(argv: Sequence[str]) -> list[str]:
    # argparse reads "-0.5,-0.2" as an option; glue such values to their flag
    out = []
    args = list(argv)
    i = 0
    while i < len(args):
        tok = args[i]
        if tok in _LIST_FLAGS and i + 1 < len(args) and args[i + 1].startswith("-"):
            try:
                _floats(args[i + 1])
            except argparse.ArgumentTypeError:
                pass
            else:
                out.append(f"{tok}={args[i + 1]}")
                i += 2
                continue
        out.append(tok)
        i += 1
    return out


_LIST_FLAGS = ("--alpha", "--eps", "--mode", "--sine")


def run(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    argv = _attach_negative_lists(sys.argv[1:] if argv is None else argv)
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:  # argparse already printed usage
        return int(exc.code or 0)
    try:
        cfg = resolve_config(ns)
        return _HANDLERS[cfg.command](cfg)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        _say(f"error: {exc}")
        return 2
    except RobinStabilityError as exc:
        _say(f"error: {exc}")
        return 2


def main() -> None:
    sys.exit(run())
