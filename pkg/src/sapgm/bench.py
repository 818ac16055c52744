"""Benchmark harness: seeded multi-start runs, summary tables, pooled fronts,
SVG scatter plots and the decay-rate experiment.

Artifacts written by `run_benchmark` under the output directory:

* ``runs.csv``            one row per (problem, solver, seed)
* ``summary.csv``         per (problem, solver) averages
* ``front_<slug>.csv``    pooled nondominated final points, per solver
* ``front_<slug>.svg``    front scatter, one color per solver
* ``manifest.json``       full parameter record

Rows are sorted by (problem, solver, seed) before writing, so output is
deterministic regardless of worker scheduling; only the wall-time column
varies between executions.
"""

from __future__ import annotations

import csv
import json
import logging
import math
import multiprocessing
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import InsufficientDataError, InvalidParameterError
from .metrics import FrontPoint, fit_rate, merit_against_values, nondominated_filter
from .problems import ProblemSpec, eval_true, get_problem, registry, sample_start
from .solver import SolverConfig, solve, solve_baseline

__all__ = [
    "BenchConfig",
    "SummaryRow",
    "run_benchmark",
    "run_rate_experiment",
    "emit_svg_scatter",
]

logger = logging.getLogger(__name__)

SOLVER_COLORS = {"sapgm": "#d62728", "baseline": "#1f77b4"}


@dataclass
class BenchConfig:
    problems: Sequence[str] = ("all",)
    runs: int = 200
    base_seed: int = 42
    solver: str = "both"  # sapgm | baseline | both
    sigma: float = 1.9
    mu0: float = 1.0
    L0: float = 1.0
    eta: float = 2.0
    eps: float = 1e-3
    max_iter: int = 1000
    out_dir: str | Path = "results"
    parallel: int = 1

    def __post_init__(self):
        if self.runs < 1:
            raise InvalidParameterError("runs must be >= 1")
        if self.solver not in ("sapgm", "baseline", "both"):
            raise InvalidParameterError(f"unknown solver {self.solver!r}")
        if self.parallel < 1:
            raise InvalidParameterError("parallel must be >= 1")
        # delegate range checks on the numeric solver parameters
        self.solver_config()

    def solver_config(self, **overrides) -> SolverConfig:
        kw = dict(
            mu0=self.mu0,
            L0=self.L0,
            eta=self.eta,
            sigma=self.sigma,
            eps=self.eps,
            max_iter=self.max_iter,
        )
        kw.update(overrides)
        return SolverConfig(**kw)

    def problem_names(self) -> list[str]:
        keys = list(self.problems)
        if len(keys) == 1 and str(keys[0]).lower() == "all":
            return [p.name for p in registry()]
        return [get_problem(k).name for k in keys]

    def solver_names(self) -> list[str]:
        return ["sapgm", "baseline"] if self.solver == "both" else [self.solver]


@dataclass
class SummaryRow:
    problem: str
    solver: str
    avg_time_s: float
    avg_iter: float
    avg_feval: float
    converged_fraction: float


def slugify(name: str) -> str:
    return re.sub(r"[^A-Za-z0-9]+", "-", name).strip("-")


# ---------------------------------------------------------------------------
# run execution
# ---------------------------------------------------------------------------

_PROBLEM_CACHE: dict[str, ProblemSpec] = {}


def _cached_problem(name: str) -> ProblemSpec:
    if name not in _PROBLEM_CACHE:
        _PROBLEM_CACHE[name] = get_problem(name)
    return _PROBLEM_CACHE[name]


def _execute(problem: str, solver: str, seed: int, cfg_kw: dict) -> dict:
    p = _cached_problem(problem)
    x0 = sample_start(p, seed)
    cfg = SolverConfig(**cfg_kw)
    run = solve(p, x0, cfg) if solver == "sapgm" else solve_baseline(p, x0, cfg)
    return {
        "problem": problem,
        "solver": solver,
        "seed": seed,
        "status": run.status,
        "iters": run.iterations,
        "fevals": run.fevals,
        "time_s": run.wall_time,
        "x": run.final_x,
        "F": run.final_F,
    }


def _execute_star(args) -> dict:
    return _execute(*args)


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def run_benchmark(cfg: BenchConfig) -> Path:
    """Execute the full benchmark grid and write all artifacts.

    Run i of every solver uses seed base_seed + i, so solvers see the same
    start points.  Returns the artifact directory.
    """
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    problems = cfg.problem_names()
    solvers = cfg.solver_names()
    cfg_kw = dict(
        mu0=cfg.mu0, L0=cfg.L0, eta=cfg.eta, sigma=cfg.sigma, eps=cfg.eps, max_iter=cfg.max_iter
    )

    tasks = [
        (prob, solver, cfg.base_seed + i, cfg_kw)
        for prob in problems
        for solver in solvers
        for i in range(cfg.runs)
    ]
    if cfg.parallel > 1:
        with multiprocessing.Pool(cfg.parallel) as pool:
            rows = list(pool.imap_unordered(_execute_star, tasks, chunksize=8))
    else:
        rows = [_execute(*t) for t in tasks]
    rows.sort(key=lambda r: (r["problem"], r["solver"], r["seed"]))

    n = _cached_problem(problems[0]).n
    m = _cached_problem(problems[0]).m
    x_cols = [f"final_x{j}" for j in range(n)]
    f_cols = [f"final_F{j}" for j in range(m)]
    with (out / "runs.csv").open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["problem", "solver", "seed", "status", "iters", "fevals", "time_s"] + x_cols + f_cols)
        for r in rows:
            w.writerow(
                [r["problem"], r["solver"], r["seed"], r["status"], r["iters"], r["fevals"], _fmt(r["time_s"])]
                + [_fmt(float(v)) for v in r["x"]]
                + [_fmt(float(v)) for v in r["F"]]
            )

    summary = summarize(rows)
    with (out / "summary.csv").open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["problem", "solver", "avg_time_s", "avg_iter", "avg_feval", "converged_fraction"])
        for s in summary:
            w.writerow(
                [s.problem, s.solver, _fmt(s.avg_time_s), _fmt(s.avg_iter), _fmt(s.avg_feval), _fmt(s.converged_fraction)]
            )

    for prob in problems:
        p = _cached_problem(prob)
        fronts: dict[str, list[FrontPoint]] = {}
        for solver in solvers:
            pts = [
                FrontPoint(r["x"], r["F"])
                for r in rows
                if r["problem"] == prob and r["solver"] == solver
            ]
            fronts[solver] = nondominated_filter(pts)
        slug = slugify(prob)
        with (out / f"front_{slug}.csv").open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["solver"] + [f"x{j}" for j in range(p.n)] + [f"F{j}" for j in range(p.m)])
            for solver in solvers:
                for pt in fronts[solver]:
                    w.writerow([solver] + [_fmt(float(v)) for v in pt.x] + [_fmt(float(v)) for v in pt.F])
        emit_svg_scatter(fronts, out / f"front_{slug}.svg", title=prob)

    manifest = {
        "kind": "benchmark",
        "problems": problems,
        "solvers": solvers,
        "runs": cfg.runs,
        "base_seed": cfg.base_seed,
        "parameters": cfg_kw,
        "parallel": cfg.parallel,
        "files": sorted(f.name for f in out.iterdir() if f.is_file() and f.name != "manifest.json"),
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return out


def summarize(rows: list[dict]) -> list[SummaryRow]:
    keys = sorted({(r["problem"], r["solver"]) for r in rows})
    out = []
    for prob, solver in keys:
        grp = [r for r in rows if r["problem"] == prob and r["solver"] == solver]
        out.append(
            SummaryRow(
                problem=prob,
                solver=solver,
                avg_time_s=float(np.mean([r["time_s"] for r in grp])),
                avg_iter=float(np.mean([r["iters"] for r in grp])),
                avg_feval=float(np.mean([r["fevals"] for r in grp])),
                converged_fraction=float(np.mean([r["status"] == "Converged" for r in grp])),
            )
        )
    return out


# ---------------------------------------------------------------------------
# rate experiment
# ---------------------------------------------------------------------------

RATE_ITERS = 2000
RATE_FIT_RANGE = (20, 1000)
_REFERENCE_RUNS = 50


def reference_front(p: ProblemSpec, cfg: BenchConfig, runs: int = _REFERENCE_RUNS) -> list[FrontPoint]:
    """Pooled nondominated final points from converged default runs."""
    sc = cfg.solver_config()
    pts = []
    for i in range(runs):
        run = solve(p, sample_start(p, cfg.base_seed + i), sc)
        pts.append(FrontPoint(run.final_x, run.final_F))
    return nondominated_filter(pts)


def merit_series_for_run(p: ProblemSpec, trace, ref: Sequence[FrontPoint]) -> list[tuple[int, float]]:
    ref_F = np.array([z.F for z in ref])
    out = []
    for rec in trace:
        out.append((rec.k + 1, merit_against_values(eval_true(p, rec.x), ref_F)))
    return out


def run_rate_experiment(
    problem: str, sigmas: Sequence[float], cfg: BenchConfig, iters: int = RATE_ITERS
) -> Path:
    """Merit decay vs sigma: fixed-iteration runs with the stopping rule off.

    Writes one (k, merit) series CSV per sigma plus fitted log-log slopes.
    """
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if not sigmas:
        logger.warning("rate experiment: empty sigma list, nothing to do")
        return out
    for s in sigmas:
        if not 0.0 < s < 2.0:
            raise InvalidParameterError(f"sigma must lie in (0, 2), got {s}")

    p = get_problem(problem)
    ref = reference_front(p, cfg)
    slug = slugify(p.name)
    x0 = sample_start(p, cfg.base_seed)
    k_lo, k_hi = RATE_FIT_RANGE
    slopes = {}
    series_files = []
    for s in sigmas:
        # eps ~ 0 disables the stopping rule: the run uses all `iters` iterations
        sc = cfg.solver_config(sigma=s, eps=5e-324, max_iter=iters, record_trace=True)
        run = solve(p, x0, sc)
        series = merit_series_for_run(p, run.trace, ref)
        fname = f"rate_{slug}_sigma{s:g}.csv"
        with (out / fname).open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["k", "merit"])
            for k, v in series:
                w.writerow([k, _fmt(v)])
        series_files.append(fname)
        try:
            fit = fit_rate(series, k_lo, min(k_hi, iters))
            slopes[f"{s:g}"] = {"slope": fit.slope, "intercept": fit.intercept, "residual": fit.residual}
        except InsufficientDataError as exc:
            slopes[f"{s:g}"] = {"error": str(exc)}

    manifest = {
        "kind": "rate",
        "problem": p.name,
        "sigmas": [float(s) for s in sigmas],
        "iterations": iters,
        "fit_range": [k_lo, k_hi],
        "reference_front_size": len(ref),
        "series_files": series_files,
        "slopes": slopes,
    }
    (out / f"rate_{slug}_slopes.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return out


# ---------------------------------------------------------------------------
# SVG output
# ---------------------------------------------------------------------------

_SVG_W, _SVG_H = 640, 480
_MARGIN = 60


def _ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / n
    mag = 10 ** math.floor(math.log10(raw))
    step = min(s for s in (mag, 2 * mag, 5 * mag, 10 * mag) if s >= raw)
    start = math.ceil(lo / step) * step
    ticks = []
    v = start
    while v <= hi + 1e-12 * step:
        ticks.append(round(v, 12))
        v += step
    return ticks


def emit_svg_scatter(
    fronts: dict[str, Sequence[FrontPoint]], path: str | Path, title: str = ""
) -> Path:
    """Standalone SVG scatter of fronts in objective space, one color per solver.

    Only the first two objectives are drawn; a note is added when more exist.
    """
    path = Path(path)
    pts = [(solver, pt) for solver, front in fronts.items() for pt in front]
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_SVG_W}" height="{_SVG_H}" '
        f'viewBox="0 0 {_SVG_W} {_SVG_H}">',
        f'<rect width="{_SVG_W}" height="{_SVG_H}" fill="white"/>',
        f'<text x="{_SVG_W / 2}" y="24" text-anchor="middle" font-size="16">{title}</text>',
    ]
    if not pts:
        parts.append(
            f'<text x="{_SVG_W / 2}" y="{_SVG_H / 2}" text-anchor="middle" font-size="14">no data</text>'
        )
        parts.append("</svg>")
        path.write_text("\n".join(parts) + "\n")
        return path

    n_obj = len(pts[0][1].F)
    xs = np.array([pt.F[0] for _, pt in pts])
    ys = np.array([pt.F[1] for _, pt in pts])
    pad = lambda lo, hi: ((hi - lo) or 1.0) * 0.05
    x_lo, x_hi = xs.min(), xs.max()
    y_lo, y_hi = ys.min(), ys.max()
    x_lo, x_hi = x_lo - pad(x_lo, x_hi), x_hi + pad(x_lo, x_hi)
    y_lo, y_hi = y_lo - pad(y_lo, y_hi), y_hi + pad(y_lo, y_hi)
    px = lambda v: _MARGIN + (v - x_lo) / (x_hi - x_lo) * (_SVG_W - 2 * _MARGIN)
    py = lambda v: _SVG_H - _MARGIN - (v - y_lo) / (y_hi - y_lo) * (_SVG_H - 2 * _MARGIN)

    ax_y = _SVG_H - _MARGIN
    parts.append(
        f'<line x1="{_MARGIN}" y1="{ax_y}" x2="{_SVG_W - _MARGIN}" y2="{ax_y}" stroke="black"/>'
    )
    parts.append(f'<line x1="{_MARGIN}" y1="{_MARGIN}" x2="{_MARGIN}" y2="{ax_y}" stroke="black"/>')
    for tv in _ticks(x_lo, x_hi):
        if x_lo <= tv <= x_hi:
            parts.append(f'<line x1="{px(tv):.2f}" y1="{ax_y}" x2="{px(tv):.2f}" y2="{ax_y + 5}" stroke="black"/>')
            parts.append(
                f'<text x="{px(tv):.2f}" y="{ax_y + 18}" text-anchor="middle" font-size="11">{tv:g}</text>'
            )
    for tv in _ticks(y_lo, y_hi):
        if y_lo <= tv <= y_hi:
            parts.append(f'<line x1="{_MARGIN - 5}" y1="{py(tv):.2f}" x2="{_MARGIN}" y2="{py(tv):.2f}" stroke="black"/>')
            parts.append(
                f'<text x="{_MARGIN - 8}" y="{py(tv):.2f}" text-anchor="end" font-size="11" dominant-baseline="middle">{tv:g}</text>'
            )
    parts.append(
        f'<text x="{_SVG_W / 2}" y="{_SVG_H - 16}" text-anchor="middle" font-size="12">F1</text>'
    )
    parts.append(
        f'<text x="18" y="{_SVG_H / 2}" text-anchor="middle" font-size="12" '
        f'transform="rotate(-90 18 {_SVG_H / 2})">F2</text>'
    )
    if n_obj > 2:
        parts.append(
            f'<text x="{_SVG_W - _MARGIN}" y="40" text-anchor="end" font-size="11">'
            f"projection of first two of {n_obj} objectives</text>"
        )

    for idx, (solver, front) in enumerate(fronts.items()):
        color = SOLVER_COLORS.get(solver, "#7f7f7f")
        for pt in front:
            parts.append(
                f'<circle class="marker" cx="{px(pt.F[0]):.2f}" cy="{py(pt.F[1]):.2f}" r="2.5" '
                f'fill="{color}" fill-opacity="0.7"/>'
            )
        ly = 44 + 18 * idx
        parts.append(f'<rect x="{_SVG_W - 170}" y="{ly - 9}" width="12" height="12" fill="{color}"/>')
        parts.append(f'<text x="{_SVG_W - 152}" y="{ly + 2}" font-size="12">{solver}</text>')
    parts.append("</svg>")
    path.write_text("\n".join(parts) + "\n")
    return path
