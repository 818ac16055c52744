"""Shared helpers: custom problem construction and brute-force oracles.

The oracles here deliberately re-derive everything from eval_smooth /
eval_g instead of reusing solver internals, so they can catch bugs in the
code under test.
"""
from __future__ import annotations

import numpy as np

from sapgm.problems import GKind, ProblemSpec
from sapgm.smoothing import compose_surrogate


def build_problem(name, exprs, g_kind, lower, upper, cert_pad=5.0):
    """Assemble a ProblemSpec from expression trees.

    Lipschitz/kappa constants are certified on a box padded beyond the
    start-sampling box so iterates that leave it stay covered.
    """
    lower = np.asarray(lower, float)
    upper = np.asarray(upper, float)
    pad = 0.5 * (upper - lower) + cert_pad
    box = (lower - pad, upper + pad)
    parts = tuple(compose_surrogate(e, box=box) for e in exprs)
    return ProblemSpec(
        name=name,
        n=lower.size,
        m=len(parts),
        smooth_parts=parts,
        g_kind=g_kind,
        lower=lower,
        upper=upper,
    )


def _grid_pass(fun, c, h, npts):
    xs = np.linspace(c[0] - h, c[0] + h, npts)
    ys = np.linspace(c[1] - h, c[1] + h, npts)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    Z = np.column_stack([X.ravel(), Y.ravel()])
    return Z, fun(Z)


def _refine(fun, start, h, npts, tol, max_passes=15):
    c = np.asarray(start, float)
    best_val = np.inf
    best = c
    for _ in range(max_passes):
        Z, vals = _grid_pass(fun, c, h, npts)
        i = int(np.argmin(vals))
        if vals[i] < best_val:
            best_val, best = float(vals[i]), Z[i]
        spacing = 2.0 * h / (npts - 1)
        moved = float(np.max(np.abs(Z[i] - c)))
        c = Z[i]
        if spacing <= tol and moved <= tol:
            break
        # keep the window wide relative to the last move: near a kink
        # valley the true minimizer sits several spacings from the grid
        # argmin (only sqrt-scale localization holds there)
        h = max(4.0 * moved, 20.0 * spacing)
    return best, best_val


def _pattern_polish(fun, start, step, tol=1e-7, extra_dirs=()):
    # compass search with step halving; oblique moves let it slide along
    # kink valleys that defeat axis-aligned grids.  Callers can add exact
    # valley directions (e.g. orthogonal to a gradient difference), since
    # a steep kink stalls any quantized direction set.
    ang = np.arange(16) * (np.pi / 8)
    dirs = np.column_stack([np.cos(ang), np.sin(ang)])
    for d in extra_dirs:
        d = np.asarray(d, float)
        nrm = np.linalg.norm(d)
        if nrm > 0:
            dirs = np.vstack([dirs, d / nrm, -d / nrm])
    c = np.asarray(start, float)
    val = float(fun(c)[0])
    while step > tol:
        cand = c + step * dirs
        vals = fun(cand)
        i = int(np.argmin(vals))
        if vals[i] < val - 1e-15:
            c, val = cand[i], float(vals[i])
        else:
            step *= 0.5
    return c, val


def grid_argmin_2d(
    fun, center, halfwidth, npts=400, tol=2e-5, branch=5, refine_npts=120, extra_dirs=()
):
    """Brute-force minimizer of fun(Z), fun mapping (N, 2) arrays to N values.

    One coarse npts x npts pass, then independent refinements seeded from
    the best well-separated coarse candidates.  Branching matters because a
    narrow diagonal valley aliases on an axis-aligned grid: the global
    coarse argmin can lie in a side basin whose refinement never crosses
    back to the true one.
    """
    Z, vals = _grid_pass(fun, np.asarray(center, float), float(halfwidth), npts)
    spacing = 2.0 * float(halfwidth) / (npts - 1)
    seeds = []
    for i in np.argsort(vals):
        if all(np.max(np.abs(Z[i] - s)) > 5.0 * spacing for s in seeds):
            seeds.append(Z[i])
        if len(seeds) == branch:
            break
    results = [_refine(fun, s, 10.0 * spacing, refine_npts, tol) for s in seeds]
    polished = [_pattern_polish(fun, z, 4.0 * tol, extra_dirs=extra_dirs) for z, _ in results]
    return min(polished, key=lambda r: r[1])[0]


def subproblem_objective(inp):
    """Independent evaluator of the outer min-max objective.

    phi(z) = max_i [ <grad_i(y), z - y> + g(z) + f_i(y) - (f_i(x) + g(x)) ]
             + (ell/2) ||z - y||^2
    with all smooth parts evaluated at the input's mu.  Returns a function
    of an (N, n) batch of candidate points.
    """
    from sapgm.problems import eval_g, eval_smooth

    p = inp.problem
    vals_y, grads_y = eval_smooth(p, inp.y, inp.mu)
    vals_x, _ = eval_smooth(p, inp.x, inp.mu)
    offs = vals_y - (vals_x + eval_g(p, inp.x))

    def phi(Z):
        Z = np.atleast_2d(np.asarray(Z, float))
        dz = Z - inp.y
        bracket = dz @ grads_y.T + offs
        if p.g_kind is GKind.SCALED_L1:
            gz = np.abs(Z).sum(axis=1) / p.n
        else:
            gz = np.zeros(len(Z))
        return bracket.max(axis=1) + gz + 0.5 * inp.ell * (dz**2).sum(axis=1)

    return phi
