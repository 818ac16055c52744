"""Per-iteration min-max subproblem, solved through its concave dual.

The primal is the strongly convex model

    phi(z) = max_i [ <grad_i, z - y> + g(z) + c_i ] + (ell / 2) ||z - y||^2

with per-component offsets c_i = f_i(y, mu) - (f_i(x, mu) + g(x)).  Dualizing
the max over the unit simplex gives, for weights lam,

    q(lam) = min_z  <G^T lam, z - y> + g(z) + (ell / 2) ||z - y||^2 + lam . c

whose inner minimum is a single prox step.  q is concave; it is maximized by
projected gradient ascent with a backtracking step, which is cheap because m
is tiny.  Strong convexity makes the primal minimizer unique, so the duality
gap and the KKT residual certify the solution.

All g_i are required to be the identical shared term; distinct g_i would
break the closed-form inner step and are rejected at ProblemSpec
construction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError, InvalidParameterError
from .problems import FevalCounter, GKind, ProblemSpec, eval_g, eval_smooth

__all__ = [
    "SubproblemInput",
    "SubproblemSolution",
    "prox_g",
    "project_simplex",
    "dual_inner",
    "solve_subproblem",
    "kkt_residual",
    "complementarity_violation",
]

DEFAULT_TOL = 1e-10
DEFAULT_MAX_INNER = 500


@dataclass(frozen=True)
class SubproblemInput:
    x: np.ndarray  # reference point for the offsets
    y: np.ndarray  # expansion point
    mu: float
    ell: float  # prox weight, L * mu^{-1}
    problem: ProblemSpec

    def __post_init__(self):
        if not self.mu > 0.0:
            raise InvalidParameterError("mu must be positive")
        if not self.ell > 0.0:
            raise InvalidParameterError("ell must be positive")


@dataclass
class SubproblemSolution:
    z: np.ndarray
    lam: np.ndarray
    theta: float  # primal optimal value
    gap: float
    kkt_residual: float
    inner_iterations: int
    converged: bool


def prox_g(v: np.ndarray, tau: float, g_kind: GKind, n: int | None = None) -> np.ndarray:
    """argmin_z tau * g(z) + 0.5 ||z - v||^2.

    Soft-thresholding at tau / n for the scaled l1 term, identity for g = 0.
    """
    if not tau > 0.0:
        raise InvalidParameterError("tau must be positive")
    v = np.asarray(v, dtype=float)
    if g_kind is GKind.ZERO:
        return v.copy()
    thr = tau / (n if n is not None else v.size)
    return np.sign(v) * np.maximum(np.abs(v) - thr, 0.0)


def project_simplex(w: np.ndarray) -> np.ndarray:
    """Euclidean projection onto the unit simplex (sort-and-threshold)."""
    w = np.asarray(w, dtype=float)
    if w.size == 0:
        raise InvalidInputError("cannot project an empty vector")
    u = np.sort(w)[::-1]
    cs = np.cumsum(u) - 1.0
    rho = np.nonzero(u > cs / np.arange(1, w.size + 1))[0][-1]
    tau = cs[rho] / (rho + 1.0)
    return np.maximum(w - tau, 0.0)


def _g_value(z: np.ndarray, g_kind: GKind, n: int) -> float:
    if g_kind is GKind.SCALED_L1:
        return float(np.abs(z).sum()) / n
    return 0.0


class _Core:
    """Dual ascent working on raw arrays; built once per (y, mu, grads)."""

    __slots__ = ("y", "G", "c", "ell", "g_kind", "n")

    def __init__(self, y, G, c, ell, g_kind):
        self.y = y
        self.G = G
        self.c = c
        self.ell = ell
        self.g_kind = g_kind
        self.n = y.size

    def inner(self, lam):
        """Prox step for fixed weights; returns (z, component gaps d, dual value)."""
        d_dir = self.G.T @ lam
        z = prox_g(self.y - d_dir / self.ell, 1.0 / self.ell, self.g_kind, self.n)
        dz = z - self.y
        gz = _g_value(z, self.g_kind, self.n)
        comp = self.G @ dz + self.c + gz  # per-component bracket values
        quad = 0.5 * self.ell * float(dz @ dz)
        return z, comp, float(lam @ comp) + quad, quad

    def primal(self, comp, quad):
        return float(comp.max()) + quad


def _solve_core(core: _Core, lam0: np.ndarray, tol: float, max_inner: int):
    lam = project_simplex(lam0)
    z, comp, dual, quad = core.inner(lam)
    if lam.size == 1:
        return z, lam, core.primal(comp, quad), core.primal(comp, quad) - dual, 1
    # dual curvature along simplex directions is at most smax(G_centered)^2 / ell;
    # its reciprocal is the natural ascent step
    Gc = core.G - core.G.mean(axis=0)
    curv = float(np.linalg.norm(Gc, 2)) ** 2 / core.ell
    step0 = 1.0 / max(curv, 1e-300)
    step = step0
    iters = 0
    gap = core.primal(comp, quad) - dual
    while gap > tol and iters < max_inner:
        iters += 1
        # comp is the dual (super)gradient; backtrack on the ascent step
        accepted = False
        for _ in range(60):
            lam_try = project_simplex(lam + step * comp)
            move = lam_try - lam
            msq = float(move @ move)
            if msq <= 1e-28:
                if step >= step0:
                    break  # projected fixed point at a safe step: optimal
                step = min(step * 4.0, step0)
                continue
            z2, comp2, dual2, quad2 = core.inner(lam_try)
            # steps at or below 1/curv ascend in exact arithmetic, so take
            # them even when the increase falls below rounding noise
            if dual2 >= dual + 0.5 * msq / step or step <= step0:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            break
        lam, z, comp, dual, quad = lam_try, z2, comp2, dual2, quad2
        step = min(step * 2.0, 1e6 * step0)
        gap = core.primal(comp, quad) - dual
    return z, lam, core.primal(comp, quad), gap, iters + 1


def _build_core(inp: SubproblemInput, counter: FevalCounter | None = None) -> _Core:
    p = inp.problem
    vals_y, G = eval_smooth(p, inp.y, inp.mu, counter)
    vals_x, _ = eval_smooth(p, inp.x, inp.mu, counter)
    c = vals_y - (vals_x + eval_g(p, inp.x))
    return _Core(np.asarray(inp.y, float), G, c, inp.ell, p.g_kind)


def dual_inner(lam: np.ndarray, inp: SubproblemInput) -> tuple[np.ndarray, float]:
    """Inner minimizer z(lam) and the dual value q(lam)."""
    lam = np.asarray(lam, dtype=float)
    if abs(lam.sum() - 1.0) > 1e-8 or lam.min() < -1e-8:
        raise InvalidInputError("weights must lie on the unit simplex")
    core = _build_core(inp)
    z, _, dual, _ = core.inner(lam)
    return z, dual


def solve_subproblem(
    inp: SubproblemInput,
    tol: float = DEFAULT_TOL,
    max_inner: int = DEFAULT_MAX_INNER,
    counter: FevalCounter | None = None,
    lam0: np.ndarray | None = None,
) -> SubproblemSolution:
    """Solve the min-max model to duality gap <= tol.

    If the gap is still above tol after max_inner ascent steps the best
    iterate is returned with converged=False; the caller decides.
    """
    if not tol > 0.0:
        raise InvalidParameterError("tol must be positive")
    core = _build_core(inp, counter)
    m = core.G.shape[0]
    if lam0 is None:
        lam0 = np.full(m, 1.0 / m)
    z, lam, theta, gap, iters = _solve_core(core, np.asarray(lam0, float), tol, max_inner)
    sol = SubproblemSolution(z, lam, theta, gap, 0.0, iters, gap <= tol)
    sol.kkt_residual = _kkt_from_core(core, sol)
    return sol


def _kkt_from_core(core: _Core, sol: SubproblemSolution) -> float:
    d = core.G.T @ sol.lam + core.ell * (sol.z - core.y)
    # xi must equal -d for stationarity; clamp it into the subdifferential of g
    xi = -d
    if core.g_kind is GKind.SCALED_L1:
        w = 1.0 / core.n
        hi = np.where(sol.z > 0, w, np.where(sol.z < 0, -w, w))
        lo = np.where(sol.z > 0, w, np.where(sol.z < 0, -w, -w))
        xi = np.clip(xi, lo, hi)
    elif core.g_kind is GKind.ZERO:
        xi = np.zeros_like(d)
    return float(np.linalg.norm(d + xi))


def kkt_residual(sol: SubproblemSolution, inp: SubproblemInput) -> float:
    """Stationarity residual || sum_i lam_i grad_i + xi + ell (z - y) ||.

    xi is the element of the subdifferential of g at z closest to exact
    stationarity.
    """
    return _kkt_from_core(_build_core(inp), sol)


def complementarity_violation(sol: SubproblemSolution, inp: SubproblemInput, tol: float = 1e-8) -> float:
    """Largest weight attached to a component outside the active set."""
    core = _build_core(inp)
    _, comp, _, _ = core.inner(sol.lam)
    inactive = comp < comp.max() - tol
    return float(sol.lam[inactive].max()) if inactive.any() else 0.0
