"""Solution-quality metrics: finite-set merit approximation, the per-iteration
gap diagnostic, nondominated filtering and empirical decay-rate fits.

The true Pareto merit takes a supremum over all of R^n, which is not
computable; `merit_u0_approx` replaces it with a max over a finite reference
set and therefore under-reports (it is monotone nondecreasing as the
reference set grows).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import InsufficientDataError, InvalidInputError, InvalidParameterError
from .problems import ProblemSpec, eval_g, eval_smooth, eval_true

__all__ = [
    "FrontPoint",
    "RateFit",
    "merit_u0_approx",
    "merit_against_values",
    "w_k_diagnostic",
    "nondominated_filter",
    "nondominated_mask",
    "fit_rate",
]

DOMINANCE_SLACK = 1e-9


@dataclass(frozen=True)
class FrontPoint:
    x: np.ndarray
    F: np.ndarray  # exact nonsmooth objective values at x

    @classmethod
    def from_x(cls, p: ProblemSpec, x: Sequence[float]) -> "FrontPoint":
        x = np.asarray(x, float)
        return cls(x, eval_true(p, x))


@dataclass(frozen=True)
class RateFit:
    slope: float
    intercept: float
    k_range: tuple[int, int]
    residual: float


def merit_against_values(Fx: np.ndarray, ref_F: np.ndarray) -> float:
    """max over reference rows of min_i (Fx_i - ref_i)."""
    return float(np.min(Fx[None, :] - ref_F, axis=1).max())


def merit_u0_approx(x: Sequence[float], Z: Sequence[FrontPoint], p: ProblemSpec) -> float:
    """Finite-reference-set lower bound of the Pareto merit at x."""
    if len(Z) == 0:
        raise InvalidInputError("reference set must be nonempty")
    Fx = eval_true(p, x)
    ref = np.array([z.F for z in Z])
    return merit_against_values(Fx, ref)


def w_k_diagnostic(
    x_k: Sequence[float], mu_k: float, z: Sequence[float], p: ProblemSpec, kappa: float
) -> float:
    """min_i [ smoothed F_i(x_k, mu_k) - F_i(z) ] + kappa * mu_k."""
    if not mu_k > 0.0:
        raise InvalidParameterError("mu_k must be positive")
    vals, _ = eval_smooth(p, x_k, mu_k)
    F_smooth = vals + eval_g(p, x_k)
    return float((F_smooth - eval_true(p, z)).min()) + kappa * mu_k


def nondominated_mask(F: np.ndarray, slack: float = DOMINANCE_SLACK) -> np.ndarray:
    """Boolean mask of rows not dominated by any other row.

    Row q dominates row p when F[q] <= F[p] + slack everywhere and
    F[q] < F[p] - slack somewhere.
    """
    F = np.asarray(F, float)
    n = F.shape[0]
    keep = np.ones(n, dtype=bool)
    for i in range(n):
        le = np.all(F <= F[i] + slack, axis=1)
        lt = np.any(F < F[i] - slack, axis=1)
        if np.any(le & lt):
            keep[i] = False
    return keep


def nondominated_filter(points: Sequence[FrontPoint]) -> list[FrontPoint]:
    """Drop dominated points; input order is preserved."""
    if not points:
        return []
    F = np.array([pt.F for pt in points])
    keep = nondominated_mask(F)
    return [pt for pt, k in zip(points, keep) if k]


def fit_rate(
    merit_series: Sequence[tuple[int, float]], k_lo: int, k_hi: int
) -> RateFit:
    """Least-squares line on (log k, log value) over k in [k_lo, k_hi].

    Only strictly positive values enter the fit; fewer than 5 usable points
    raises InsufficientDataError.
    """
    if not k_lo < k_hi:
        raise InvalidParameterError("need k_lo < k_hi")
    ks = []
    vs = []
    for k, v in merit_series:
        if k_lo <= k <= k_hi and v > 0.0 and k > 0:
            ks.append(k)
            vs.append(v)
    if len(ks) < 5:
        raise InsufficientDataError(
            f"only {len(ks)} positive points in [{k_lo}, {k_hi}]; need at least 5"
        )
    lk = np.log(np.asarray(ks, float))
    lv = np.log(np.asarray(vs, float))
    slope, intercept = np.polyfit(lk, lv, 1)
    resid = float(np.sqrt(np.mean((slope * lk + intercept - lv) ** 2)))
    return RateFit(float(slope), float(intercept), (k_lo, k_hi), resid)
