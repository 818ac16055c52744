"""Benchmark problem registry.

Six two-objective instances (BK1, CB3&LQ, CB3&MF1, CR&MF2, JOS1, SP1), each
with two smooth(ed) components plus a shared nonsmooth term
g(x) = (1/n) * ||x||_1.  Each objective is F_i(x) = f_i(x) + g(x).

Problem specs are immutable and shareable; the function-evaluation tally is
kept in a per-run `FevalCounter` owned by the caller, never on the spec.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import InvalidInputError, InvalidParameterError
from .smoothing import (
    Abs,
    Affine,
    Exp,
    Expr,
    Max2,
    MaxList,
    Plus,
    Quartic,
    Scale,
    SmoothSurrogate,
    Square,
    Sum,
    compose_surrogate,
)

__all__ = [
    "GKind",
    "FevalCounter",
    "ProblemSpec",
    "registry",
    "get_problem",
    "eval_true",
    "eval_smooth",
    "eval_g",
    "sample_start",
]


class GKind(enum.Enum):
    SCALED_L1 = "scaled_l1"  # g(x) = (1/n) ||x||_1
    ZERO = "zero"


class FevalCounter:
    """Per-run tally of smooth-part evaluations."""

    __slots__ = ("count",)

    def __init__(self) -> None:
        self.count = 0


@dataclass(frozen=True)
class ProblemSpec:
    name: str
    n: int
    m: int
    smooth_parts: tuple[SmoothSurrogate, ...]
    g_kind: GKind
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        if self.m < 2:
            raise InvalidParameterError("need at least two objectives")
        if len(self.smooth_parts) != self.m:
            raise InvalidInputError("smooth_parts length must equal m")
        if not np.all(self.lower < self.upper):
            raise InvalidParameterError("lower bound must be strictly below upper bound")
        for s in self.smooth_parts:
            if s.n != self.n:
                raise InvalidInputError("surrogate dimension does not match problem")

    @property
    def kappa_max(self) -> float:
        return max(s.constants.kappa for s in self.smooth_parts)

    @property
    def lip_bound(self) -> float:
        return max(s.constants.lip_factor for s in self.smooth_parts)


def _check_dim(p: ProblemSpec, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (p.n,):
        raise InvalidInputError(f"{p.name}: expected point of dimension {p.n}, got shape {x.shape}")
    return x


def eval_g(p: ProblemSpec, x: Sequence[float]) -> float:
    """Shared nonsmooth term: (1/n) ||x||_1 or 0."""
    x = _check_dim(p, np.asarray(x, float))
    if p.g_kind is GKind.SCALED_L1:
        return float(np.abs(x).sum()) / p.n
    return 0.0


def eval_true(p: ProblemSpec, x: Sequence[float]) -> np.ndarray:
    """Exact nonsmooth objective vector (F_1(x), ..., F_m(x))."""
    x = _check_dim(p, np.asarray(x, float))
    g = eval_g(p, x)
    return np.array([s.true_eval(x) + g for s in p.smooth_parts])


def eval_smooth(
    p: ProblemSpec, x: Sequence[float], mu: float, counter: FevalCounter | None = None
) -> tuple[np.ndarray, np.ndarray]:
    """Smoothed components and their Jacobian at (x, mu); g is excluded.

    Counts as one function evaluation on `counter`.
    """
    x = _check_dim(p, np.asarray(x, float))
    if not mu > 0.0:
        raise InvalidParameterError(f"mu must be positive, got {mu}")
    values = np.empty(p.m)
    jac = np.empty((p.m, p.n))
    for i, s in enumerate(p.smooth_parts):
        values[i], jac[i] = s.eval(x, mu)
    if counter is not None:
        counter.count += 1
    return values, jac


def sample_start(p: ProblemSpec, seed: int) -> np.ndarray:
    """Deterministic uniform draw from the start box."""
    rng = np.random.default_rng(seed)
    return rng.uniform(p.lower, p.upper)


# ---------------------------------------------------------------------------
# instance construction
# ---------------------------------------------------------------------------


def _x(i: int, n: int = 2, shift: float = 0.0, sign: float = 1.0) -> Affine:
    w = np.zeros(n)
    w[i] = sign
    return Affine(w, shift)


def _const(c: float, n: int = 2) -> Affine:
    return Affine(np.zeros(n), c)


def _cb3() -> Expr:
    # max{ x1^4 + x2^2, (2 - x1)^2 + (2 - x2)^2, 2 e^{x2 - x1} }
    return MaxList(
        [
            Sum([Quartic(_x(0)), Square(_x(1))]),
            Sum([Square(Affine([-1.0, 0.0], 2.0)), Square(Affine([0.0, -1.0], 2.0))]),
            Scale(2.0, Exp(Affine([-1.0, 1.0], 0.0))),
        ]
    )


def _unit_ball_gap() -> Expr:
    # x1^2 + x2^2 - 1
    return Sum([Square(_x(0)), Square(_x(1)), _const(-1.0)])


def _build(name: str, exprs: list[Expr], lower, upper) -> ProblemSpec:
    lower = np.asarray(lower, float)
    upper = np.asarray(upper, float)
    # certify Lipschitz factors over a widened box; iterates may leave the
    # start box, the widening keeps the diagnostic bound honest in practice
    margin = 0.5 * (upper - lower) + 5.0
    box = (lower - margin, upper + margin)
    parts = tuple(compose_surrogate(e, box) for e in exprs)
    return ProblemSpec(name, 2, len(exprs), parts, GKind.SCALED_L1, lower, upper)


def registry() -> list[ProblemSpec]:
    """The six benchmark instances, in table order (1-based index = position + 1)."""
    bk1 = _build(
        "BK1",
        [
            Sum([Square(_x(0)), Square(_x(1))]),
            Sum([Square(_x(0, shift=-5.0)), Square(_x(1, shift=-5.0))]),
        ],
        (-5.0, -5.0),
        (10.0, 10.0),
    )
    cb3_lq = _build(
        "CB3&LQ",
        [
            _cb3(),
            Max2(
                Affine([-1.0, -1.0], 0.0),
                Sum([Affine([-1.0, -1.0], -1.0), Square(_x(0)), Square(_x(1))]),
            ),
        ],
        (1.5, 1.5),
        (2.0, 2.0),
    )
    cb3_mf1 = _build(
        "CB3&MF1",
        [
            _cb3(),
            Sum([Affine([-1.0, 0.0], 0.0), Scale(20.0, Plus(_unit_ball_gap()))]),
        ],
        (0.0, 0.0),
        (1.0, 1.0),
    )
    cr_mf2 = _build(
        "CR&MF2",
        [
            Max2(
                Sum([Square(_x(0)), Square(_x(1, shift=-1.0)), Affine([0.0, 1.0], -1.0)]),
                Sum(
                    [
                        Scale(-1.0, Square(_x(0))),
                        Scale(-1.0, Square(_x(1, shift=-1.0))),
                        Affine([0.0, 1.0], 1.0),
                    ]
                ),
            ),
            Sum(
                [
                    Affine([-1.0, 0.0], 0.0),
                    Scale(2.0, _unit_ball_gap()),
                    Scale(1.75, Abs(_unit_ball_gap())),
                ]
            ),
        ],
        (1.5, 1.5),
        (2.0, 2.0),
    )
    jos1 = _build(
        "JOS1",
        [
            Scale(0.5, Sum([Square(_x(0)), Square(_x(1))])),
            Scale(0.5, Sum([Square(_x(0, shift=-2.0)), Square(_x(1, shift=-2.0))])),
        ],
        (-5.0, -5.0),
        (5.0, 5.0),
    )
    sp1 = _build(
        "SP1",
        [
            Sum([Square(_x(0, shift=-1.0)), Square(Affine([1.0, -1.0], 0.0))]),
            Sum([Square(_x(1, shift=-3.0)), Square(Affine([1.0, -1.0], 0.0))]),
        ],
        (2.0, -2.0),
        (3.0, 3.0),
    )
    return [bk1, cb3_lq, cb3_mf1, cr_mf2, jos1, sp1]


def get_problem(key: str | int) -> ProblemSpec:
    """Look up a problem by name (case-insensitive) or 1-based table index."""
    probs = registry()
    if isinstance(key, int) or (isinstance(key, str) and key.isdigit()):
        idx = int(key)
        if not 1 <= idx <= len(probs):
            raise InvalidInputError(f"problem index out of range: {key}")
        return probs[idx - 1]
    for p in probs:
        if p.name.lower() == str(key).lower():
            return p
    raise InvalidInputError(f"unknown problem: {key!r}")
