"""Exception types shared across the package."""


class InvalidParameterError(ValueError):
    """A numeric parameter is outside its admissible range."""


class InvalidInputError(ValueError):
    """An input array has the wrong shape or violates a precondition."""


class UnsupportedAtomError(TypeError):
    """An expression tree contains a node type the composer does not know."""


class DivergingLipschitzError(RuntimeError):
    """Backtracking inflated the Lipschitz estimate past any plausible bound."""


class InsufficientDataError(ValueError):
    """Not enough usable data points for a fit."""
