"""Exception hierarchy shared across the package.

Everything derives from VerifierError so callers (and the CLI) can catch
one base class and map it to a diagnostic exit.
"""


class VerifierError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(VerifierError):
    """Malformed input file or non-finite numeric entry."""


class ExpressionSyntaxError(ParseError):
    """Bad token or unbalanced parenthesis in a dynamics expression."""


class UnknownVariable(ParseError):
    """Expression references a variable outside x1..xp."""


class ArityError(VerifierError):
    """Number of dynamics components does not match the state dimension."""


class UnknownBuiltin(VerifierError):
    """Requested builtin dynamics name does not exist."""


class DimensionError(VerifierError):
    """Inconsistent matrix/vector shapes or point dimension."""


class EvalError(VerifierError):
    """Expression evaluation hit a singularity (non-finite result)."""


class LPError(VerifierError):
    """Linear-program solver failed."""


class Unbounded(VerifierError):
    """Polytope is unbounded; bounding-box facets are missing."""


class NumericalError(VerifierError):
    """Ill-conditioned geometric computation (e.g. vertex intersection)."""


class BudgetExceeded(VerifierError):
    """Region enumeration exceeded the configured region cap."""


class BudgetError(VerifierError):
    """Optimizer sampling budget below the minimum for the dimension."""


class NoFeasibleSample(VerifierError):
    """All optimizer samples were infeasible and no usable interior point."""


class ZeroGradient(VerifierError):
    """Rotation requested for a (numerically) zero gradient."""


class LimitExceeded(VerifierError):
    """Arrangement too large for intersection-poset construction."""


class ConfigError(VerifierError):
    """Invalid run configuration value."""
