"""Exception hierarchy shared across the package.

Every error carries a machine-readable ``kind`` and the exit code the CLI
maps it to (0 success, 1 internal/numerical failure, 2 usage error).
"""

from __future__ import annotations


class ShufregError(Exception):
    """Base class for package errors."""

    kind = "internal"
    exit_code = 1


class InvalidArgumentError(ShufregError, ValueError):
    """A caller-supplied value is outside the documented domain."""

    kind = "invalid-argument"
    exit_code = 2


class DimensionError(InvalidArgumentError):
    """Mismatched or infeasible array dimensions (e.g. d > n)."""

    kind = "dimension"


class SingularDesignError(ShufregError):
    """Design matrix is numerically rank deficient."""

    kind = "singular-design"


class BudgetError(ShufregError):
    """Requested work exceeds a configured enumeration/search budget."""

    kind = "budget"


class DomainError(ShufregError, ValueError):
    """A precondition of a bound or identity does not hold for these inputs."""

    kind = "domain"
