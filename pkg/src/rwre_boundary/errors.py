"""Exception types shared across the package.

The CLI maps these onto process exit codes: validation failures exit 2,
resource-budget violations exit 3, numerical non-convergence exits 4.
"""


class ValidationError(ValueError):
    """Input or configuration violates a documented precondition."""


class ResourceBudgetError(RuntimeError):
    """A computation would exceed the configured memory/state budget."""


class ConvergenceError(RuntimeError):
    """An iterative solver failed to reach its tolerance."""
