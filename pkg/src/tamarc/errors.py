"""Exception taxonomy shared across the package.

CLI exit codes: ValidationError -> 2, BudgetError -> 3, anything else -> 4.
"""


class ValidationError(ValueError):
    """Malformed or inconsistent user input (config keys, shapes, ranges)."""


class BudgetError(RuntimeError):
    """A guard against configurations too large for desk-scale exhaustive work."""


class PowerViolation(ValidationError):
    """A codeword or relay policy exceeded its average-power budget."""
