"""Exception types shared across the package."""


class InvariantViolation(RuntimeError):
    """A runtime invariant the algorithm guarantees by construction failed.

    Carries enough context to debug the offending step; the CLI converts
    this into a diagnostic dump and exit code 3.
    """

    def __init__(self, message, **context):
        super().__init__(message)
        self.context = dict(context)


class SchemaError(ValueError):
    """A config file, table file, or CSV bundle violates its documented schema."""


class NumericalError(RuntimeError):
    """A numeric routine failed to reach its certified tolerance."""
