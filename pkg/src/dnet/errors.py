"""Shared exception types and the process exit codes used by the CLI."""


class ValidationError(ValueError):
    """Invalid input, malformed file, or a broken structural invariant."""


class StructureError(ValidationError):
    """A matrix or graph lacks required structure (e.g. not irreducible)."""


class DegenerateMeasureError(ValidationError):
    """A path measure cannot be formed (zero total variation)."""


class ResourceLimitError(RuntimeError):
    """An enumeration or sampling guard was exceeded."""


class BoundViolationError(RuntimeError):
    """A certified inequality failed on observed data."""


EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_RESOURCE = 3
EXIT_BOUND_VIOLATION = 4
