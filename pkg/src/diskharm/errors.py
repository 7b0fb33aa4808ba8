"""Exception hierarchy shared by the library and the CLI.

Exit-code mapping used by the CLI: 2 usage, 3 invalid input mesh,
4 numeric/geometry failure.
"""


class DiskharmError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class UsageError(DiskharmError):
    """Bad arguments or configuration."""

    exit_code = 2


class InvalidMeshError(DiskharmError):
    """The input mesh violates a structural precondition."""

    exit_code = 3


class GeometryError(DiskharmError):
    """A numeric or geometric operation failed (non-convergence, singular
    system, self-intersection, ...)."""

    exit_code = 4
