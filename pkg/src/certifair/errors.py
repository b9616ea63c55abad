"""Exception types shared across the package."""


class CertifairError(Exception):
    """Base class for all errors raised by this package."""


class ConfigurationError(CertifairError):
    """A schema, property, network or config description is malformed or inconsistent."""


class InputError(CertifairError):
    """A runtime input (vector, dataset, point) violates a precondition."""


class InternalError(CertifairError):
    """An internal consistency check failed (e.g. mismatched tensor shapes)."""


class ResourceError(CertifairError):
    """A configured resource cap (e.g. the partition count) was exceeded."""


class SolverError(CertifairError):
    """The LP solver stalled or produced a solution that fails verification."""
