"""Exception types shared across the toolkit."""


class RstError(Exception):
    """Base class for all toolkit errors."""


class DomainError(RstError, ValueError):
    """A point or parameter lies outside the admissible domain."""


class ValidationError(RstError, ValueError):
    """Malformed input data (knot vectors, patches, meshes)."""


class ConfigError(RstError, ValueError):
    """Invalid or incomplete configuration."""


class SolverError(RstError, RuntimeError):
    """Linear or boundary-value solve failed.

    ``dof`` names the first offending unknown when it is known.
    """

    def __init__(self, message, dof=None, defect=None):
        super().__init__(message)
        self.dof = dof
        self.defect = defect
