"""Exception types raised by scarlab.

Every failure mode the library reports deliberately gets its own class so
callers (and the CLI exit-code mapping) can tell them apart.
"""


class ScarlabError(Exception):
    """Base class for all scarlab errors."""


class SizeError(ScarlabError, ValueError):
    """Chain length or matrix dimension outside the supported range."""


class SectorError(ScarlabError, ValueError):
    """Operation requested on the wrong Hilbert-space sector."""


class StateMismatchError(ScarlabError, ValueError):
    """A named state pattern cannot be realized on the given basis."""


class BasisMismatchError(ScarlabError, ValueError):
    """Operands live in different bases."""


class ConfigNotInSectorError(ScarlabError, KeyError):
    """Configuration lookup missed: the bit pattern is not in the sector."""


class ParameterError(ScarlabError, ValueError):
    """Invalid numerical parameter (negative disorder strength, bad grid, ...)."""


class WindowError(ScarlabError, ValueError):
    """A search window excludes every data point."""


class ConvergenceError(ScarlabError, RuntimeError):
    """An iterative routine failed to reach its tolerance.

    Carries the best residual achieved so the caller can judge how far off
    the run ended up.
    """

    def __init__(self, message: str, residual: float | None = None):
        if residual is not None:
            message = f"{message} (achieved residual {residual:.3e})"
        super().__init__(message)
        self.residual = residual
