"""Exception hierarchy shared by the library and the command line."""


class SzegoError(Exception):
    """Base class for all errors raised by this package."""


class SymbolError(SzegoError, ValueError):
    """A rational symbol violates its invariants (pole location, coprimality, degrees)."""


class NotInVdError(SzegoError, ValueError):
    """Coefficient data is not numerically a member of the requested V(d)."""


class SpectralError(SzegoError):
    """Eigensolver failure, non-Hermitian input, or missing spectral gap."""


class IntegrationError(SzegoError, FloatingPointError):
    """Time stepping produced non-finite values.

    ``last_good_t`` holds the last time at which the state was finite.
    """

    def __init__(self, message, last_good_t):
        super().__init__(message)
        self.last_good_t = last_good_t


class TruncationError(SzegoError):
    """The requested number of Fourier modes cannot represent the state."""

    def __init__(self, message, required_modes=None):
        super().__init__(message)
        self.required_modes = required_modes


class InputError(SzegoError, ValueError):
    """Malformed input file; ``pointer`` is a JSON pointer to the offending field."""

    def __init__(self, message, pointer=""):
        super().__init__(f"{pointer or '/'}: {message}")
        self.pointer = pointer
