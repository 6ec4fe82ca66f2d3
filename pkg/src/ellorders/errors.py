"""Exception types shared across the package.

The CLI maps these onto exit codes: InputError and ParseError become usage
errors (2), ResourceError and NetworkError become resource errors (3), and
everything else that signals a failed verification exits 1.
"""


class InputError(ValueError):
    """A caller passed something outside an operation's stated domain."""


class ParseError(InputError):
    """Bad textual input.  ``position`` is the 0-based offending index."""

    def __init__(self, message, position=None):
        super().__init__(message)
        self.position = position


class SingularModelError(InputError):
    """Coefficients with vanishing discriminant where a curve is required."""


class UnsupportedPrimeError(InputError):
    """A prime outside the supported range or splitting behaviour."""


class BadReductionError(UnsupportedPrimeError):
    """A residue field computation was asked for at a prime of bad reduction."""


class ResourceError(RuntimeError):
    """A scan or search would exceed a configured ceiling."""


class CacheMissError(ResourceError):
    """Offline mode was requested but the label is not in the local cache."""


class NetworkError(RuntimeError):
    """A retriable failure while talking to the curve database."""


class NotFoundError(LookupError):
    """The curve database has no entry for the requested label."""


class DataIntegrityError(RuntimeError):
    """Internal cross-check failed; indicates a bug or corrupted cache."""
