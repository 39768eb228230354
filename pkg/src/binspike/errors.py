"""Exception hierarchy.

Every error raised by the library derives from :class:`BinspikeError`.  The
subclasses also inherit from the closest builtin so callers that only know
about ``ValueError``/``IndexError`` keep working.
"""


class BinspikeError(Exception):
    pass


class ParameterError(BinspikeError, ValueError):
    pass


class ShapeError(BinspikeError, ValueError):
    pass


class SizeError(BinspikeError, ValueError):
    """A requested object would exceed a memory/size guard."""


class CodewordIndexError(BinspikeError, IndexError):
    pass


class FormatError(BinspikeError, ValueError):
    """A codebook or data file is malformed."""


class ModelMismatchError(BinspikeError, ValueError):
    pass


class DegenerateCodebookError(BinspikeError, ValueError):
    """The codebook has colliding entries where a collision-free one is needed."""


class NotInCodebookError(BinspikeError, ValueError):
    """Exact decoding found no codebook value within tolerance.

    ``block`` is the block index when raised from a whole-train decode.
    """

    def __init__(self, message, value=None, block=None):
        super().__init__(message)
        self.value = value
        self.block = block


class NotApplicableError(BinspikeError, ValueError):
    pass


class InfeasibleError(BinspikeError, ValueError):
    pass


class ConvergenceError(BinspikeError, RuntimeError):
    """An iterative solver hit its iteration cap.

    ``diagnostics`` holds the last iterate statistics.
    """

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class EstimationError(BinspikeError, ValueError):
    pass


class ConfigError(BinspikeError, ValueError):
    pass
