"""Exception types shared across the package.

Invalid arguments raise the builtin ``ValueError`` everywhere; the classes
here cover the two failure modes that need to be told apart by callers
(and by the CLI exit-code mapping).
"""


class NumericalFailure(RuntimeError):
    """A solve produced non-finite values and cannot continue."""


class ExtractionError(RuntimeError):
    """Motion-profile extraction lost the calibration trace.

    ``frame`` is the index of the first frame whose trace could not be
    located.
    """

    def __init__(self, frame: int, message: str | None = None):
        self.frame = frame
        super().__init__(message or f"calibration trace lost at frame {frame}")
