"""Exception hierarchy and warning categories.

Every library error derives from UmforgeError so the CLI can map failures to
exit code 1 uniformly; usage errors stay with argparse (exit code 2).
"""


class UmforgeError(Exception):
    """Base class for all umforge errors."""


class ParameterError(UmforgeError, ValueError):
    """A parameter is outside its documented domain."""


class DimensionMismatchError(UmforgeError, ValueError):
    """Two rasters that must share a shape do not."""


class ValidationError(UmforgeError, ValueError):
    """A value object violates one of its invariants."""


class SeriesTooShortError(UmforgeError, ValueError):
    """Fewer than four eligible slices remain after lung-fraction filtering."""


class InsufficientSamplesError(UmforgeError, ValueError):
    """A feature set has too few rows to fit a Gaussian summary."""


class InsufficientDataError(UmforgeError, ValueError):
    """Too few non-zero paired differences for a signed-rank test."""


class IncompleteGridError(UmforgeError, ValueError):
    """An evaluation grid is missing (scale, task) cells.

    The missing pairs are kept on the exception for machine consumption.
    """

    def __init__(self, missing, message=None):
        self.missing = sorted(missing)
        if message is None:
            cells = ", ".join(f"({s}, {t})" for s, t in self.missing)
            message = f"missing feature cells: {cells}"
        super().__init__(message)


class NumericalError(UmforgeError, ArithmeticError):
    """A numerical routine produced a non-finite or invalid result.

    `diagnostics` is a dict of intermediate quantities for debugging.
    """

    def __init__(self, message, diagnostics=None):
        self.diagnostics = dict(diagnostics or {})
        super().__init__(message)


class UmforgeWarning(UserWarning):
    """Base class for flags raised by umforge operations."""


class MetricFlagWarning(UmforgeWarning):
    """A metric was computed under a degenerate or regularized condition."""


class MaskEditWarning(UmforgeWarning):
    """A mask edit had no effect (for example an empty clipped footprint)."""


class LungMaskFallbackWarning(UmforgeWarning):
    """lung_fraction used the intensity heuristic instead of a real mask."""
