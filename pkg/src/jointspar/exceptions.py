"""Exception types raised by jointspar."""


class InvalidArgumentError(ValueError):
    """Bad shape, bad value or contract violation in the caller's input."""


class RankDeficiencyError(InvalidArgumentError):
    """A matrix that must have full column rank does not.

    Attributes
    ----------
    ratio : float
        The offending ``sigma_min / sigma_max`` ratio.
    """

    def __init__(self, ratio, threshold=None, message=None):
        self.ratio = float(ratio)
        self.threshold = threshold
        if message is None:
            message = f"matrix is numerically rank deficient (sigma_min/sigma_max = {self.ratio:.3e}"
            if threshold is not None:
                message += f" < {threshold:.1e}"
            message += ")"
        super().__init__(message)


class DegenerateRankError(InvalidArgumentError):
    """The output matrix has numerical rank zero, so there is nothing to reduce."""


class SizeLimitError(InvalidArgumentError):
    """An exhaustive search was requested on an instance above its size cap."""


class NumericFailure(ArithmeticError):
    """A solver produced a non-finite value or could not make progress at all.

    ``diagnostics`` carries per-start details when raised by a multistart run.
    """

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or []
