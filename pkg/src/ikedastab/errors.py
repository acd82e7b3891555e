"""Exception types shared across the package."""


class IkedaStabError(Exception):
    """Base class for all domain errors raised by this package."""


class CutoffMismatch(IkedaStabError):
    """Two states (or a state and an operator) carry different Fock cutoffs."""


class TailTooHeavy(IkedaStabError):
    """Truncated tail population of a coherent state exceeds the safe bound."""


class UnknownMode(IkedaStabError):
    """A mode label does not exist on the given two-mode state."""


class DegenerateWindow(IkedaStabError):
    """Phase-space window has zero area or fewer than 2x2 grid points."""


class LeakExceeded(IkedaStabError):
    """Population has leaked into the top Fock levels beyond the threshold."""


class NonUnitary(IkedaStabError):
    """Internal construction check of a block unitary failed."""


class DeltaOutOfRange(IkedaStabError):
    """Stabilization offset delta outside the open interval (0, pi/2)."""


class NonFiniteError(IkedaStabError):
    """An iterate overflowed or became NaN (runaway parameters).

    Carries the failing iteration index and, when raised by ``iterate``,
    the partial trajectory computed so far.
    """

    def __init__(self, message, index=None, trajectory=None):
        super().__init__(message)
        self.index = index
        self.trajectory = trajectory


class NoConvergence(IkedaStabError):
    """Newton iteration did not reach the residual tolerance.

    ``best`` holds the best fixed-point candidate found, for diagnostics.
    """

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class ZeroProbability(IkedaStabError):
    """Requested measurement outcome has (numerically) vanishing probability."""


class RevivalRequired(IkedaStabError):
    """Loop operation requested without a fractional-revival Kerr sum."""


class CutoffWarning(UserWarning):
    """Cutoff below the recommended sizing rule for the requested amplitude."""
