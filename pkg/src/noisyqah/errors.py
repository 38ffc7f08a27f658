"""Exception types shared across the package.

Every error raised by this package derives from NoisyQahError so callers
can catch the whole family at once.  Physics-signal errors (NoDbis,
EmptyBis, Defective, ...) are ordinary results of valid inputs and are
routinely caught by the pipeline; they are exceptions only because they
interrupt the normal return path.
"""


class NoisyQahError(Exception):
    """Base class for all package errors."""


class GapClosed(NoisyQahError):
    """Band touching: the Bloch vector vanishes somewhere, Chern number undefined."""


class EmptyBis(NoisyQahError):
    """hz has no sign change on the grid; no band-inversion surface exists."""


class InvalidTau(NoisyQahError):
    """Non-positive Trotter step requested."""


class Defective(NoisyQahError):
    """Liouvillian eigenvectors coalesce (exceptional point); spectral
    decomposition is numerically meaningless."""


class FitDiverged(NoisyQahError):
    """Mode fit failed to reach the residual threshold."""


class DegenerateData(NoisyQahError):
    """Trajectory variance below the configured noise floor; a fit would
    only chase statistical noise."""


class OpenContour(NoisyQahError):
    """A level-set contour ran into the grid boundary instead of closing."""


class NoDbis(NoisyQahError):
    """No zero crossing of the located texture component on the grid."""


class DegenerateField(NoisyQahError):
    """Dynamical field undefined on too large a fraction of the curve."""


class Masked(NoisyQahError):
    """Winding requested on a field with undefined points."""


class ZeroVector(NoisyQahError):
    """Polarization requested for a (numerically) vanishing mode vector."""


class SingularOnLoop(NoisyQahError):
    """The planar Liouvillian polarization vanishes on a loop sample; the
    winding integrand is undefined there."""


class ConfigInvalid(NoisyQahError):
    """Run configuration failed validation.

    Carries a list of (field, message) pairs.
    """

    def __init__(self, problems):
        self.problems = list(problems)
        msg = "; ".join(f"{field}: {message}" for field, message in self.problems)
        super().__init__(msg or "invalid configuration")
