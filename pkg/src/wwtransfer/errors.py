"""Exception and warning types shared across the package."""


class WWTransferError(Exception):
    """Base class for all package errors."""


class ModelError(WWTransferError, ValueError):
    """Invalid model construction or validation failure (CLI exit code 3)."""


class BandError(ModelError):
    """Band empty, inverted, or not covered by tabulated data."""


class OrthogonalityError(ModelError):
    """Donor/acceptor formfactors overlap beyond tolerance.

    Carries the measured relative overlap in ``overlap``.
    """

    def __init__(self, overlap, tol):
        super().__init__(
            f"formfactor overlap {overlap:.3g} exceeds tolerance {tol:.3g}"
        )
        self.overlap = overlap
        self.tol = tol


class ZeroNormError(ModelError):
    """Overlap of a zero-norm formfactor is undefined."""


class NetworkError(ModelError):
    """Invalid tight-binding network input."""


class DirectHoppingError(NetworkError):
    """Donor-acceptor hopping must vanish for the embedding; carries its magnitude."""

    def __init__(self, magnitude):
        super().__init__(f"direct donor-acceptor hopping |h12| = {magnitude:.3g} must be zero")
        self.magnitude = magnitude


class DomainError(WWTransferError, ValueError):
    """Argument outside the mathematical domain of an operation."""


class PoleError(WWTransferError, ArithmeticError):
    """Resolvent denominator vanished on the evaluation contour; carries the location."""

    def __init__(self, z, detail=""):
        super().__init__(f"resolvent pole encountered at z = {z}{': ' + detail if detail else ''}")
        self.z = z


class ConvergenceError(WWTransferError, RuntimeError):
    """Hard numerical non-convergence (CLI exit code 4)."""


class SchemaError(WWTransferError, ValueError):
    """Scenario or file schema violation (CLI exit code 2)."""


class GridMismatchError(SchemaError):
    """Two series do not share a time grid."""


class CoarseGridWarning(UserWarning):
    """Discretization too coarse to resolve the linewidth."""


class ShortTimeWarning(UserWarning):
    """Amplitude requested at times below a few lifetimes; asymptotic formula suspect."""


class WeakCouplingWarning(UserWarning):
    """Markovian layer used outside its weak-coupling regime."""


class ResonanceWarning(UserWarning):
    """Detuning exceeds tolerance for a resonance-based estimate."""


class PhaseGapWarning(UserWarning):
    """Levels excluded from the phase envelope because their coupling vanishes."""
