"""Exception types shared across the package."""


class MaskModesError(Exception):
    """Base class for all maskmodes errors."""


class GridMismatch(MaskModesError):
    """Two objects that must share a sampling grid do not."""


class UnknownLabel(MaskModesError):
    """A mode label is not part of the basis it was looked up in."""


class GridTooSmall(MaskModesError):
    """Too much mode energy sits on the grid boundary for the result to be trusted."""


class EmptyGrid(MaskModesError):
    """A plane-wave grid with no retained directions."""


class AliasingDetected(MaskModesError):
    """Mask spectral content at (or beyond) the band edge is above threshold."""


class SingularNetwork(MaskModesError):
    """Coupling matrix too lossy (smallest singular value below threshold) to unitarize."""


class SpectralMismatch(MaskModesError):
    """Target field has energy where the input spectrum is effectively zero."""

    def __init__(self, message, lost_fraction=None):
        super().__init__(message)
        self.lost_fraction = lost_fraction


class UnitarityError(MaskModesError):
    """A matrix promised to be unitary is not, beyond tolerance."""


class CutoffTooSmall(MaskModesError):
    """Fock cutoff truncates too much norm; carries the required cutoff."""

    def __init__(self, message, required_cutoff=None):
        super().__init__(message)
        self.required_cutoff = required_cutoff


class NonPhysical(MaskModesError):
    """Negative occupation numbers or similar impossible parameters."""


class DimensionMismatch(MaskModesError):
    """Mode counts of two objects disagree."""


class EmptyPartition(MaskModesError):
    """A bipartition whose subset is empty or covers every mode."""


class TooManyModes(MaskModesError):
    """A full bipartition scan was requested beyond the supported mode count."""


class NonAnalyticInput(MaskModesError):
    """Input-mode coefficients do not form a valid series expansion."""


class NotPure(MaskModesError):
    """A covariance matrix fails the pure-state purity condition."""


class InvalidEfficiency(MaskModesError):
    """Absorption efficiency outside (0, 1]."""
