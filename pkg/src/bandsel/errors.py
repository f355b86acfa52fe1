"""Exception types shared across the package."""


class BandSelError(Exception):
    """Base class for every error raised by bandsel."""


# --- raster loading / image model ---

class MalformedHeader(BandSelError):
    """Header file is missing, unparseable, or declares an unsupported layout."""


class SizeMismatch(BandSelError):
    """Declared dimensions disagree with the actual payload."""


class NonFiniteValue(BandSelError):
    """A NaN or infinity was found in the radiance data."""


class UnsupportedDtype(BandSelError):
    """The raster uses a sample dtype outside the supported subset."""


class IndexOutOfRange(BandSelError):
    """A band index does not exist in the image."""


class EmptyResult(BandSelError):
    """An operation would leave the image with no bands."""


# --- band statistics ---

class EmptySubset(BandSelError):
    """A statistic was requested for an empty band subset."""


class ConstantBand(BandSelError):
    """Pearson correlation is undefined for a zero-variance band."""


class NotSuccessor(BandSelError):
    """Reward requested between subsets that do not differ by exactly one band."""


# --- environment / agent ---

class IllegalAction(BandSelError):
    """The action is out of range or the band is already selected."""


class EpisodeFinished(BandSelError):
    """step() was called on a state that already holds the full subset."""


class NoLegalAction(BandSelError):
    """Action selection was asked to choose from an empty legal set."""


class ShapeMismatch(BandSelError):
    """A tensor does not have the shape the network expects."""


class NonFiniteGradient(BandSelError):
    """A gradient contained NaN or infinity."""


class DivergedLoss(BandSelError):
    """The training loss became non-finite."""


# --- oracles ---

class BudgetExceeded(BandSelError):
    """Exhaustive enumeration would exceed the configured subset budget."""


# --- evaluation ---

class EmptyClass(BandSelError):
    """No labeled samples are available to split."""


class EmptyTrainingSet(BandSelError):
    """The classifier received no training samples."""


class EmptyConfusion(BandSelError):
    """Metrics were requested for an empty confusion matrix."""
