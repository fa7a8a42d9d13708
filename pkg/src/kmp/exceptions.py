"""Exception hierarchy shared by every kmp module."""


class KMPError(Exception):
    """Base class for all errors raised by kmp."""


class DimensionError(KMPError, ValueError):
    """Array shapes or sample counts do not line up."""


class ParseError(KMPError, ValueError):
    """A text matrix cell could not be parsed as a number."""


class ValidationError(KMPError, ValueError):
    """Input violates a data invariant (e.g. a non-finite value)."""


class ArgumentError(KMPError, ValueError):
    """A parameter is outside its admissible range."""


class DegenerateDataError(KMPError, ValueError):
    """Data admits no meaningful answer (e.g. all rows identical)."""


class DegenerateObjectiveError(KMPError, ArithmeticError):
    """A trace ratio has a vanishing or negative denominator or numerator."""


class NumericError(KMPError, ArithmeticError):
    """A numerical routine failed (Cholesky breakdown, non-finite objective)."""


class UnsupportedError(KMPError, ValueError):
    """The requested operation is not defined for this input kind."""


class StratificationError(KMPError, ValueError):
    """A class has fewer members than the number of CV folds."""


class ModelFormatError(KMPError):
    """Base class for model-file load failures."""


class VersionError(ModelFormatError):
    """Model file was written with an unsupported format version."""


class CorruptModelError(ModelFormatError):
    """Model file is truncated or structurally malformed."""


class ChecksumError(ModelFormatError):
    """Model file content does not match its stored checksum."""
