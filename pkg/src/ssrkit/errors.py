"""Exception types shared across the toolkit."""


class SSRError(Exception):
    """Base class for all toolkit errors."""


class MalformedRoleError(SSRError, ValueError):
    """Argument role code is empty or otherwise unusable."""


class TokenParseError(SSRError, ValueError):
    """Token stream cannot be parsed back into an event."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (offset {offset})")
        self.offset = offset


class CapacityError(SSRError, ValueError):
    """max_len is too small to keep markers and structural tokens."""


class CorpusFormatError(SSRError, ValueError):
    """A corpus file line failed to parse or validate."""

    def __init__(self, line_no: int, code: str, message: str):
        super().__init__(f"line {line_no}: [{code}] {message}")
        self.line_no = line_no
        self.code = code


class ZeroFrequencyError(SSRError, ValueError):
    """A label required for class weights never occurs in the corpus."""


class CannotBalanceError(SSRError, ValueError):
    """Undersampling needs at least two labels present."""


class InsufficientDataError(SSRError, ValueError):
    """A baseline or trainer was given an empty training corpus."""


class InsufficientInferencesError(SSRError, ValueError):
    """A KB record lacks enough inference sentences to build sequences."""


class IncompleteAnnotationError(SSRError, ValueError):
    """A sequence is missing relation annotations required by seq2seq training."""


class LabelSpaceMismatchError(SSRError, ValueError):
    """Two components disagree about the label space in use."""


class TrainingDivergedError(SSRError, RuntimeError):
    """Training produced a non-finite loss."""


class UnderdeterminedSpecError(SSRError, ValueError):
    """A synthetic corpus spec leaves the relation labels undetermined."""


class VocabularyMismatchError(SSRError, ValueError):
    """A model was applied with a vocabulary it was not trained with."""
