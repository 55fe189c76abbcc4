"""Shared exception types; the service maps these onto HTTP error kinds."""


class SynthfitError(Exception):
    """Base class for all library errors."""

    kind = "internal"


class InputError(SynthfitError):
    """Caller passed an out-of-range value, unknown name, or bad shape."""

    kind = "input"


class FormatError(SynthfitError):
    """A file or byte stream does not follow its declared layout."""

    kind = "format"


class BadMagicError(FormatError):
    pass


class BadVersionError(FormatError):
    pass


class TruncatedFileError(FormatError):
    pass


class ManifestMismatchError(SynthfitError):
    """Dataset manifest does not match the one a checkpoint was trained with."""

    kind = "manifest"


class TrainingDivergedError(SynthfitError):
    """Loss became non-finite; carries the state snapshot for diagnosis."""

    kind = "diverged"

    def __init__(self, message, epoch=None, batch=None, history=None):
        super().__init__(message)
        self.epoch = epoch
        self.batch = batch
        self.history = history or []
