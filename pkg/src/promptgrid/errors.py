"""Exception hierarchy shared by all promptgrid modules.

Validation errors map to CLI exit code 2 / HTTP 400, backend errors to
exit code 3 / HTTP 502-ish failure details.
"""

from __future__ import annotations


class PromptGridError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(PromptGridError):
    """Caller-supplied input is unusable."""


class BackendError(PromptGridError):
    """A model backend (live or fixture) could not produce a usable answer."""


# --- input validation ---------------------------------------------------


class EmptyPromptError(ValidationError):
    pass


class NoImagesError(ValidationError):
    pass


class TooManyImagesError(ValidationError):
    pass


class UnreadableImageError(ValidationError):
    def __init__(self, ref: str, reason: str = ""):
        self.ref = ref
        detail = f"cannot read image {ref!r}"
        if reason:
            detail += f": {reason}"
        super().__init__(detail)


class EmptyQuestionError(ValidationError):
    pass


class InvalidThresholdError(ValidationError):
    pass


# --- lookups ------------------------------------------------------------


class UnknownQuestionError(ValidationError):
    pass


class ImageIndexOutOfRangeError(ValidationError):
    pass


class UnknownSessionError(ValidationError):
    pass


# --- backends -----------------------------------------------------------


class BackendUnavailableError(BackendError):
    pass


class FixtureMissError(BackendError):
    def __init__(self, digest: str):
        self.digest = digest
        super().__init__(f"no fixture recorded for request digest {digest}")


class MalformedResponseError(BackendError):
    pass


class SpaceMismatchError(BackendError):
    pass


class GenerationFailedError(BackendError):
    pass


class UnparseableListError(BackendError):
    pass


# --- assembled artifacts ------------------------------------------------


class IncompleteSessionError(PromptGridError):
    pass


class CorruptLogError(PromptGridError):
    pass
