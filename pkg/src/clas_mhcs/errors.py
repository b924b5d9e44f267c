"""Exception types shared across the package."""


class ClasError(Exception):
    """Base class for every error raised by this package."""


class InvalidElement(ClasError, ValueError):
    """Bytes that do not decode to a member of the expected prime-order group."""


class UnsupportedParameter(ClasError, ValueError):
    pass


class DuplicateIdentity(ClasError):
    pass


class IncompleteKeys(ClasError):
    pass


class EmptyInput(ClasError, ValueError):
    pass


class EnvelopeError(ClasError):
    """Sealed box failed authentication (tampered, truncated or wrong key)."""


class UnknownIndex(ClasError, KeyError):
    pass


class EmptySlot(ClasError):
    pass


class SubmissionRejected(ClasError):
    """A submission failed one of the data-center admission checks.

    ``reason`` is one of ``decrypt-failure``, ``hash-mismatch``,
    ``stale-timestamp`` or ``invalid-element``.
    """

    def __init__(self, reason: str, detail: str = ""):
        self.reason = reason
        self.detail = detail
        super().__init__(f"{reason}: {detail}" if detail else reason)
