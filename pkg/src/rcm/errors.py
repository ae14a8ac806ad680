"""Exception hierarchy shared by the codec, image I/O and CLI layers."""


class RcmError(Exception):
    """Base class for all errors raised by this package."""


class PayloadTooLarge(RcmError):
    def __init__(self, requested: int, capacity: int, detail: str = ""):
        self.requested = requested
        self.capacity = capacity
        msg = f"payload of {requested} bits exceeds capacity of {capacity} bits"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)


class TrailingSavedBits(RcmError):
    """Saved LSBs remained queued at the end of the scan with no slot after them."""

    def __init__(self, pending: int):
        self.pending = pending
        super().__init__(f"{pending} saved bit(s) have no subsequent embedding slot")


class TrailingUnresolvedPairs(RcmError):
    """Some non-transformed pairs never received their saved LSB at extraction."""

    def __init__(self, pending: int):
        self.pending = pending
        super().__init__(f"{pending} pair(s) never received a saved bit; "
                         "wrong parameters or corrupted image")


class EnvelopeCorrupt(RcmError):
    pass


class TruncatedEnvelope(EnvelopeCorrupt):
    pass


class MisalignedCrop(RcmError, ValueError):
    pass


class ImageFormatError(RcmError):
    pass


class MalformedHeader(ImageFormatError):
    pass


class TruncatedData(ImageFormatError):
    pass


class UnsupportedMaxval(ImageFormatError):
    pass


class DimensionMismatch(RcmError, ValueError):
    pass


class OutOfBounds(RcmError, ValueError):
    pass
