"""Exception hierarchy shared across the package."""


class TxLogScanError(Exception):
    """Base class for all errors raised by txlogscan."""


class ValidationError(TxLogScanError, ValueError):
    """A hash, address, or byte blob has the wrong shape."""


class FixtureError(TxLogScanError, ValueError):
    """A fixture document is malformed.

    ``field`` names the offending key path (e.g. ``logs[3].data``).
    """

    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field}: {message}")


class TransportError(TxLogScanError):
    """The node could not be reached. Safe to retry."""

    retriable = True

    def __init__(self, endpoint, message):
        self.endpoint = endpoint
        super().__init__(f"{endpoint}: {message}")


class NotFoundError(TxLogScanError, LookupError):
    """The node does not know the requested transaction."""


class RpcError(TxLogScanError):
    """The node answered with a JSON-RPC error object."""


class AbiConflictError(TxLogScanError, ValueError):
    """Two different event ABIs share a signature hash."""


class DecodeError(TxLogScanError, ValueError):
    """A log matched an ABI but its topics/data do not fit the layout."""


class EncodeError(TxLogScanError, ValueError):
    pass


class ConfigurationError(TxLogScanError, ValueError):
    pass


class BackendError(TxLogScanError):
    """The text-generation backend kept failing."""

    def __init__(self, message, attempts):
        self.attempts = attempts
        super().__init__(f"{message} (after {attempts} attempt(s))")


class TransientBackendError(TxLogScanError):
    """Raised by backends for failures worth retrying."""


class EmptyResponseError(TxLogScanError):
    pass


class UnparseableReportError(TxLogScanError, ValueError):
    """None of the three report section headers were found."""

    def __init__(self, raw):
        self.raw = raw
        super().__init__("no Summary / Pattern Analysis / Further Recommendation headers found")
