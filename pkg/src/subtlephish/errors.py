"""Exception hierarchy.

Every error carries the name of the module that raised it so the CLI can
report where a failure originated. ``DataError`` and ``ServiceError`` map to
distinct CLI exit codes.
"""


class SubtlePhishError(Exception):
    module = "subtlephish"
    exit_code = 2

    def __init__(self, message="", *, key=None):
        super().__init__(message)
        self.key = key


class DataError(SubtlePhishError):
    exit_code = 2


class ServiceError(SubtlePhishError):
    exit_code = 3


# textmetrics
class ZeroVariance(DataError):
    module = "textmetrics"


class LengthMismatch(DataError):
    module = "textmetrics"


class TooFewSamples(DataError):
    module = "textmetrics"


# urlkit
class MalformedUrl(DataError):
    module = "urlkit"


# domkit
class EmptyDocument(DataError):
    module = "domkit"


# evidence
class FetchTimeout(ServiceError):
    module = "evidence"


class RendererUnavailable(ServiceError):
    module = "evidence"


class HttpError(ServiceError):
    module = "evidence"

    def __init__(self, status, message="", *, key=None, snapshot=None):
        super().__init__(message or f"HTTP status {status}", key=key)
        self.status = status
        self.snapshot = snapshot


class WhoisUnavailable(ServiceError):
    module = "evidence"


class NoRecord(DataError):
    module = "evidence"


class RankServiceUnavailable(ServiceError):
    module = "evidence"


class QuotaExceeded(ServiceError):
    module = "evidence"


class ReputationServiceUnavailable(ServiceError):
    module = "evidence"


class NetworkDisabled(ServiceError):
    """Raised when a client would touch the network in replay mode."""

    module = "evidence"


class StoreCorrupt(DataError):
    module = "evidence"


class NotRecorded(DataError):
    module = "evidence"


# featurizer
class MissingSnapshot(DataError):
    module = "featurizer"


class AlreadyNormalized(DataError):
    module = "featurizer"


# lrmodel
class SchemaMismatch(DataError):
    module = "lrmodel"


class EmptyDataset(DataError):
    module = "lrmodel"


class SingleClassDataset(DataError):
    module = "lrmodel"


class DivergenceDetected(DataError):
    module = "lrmodel"


# evalkit
class MalformedCsv(DataError):
    module = "evalkit"

    def __init__(self, line, message="", *, key=None):
        super().__init__(f"line {line}: {message}" if message else f"line {line}", key=key)
        self.line = line


class UnlabeledRow(MalformedCsv):
    pass


class SchemaVersionMismatch(DataError):
    module = "evalkit"


class TooSmall(DataError):
    module = "evalkit"


# synthcorpus
class InvalidMix(DataError):
    module = "synthcorpus"
