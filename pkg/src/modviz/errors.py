"""Exception hierarchy shared across modviz."""


class ModvizError(Exception):
    """Base class for every error raised deliberately by modviz."""


class DomainError(ModvizError, ValueError):
    """A point lies outside the domain of the map being evaluated."""


class ValidationError(ModvizError, ValueError):
    """A value violates a documented invariant (weight, level, period, ...)."""


class ParseError(ModvizError, ValueError):
    """Input text could not be parsed; the message carries line/field context."""


class UnknownColormap(ModvizError, ValueError):
    pass


class SizeError(ModvizError, ValueError):
    pass


class IoError(ModvizError, OSError):
    pass


class FetchError(ModvizError):
    """Base class for remote coefficient retrieval failures."""


class NetworkError(FetchError):
    pass


class NotFound(FetchError):
    pass


class PayloadError(FetchError):
    pass


class OfflineMiss(FetchError):
    pass
