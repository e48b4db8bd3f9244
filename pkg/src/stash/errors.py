"""Exception hierarchy shared by all stash modules."""


class StashError(Exception):
    """Base class for all domain errors raised by this package."""


class ParseError(StashError):
    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class OrderError(StashError):
    """Timestamps regressed where a monotone stream was required."""


class EmptyStream(StashError):
    pass


class LengthMismatch(StashError):
    pass


class InsufficientData(StashError):
    pass


class DegenerateLabels(StashError):
    """Training set contains a single class."""


class UntrainedModel(StashError):
    pass


class EmptyScores(StashError):
    pass


class UnknownAlpha(StashError):
    pass


class InvalidCount(StashError):
    pass


class EmptyCorpus(StashError):
    pass


class RejectionExhausted(StashError):
    """Could not sample the requested number of mutually distinct routes."""


class EmptySequence(StashError):
    pass


class VersionMismatch(StashError):
    pass


class CorruptFile(StashError):
    pass


class NoReferencePath(StashError):
    pass


class ChannelClosed(StashError):
    pass


class MacMismatch(StashError):
    pass


class TooFewRoutes(StashError):
    pass


class InsufficientInstances(StashError):
    pass


class DegenerateDesign(StashError):
    """Regression inputs do not span enough distinct lengths."""


class ConfigError(StashError):
    """Bad or unknown key in a configuration file."""
