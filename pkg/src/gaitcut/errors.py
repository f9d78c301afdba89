"""Exception types raised across the package."""


class GaitError(Exception):
    """Base class for every error raised by gaitcut."""


class ConstantSignal(GaitError):
    """Signal has max == min; usually a flat or dead sensor stretch."""


class NoPeaks(GaitError):
    """No minimal peak survived detection."""


class BoundaryPoint(GaitError):
    """Requested sample has no neighbour on one side."""


class EmptySignal(GaitError):
    pass


class TooFewCuts(GaitError):
    pass


class TooFewCycles(GaitError):
    pass


class ZeroVariance(GaitError):
    pass


class AllCandidatesFailed(GaitError):
    def __init__(self, message, failures=None):
        super().__init__(message)
        self.failures = failures or []


class GridMismatch(GaitError):
    pass


class EmptyInput(GaitError):
    pass


class EmptyCandidates(GaitError):
    pass


class AxisMismatch(GaitError):
    pass


class UnknownUser(GaitError):
    pass


class ParseError(GaitError):
    def __init__(self, message, path=None, line=None):
        super().__init__(message)
        self.path = path
        self.line = line


class EmptyFile(GaitError):
    pass


class OutOfRange(GaitError):
    pass


class DatasetMissing(GaitError):
    pass


class EmptyMatrix(GaitError):
    pass


class ConfigError(GaitError):
    pass
