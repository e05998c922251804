"""
All errors raised by rootshield derive from RootShieldError. The sub-roots group them by the component
that raises them, so callers can catch a whole family (e.g. every TraceError while reading a file).
"""


class RootShieldError(Exception):
    pass


class ConfigError(RootShieldError):
    pass


class TableFormatError(RootShieldError):
    pass


# trace

class TraceError(RootShieldError):
    def __init__(self, msg: str, line: int = None):
        self.line = line
        if line is not None:
            msg = f'line {line}: {msg}'
        super().__init__(msg)


class MalformedLine(TraceError):
    pass


class OutOfRange(TraceError):
    pass


class BadAddress(TraceError):
    pass


class EmptyName(TraceError):
    pass


class MonotonicityViolation(TraceError):
    pass


class TraceIOError(TraceError):
    pass


# filters

class FilterError(RootShieldError):
    pass


class EmptySample(FilterError):
    pass


class EmptyWindow(FilterError):
    pass


class RuleCapExceeded(FilterError):
    pass


class UnknownSource(FilterError):
    pass


class ExpiredState(FilterError):
    pass


# detector

class DetectorError(RootShieldError):
    pass


class NoBaseline(DetectorError):
    pass


class NotPrimed(DetectorError):
    pass


# selector

class SelectionError(RootShieldError):
    pass


class NoSingle(SelectionError):
    """no single candidate brings the projected load down to AL"""
    pass


class InvalidPipeline(SelectionError):
    """a pipeline that violates the filter ordering constraints"""
    pass


# rules

class RuleFormatError(RootShieldError):
    def __init__(self, msg: str, line: int = None):
        self.line = line
        if line is not None:
            msg = f'line {line}: {msg}'
        super().__init__(msg)
