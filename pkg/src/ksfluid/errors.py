"""Exception hierarchy for ksfluid."""


class KsfluidError(Exception):
    """Base class for all package errors."""


class ConfigError(KsfluidError):
    pass


class ParseError(ConfigError):
    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        where = ""
        if line is not None:
            where = f" (line {line}" + (f", column {column})" if column is not None else ")")
        super().__init__(message + where)


class ValidationError(ConfigError):
    def __init__(self, gate, message):
        self.gate = gate
        super().__init__(f"{gate}: {message}")


class SingularityError(KsfluidError):
    """The signal concentration reached the singular floor."""


class SingularityDetected(SingularityError):
    pass


class BlowupDetected(KsfluidError):
    pass


class PositivityViolation(KsfluidError):
    pass


class NonFinite(KsfluidError):
    pass


class SolverDivergence(KsfluidError):
    pass


class TimestepCollapse(KsfluidError):
    pass


class AdmissibilityError(KsfluidError):
    pass


class UnsupportedDimension(AdmissibilityError):
    pass


class DegenerateExponent(AdmissibilityError):
    pass


class InsufficientData(KsfluidError):
    pass


class SnapshotError(KsfluidError):
    pass
