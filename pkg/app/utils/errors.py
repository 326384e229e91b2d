"""
Error types shared by the DAT engine.

Every error carries the process exit code the command layer maps it to:
1 parse, 2 validation, 3 degenerate statistics.
"""


class DatError(Exception):
    """Base class for all engine errors"""

    exit_code = 1


class TelemetryParseError(DatError):
    """A telemetry line could not be decoded into a record"""

    exit_code = 1

    def __init__(self, message, line_no=None):
        self.line_no = line_no
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)


class TelemetrySchemaError(TelemetryParseError):
    """A telemetry line has an unknown kind"""


class TelemetryValidationError(DatError):
    """Telemetry decoded fine but breaks an EventLog invariant"""

    exit_code = 2


class UnknownDiffError(TelemetryValidationError):
    """A command referenced a diff that is not in the log"""


class SimulationConfigError(DatError):
    exit_code = 2


class StatisticsError(DatError, ValueError):
    """Statistics requested on data that cannot support them"""

    exit_code = 3


class ConfigError(DatError):
    """Session or anchor thresholds out of range"""

    exit_code = 2
