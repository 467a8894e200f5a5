"""Exception hierarchy. Every error carries the pipeline stage it came from."""


class GeodesicPSIMError(Exception):
    stage = "metric"

    def __str__(self):
        return f"[{self.stage}] {super().__str__()}"


class InputError(GeodesicPSIMError):
    """Bad or unreadable input (maps to CLI exit code 2)."""

    stage = "input"


class ParseError(InputError):
    stage = "parse"

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class DecodeError(InputError):
    stage = "decode"


class ManifestError(InputError):
    stage = "manifest"

    def __init__(self, message, row=None):
        self.row = row
        if row is not None:
            message = f"row {row}: {message}"
        super().__init__(message)


class ParameterError(GeodesicPSIMError, ValueError):
    stage = "config"


class CleanError(GeodesicPSIMError):
    stage = "clean"


class PatchError(GeodesicPSIMError):
    stage = "patch"


class FeatureError(GeodesicPSIMError):
    stage = "features"


class ScoringError(GeodesicPSIMError):
    stage = "scoring"


class FitError(GeodesicPSIMError):
    stage = "eval"


class CorrelationError(GeodesicPSIMError):
    stage = "eval"
