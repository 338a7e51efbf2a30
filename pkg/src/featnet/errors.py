class FeatnetError(Exception):
    """Base class for library errors."""


class DomainError(FeatnetError, ValueError):
    """An argument lies outside the domain of the operation."""


class InfeasibleSamplingError(FeatnetError):
    """Not enough non-arc pairs exist to draw the requested negatives."""


class DataFormatError(FeatnetError):
    """Malformed or inconsistent input file."""

    def __init__(self, message, path=None, line=None):
        where = ""
        if path is not None:
            where = f"{path}"
            if line is not None:
                where += f":{line}"
            where += ": "
        super().__init__(where + message)
        self.path = path
        self.line = line
