"""Exception types raised across the package."""


class DomainError(ValueError):
    """A numeric argument lies outside the domain an operation accepts."""


class DimensionError(ValueError):
    """Vector or table shapes do not agree."""


class InstanceTooLargeError(ValueError):
    """An exhaustive search would exceed the configured combination cap."""


class PanelParseError(ValueError):
    def __init__(self, message, line=None, path=None):
        self.line = line
        self.path = path
        where = ""
        if path is not None:
            where += f"{path}:"
        if line is not None:
            where += f"{line}: "
        elif where:
            where += " "
        super().__init__(where + message)


class PanelIntegrityError(ValueError):
    """Duplicate (date, location, hour) keys or otherwise inconsistent panel."""


class DataGapError(RuntimeError):
    def __init__(self, missing):
        self.missing = list(missing)
        shown = ", ".join(str(d) for d in self.missing[:20])
        more = "" if len(self.missing) <= 20 else f" (+{len(self.missing) - 20} more)"
        super().__init__(f"missing dates in price panel: {shown}{more}")


class ConfigError(ValueError):
    """Invalid or incomplete run configuration."""
