"""Exception types raised across the package."""


class GraphMixupError(Exception):
    """Base class for all package errors."""


class ParseError(GraphMixupError, ValueError):
    def __init__(self, path, line_no, message):
        self.path = str(path)
        self.line_no = line_no
        super().__init__(f"{self.path}:{line_no}: {message}")


class DimensionError(GraphMixupError, ValueError):
    pass


class DomainError(GraphMixupError, ValueError):
    pass


class NodeIndexError(GraphMixupError, IndexError):
    pass


class CapacityError(GraphMixupError, ValueError):
    def __init__(self, cls, needed, available):
        self.cls = cls
        self.needed = needed
        self.available = available
        super().__init__(
            f"class {cls} has {available} labeled nodes, {needed} required")


class SingletonClassError(GraphMixupError, LookupError):
    pass


class NumericError(GraphMixupError, ArithmeticError):
    pass


class ConfigError(GraphMixupError, ValueError):
    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field}: {message}")
