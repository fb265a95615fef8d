class SqpackError(ValueError):
    """Base class for every error raised by sqpack."""


class InvalidRegionError(SqpackError):
    pass


class InfeasibleError(SqpackError):
    pass


class DegenerateParamsError(SqpackError):
    pass


class ExhaustedError(SqpackError):
    pass


class ConstructionError(SqpackError):
    """A construction produced a layout that does not verify."""

    def __init__(self, message: str, violations=None):
        super().__init__(message)
        self.violations = list(violations or [])


class UnverifiedLayoutError(SqpackError):
    pass


class InsufficientDataError(SqpackError):
    pass


class LayoutFormatError(SqpackError):
    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field
