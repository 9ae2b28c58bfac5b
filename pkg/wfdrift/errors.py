class WfDriftError(Exception):
    """Base class for errors raised by wfdrift."""


class InvalidGridError(WfDriftError, ValueError):
    pass


class NumericalError(WfDriftError):
    """A computation could not produce a trustworthy number."""


class SingularSystemError(NumericalError):
    def __init__(self, row: int, pivot: float):
        self.row = row
        self.pivot = pivot
        super().__init__(f"Singular system: pivot {pivot!r} at row {row}")


class QuadratureError(NumericalError):
    pass
