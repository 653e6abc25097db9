class LcExplainError(Exception):
    """Base class for errors caused by bad user input or configuration."""


class SchemaError(LcExplainError):
    pass


class DataError(LcExplainError):
    pass


class FitError(LcExplainError):
    pass


class ConvergenceError(FitError):
    pass


class DivergenceError(FitError):
    def __init__(self, epoch: int, message: str = "training loss became non-finite"):
        self.epoch = epoch
        super().__init__(f"{message} at epoch {epoch}")
