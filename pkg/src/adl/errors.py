"""Exception types raised across the library."""


class InvalidInputError(ValueError):
    """Input shape, range, or finiteness violates an operation's contract."""


class UndefinedMetricError(ValueError):
    """A metric has no defined value for the given input (e.g. zero variance)."""


class UndefinedClassError(ValueError):
    """A label column is constant, so per-class accuracy is undefined."""

    def __init__(self, classes):
        self.classes = list(classes)
        super().__init__(f"degenerate label column(s): {self.classes}")


class TrainingDivergedError(RuntimeError):
    """Loss became non-finite during optimization."""

    def __init__(self, step, loss=float("nan")):
        self.step = step
        self.loss = loss
        super().__init__(f"training diverged at step {step} (loss={loss})")
