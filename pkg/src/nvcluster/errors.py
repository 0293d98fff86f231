"""Exception types shared across the package."""


class ParameterError(ValueError):
    """Invalid or inconsistent model parameters."""


class TruncationError(ValueError):
    """Probability mass beyond ``n_max`` exceeds the allowed tail."""


class ConvergenceError(RuntimeError):
    """An iterative procedure failed to converge."""


class TrainingError(RuntimeError):
    """Neural network training diverged."""


class ModelFormatError(ValueError):
    """A persisted model file is corrupted or incompatible."""
