"""Exception types shared across the package."""


class OutOfBoundsError(ValueError):
    """A query point lies outside a problem's box bounds."""


class EmptyFeasibleSetError(RuntimeError):
    """The problem, as formulated, admits no feasible point."""


class GPNumericalError(RuntimeError):
    """Kernel matrix could not be factorized even after jitter escalation."""


class InferenceError(RuntimeError):
    """A predictive-distribution backend failed to produce usable output.

    ``payload`` carries backend diagnostics (stderr tail, raw response, ...).
    """

    def __init__(self, message, payload=None):
        super().__init__(message)
        self.payload = payload or {}


class ProtocolViolationError(InferenceError):
    """An external predictor answered, but the response failed validation."""
