"""Exception types shared across the package."""


class MtemError(Exception):
    """Base class for all package-specific errors."""


class ConfigurationError(MtemError):
    """A run was requested with inconsistent or unusable settings."""


class ValidationError(MtemError):
    """A config document failed validation.

    Carries the full list of human-readable problems so callers can report
    them all at once instead of one per run attempt.
    """

    def __init__(self, problems: list[str]):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


class ProbeError(MtemError):
    """A coefficient evaluator returned a non-finite value during probing."""

    def __init__(self, coefficient: str, point):
        self.coefficient = coefficient
        self.point = point
        super().__init__(
            f"coefficient {coefficient!r} returned a non-finite value at {point}"
        )


class EstimatorError(MtemError):
    """The drift estimator was asked to average over a diverged path."""

    def __init__(self, diverged_at: int):
        self.diverged_at = diverged_at
        super().__init__(f"frozen path diverged at micro step {diverged_at}")


class DivergenceError(MtemError):
    """A single-trajectory diagnostic hit a diverged state."""

    def __init__(self, index: int):
        self.index = index
        super().__init__(f"trajectory diverged at step {index}")


class NoisePlanningError(MtemError):
    """A requested increment grid exceeds the addressable range."""


class UnsupportedSystemError(MtemError):
    """The operation requires structure this system does not have."""


class DegenerateFitError(MtemError):
    """A regression input admits no meaningful fit (e.g. log of zero)."""
