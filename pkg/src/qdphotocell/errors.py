"""Exception types shared across the package."""


class QdpcError(Exception):
    """Base class for all package-specific errors."""


class DomainError(QdpcError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class ConfigError(QdpcError, ValueError):
    """A run configuration is malformed or violates a parameter constraint."""


class OutputExistsError(ConfigError):
    """An output path already exists and --force was not given."""


class NoUniqueSteadyStateError(QdpcError, RuntimeError):
    """The steady-state linear system is singular or too ill-conditioned.

    Raised when the dissipative network does not connect all four dot states
    (for example, both lead couplings switched off) so that the stationary
    density matrix is not unique, or when the replaced-row solve fails its
    residual check.
    """


class StepInstabilityError(QdpcError, RuntimeError):
    """Fixed-step time integration became unstable (trace drift or overflow)."""


class SecondLawViolationError(QdpcError, RuntimeError):
    """A stationary operating point with positive power exceeded the Carnot bound."""
