"""Exception taxonomy shared across the package.

The CLI maps these onto exit codes: ConfigError -> 2, NumericalError -> 3,
HypothesisError -> 4.
"""


class RefpriorError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(RefpriorError):
    """Malformed or inconsistent user input: configs, schemas, bad arguments."""


class NumericalError(RefpriorError):
    """A computation failed numerically: non-finite values, no convergence,
    degenerate inputs."""


class HypothesisError(RefpriorError):
    """A mathematical hypothesis required by a construction does not hold
    (infeasible constraints, divergent hypothesis integrals, uncovered decay
    regimes)."""
