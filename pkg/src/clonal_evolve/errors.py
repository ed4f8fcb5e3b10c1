"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """A scenario, grid, or CLI configuration is invalid."""


class ContractViolation(ValueError):
    """An operation received input violating its stated precondition."""


class SimulationBlowup(RuntimeError):
    """Totals left the representable range during time stepping."""

    def __init__(self, time, max_density):
        self.time = time
        self.max_density = max_density
        super().__init__(
            f"simulation diverged at t={time:g} (max density {max_density:g})"
        )


class NoCharacteristicRoot(RuntimeError):
    """The characteristic equation has no root inside the search bracket."""


class EigenConvergenceError(RuntimeError):
    """Power iteration failed to converge where a converged pair is required."""


class NotCertifiable(RuntimeError):
    """A verification harness refuses to certify: its hypothesis is not met."""
