"""Exception types shared across the simulator."""


class TrapSimError(Exception):
    """Base class for all errors raised by this package."""


class GeometryInvalid(TrapSimError):
    """Device geometry violates an invariant (overlapping tips, tip wider than channel, ...)."""


class ResolutionTooCoarse(TrapSimError):
    """Requested rasterization resolution under-resolves a tip gap."""


class OutOfDomain(TrapSimError):
    """A point or line lies outside the simulation domain bounding box."""


class SingularSystem(TrapSimError):
    """The discrete conduction system has no unique solution (e.g. zero-conductivity cells)."""


class NotConverged(TrapSimError):
    """Iterative solve exceeded max_iterations before reaching the requested residual."""

    def __init__(self, iterations: int, residual: float):
        self.iterations = iterations
        self.residual = residual
        super().__init__(
            f"solver did not converge: relative residual {residual:.3e} "
            f"after {iterations} iterations"
        )


class ZeroFrequency(TrapSimError):
    """Angular frequency must be positive to form a complex permittivity."""


class DegenerateDenominator(TrapSimError):
    """Clausius-Mossotti denominator vanished; polarizability undefined."""


class StepUnderflow(TrapSimError):
    """Adaptive step fell below dt_min; the force field is effectively singular here."""

    def __init__(self, dt: float, position):
        self.dt = dt
        self.position = tuple(float(c) for c in position)
        super().__init__(
            f"required step {dt:.3e} s below dt_min near position {self.position}"
        )


class ParseError(TrapSimError):
    """Config text could not be parsed."""

    def __init__(self, line, message: str):
        self.line = line
        self.message = message
        where = f"line {line}: " if line else ""
        super().__init__(f"{where}{message}")


class ValidationError(TrapSimError):
    """A parsed config value is out of range or unknown."""

    def __init__(self, field: str, reason: str):
        self.field = field
        self.reason = reason
        super().__init__(f"{field}: {reason}")


class IoError(TrapSimError):
    """Reading or writing an output file failed."""
