"""
Exceptions raised by the scheduler.
"""
from typing import Any, Dict, List, Optional


class SchedulingError(Exception):
    """Base class for all scheduler errors."""


class NetworkValidationError(SchedulingError):
    """A network violates the terminal partition structure."""

    def __init__(self, report):
        self.report = report
        super().__init__("Invalid network: " + "; ".join(report.violations))


class DimensionMismatchError(SchedulingError, ValueError):
    """An array does not have the shape the network or device expects."""


class UnknownDeviceError(SchedulingError, KeyError):
    """A device id that the network does not contain."""


class InvalidParametersError(SchedulingError, ValueError):
    """A device parameter record is malformed or infeasible."""


class QpError(SchedulingError):
    """A QP is malformed (inconsistent shapes, non-PSD Hessian)."""


class KktBreakdownError(QpError):
    """The interior point linear system failed at every regularization level."""


class QpNotConvergedError(SchedulingError):
    """The interior point method ran out of iterations."""

    def __init__(self, message: str, x=None, residual: float = float("nan")):
        self.x = x
        self.residual = residual
        super().__init__(f"{message} (achieved residual {residual:.3e})")


class RootFindError(SchedulingError):
    """A scalar root-find failed to bracket or converge."""


class ProxError(SchedulingError):
    """A device prox evaluation failed."""

    def __init__(self, device_id: int, cause: Exception):
        self.device_id = device_id
        self.cause = cause
        super().__init__(f"Prox failed on device {device_id}: {cause}")


class NonFiniteIterateError(SchedulingError):
    """Iterates became NaN or infinite."""

    def __init__(self, iteration: int, terminals: List[int]):
        self.iteration = iteration
        self.terminals = terminals
        shown = ", ".join(str(t) for t in terminals[:10])
        super().__init__(f"Non-finite values at iteration {iteration} on terminals [{shown}]")


class OracleBudgetError(SchedulingError):
    """An oracle was asked to solve a problem beyond its size budget."""


class ScenarioFormatError(SchedulingError):
    """A scenario, solution or trace file failed to parse."""

    def __init__(self, path: str, errors: Optional[List[Dict[str, Any]]] = None, message: str = ""):
        self.path = path
        self.errors = errors or []
        locations = "; ".join(
            f"{'.'.join(str(part) for part in err.get('loc', ()))}: {err.get('msg', '')}"
            for err in self.errors
        )
        super().__init__(f"{path}: {message or locations}")


class InfeasibleProblemError(SchedulingError):
    """No schedule satisfies every device constraint and net balance."""


class CalibrationError(SchedulingError):
    """The lossless pre-solve used to size transmission lines failed."""
