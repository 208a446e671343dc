"""Exception types raised across the package."""


class HexcalError(Exception):
    """Base class for all package errors."""


class ConfigError(HexcalError):
    """Malformed geometry/scenario file. Carries the offending line when known."""

    def __init__(self, message, line=None, path=None):
        self.line = line
        self.path = path
        if path is not None:
            where = f"{path}:{line}:" if line is not None else f"{path}:"
        else:
            where = f"line {line}:" if line is not None else ""
        super().__init__(f"{where} {message}" if where else message)


class GimbalLock(HexcalError):
    pass


class NoConvergence(HexcalError):
    def __init__(self, message, residual=float("nan"), iterations=0):
        self.residual = residual
        self.iterations = iterations
        super().__init__(f"{message} (residual {residual:.3e} mm after {iterations} iterations)")


class SingularJacobian(HexcalError):
    pass


class SingularPose(HexcalError):
    def __init__(self, message, pose_id=None):
        self.pose_id = pose_id
        if pose_id is not None:
            message = f"pose {pose_id}: {message}"
        super().__init__(message)


class InsufficientData(HexcalError):
    pass


class ExhaustedSampling(HexcalError):
    pass


class InvalidatedGeometry(HexcalError):
    pass


class EmptyInput(HexcalError):
    pass


class ZeroBaseline(HexcalError):
    pass
