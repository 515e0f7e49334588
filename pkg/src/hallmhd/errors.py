"""Exception types raised across the package."""


class HallMHDError(Exception):
    pass


class InvalidField(HallMHDError, ValueError):
    """Field values are non-finite or the array shape does not match the grid."""


class InvalidOperand(HallMHDError, ValueError):
    pass


class InvalidParameter(HallMHDError, ValueError):
    pass


class GridMismatch(HallMHDError, ValueError):
    pass


class ShellOutOfRange(HallMHDError, IndexError):
    pass


class PreconditionViolated(HallMHDError, ValueError):
    pass


class EmptyShell(HallMHDError, ValueError):
    pass


class NumericalFault(HallMHDError, ArithmeticError):
    pass


class CflError(HallMHDError):
    def __init__(self, dt, suggested_dt):
        self.dt = dt
        self.suggested_dt = suggested_dt
        super().__init__(f"dt={dt:g} violates the CFL limit; use dt <= {suggested_dt:.6g}")


class BlowupDetected(HallMHDError):
    def __init__(self, t, norm=float("nan"), trajectory=None):
        self.t = t
        self.norm = norm
        # partial results up to the failure time, filled in by ``run``
        self.trajectory = trajectory
        super().__init__(f"solution blew up at t={t:.6g} (norm={norm:.6g})")


class ConfigError(HallMHDError, ValueError):
    def __init__(self, message, field=None, line=None):
        self.field = field
        self.line = line
        where = []
        if field is not None:
            where.append(f"field '{field}'")
        if line is not None:
            where.append(f"line {line}")
        prefix = f"[{', '.join(where)}] " if where else ""
        super().__init__(prefix + message)
