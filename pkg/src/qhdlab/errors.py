"""Exception types shared across the package."""


class QhdError(Exception):
    """Base class for all qhdlab errors."""


class StencilError(QhdError, ValueError):
    """Grid too small for the requested finite-difference stencil."""


class NonFiniteError(QhdError, ValueError):
    """Input or output contains NaN or infinity."""


class VacuumError(QhdError):
    """Density fell to or below the vacuum floor.

    Carries the offending minimum density and, when known, the time.
    """

    def __init__(self, min_rho, floor, t=None):
        self.min_rho = float(min_rho)
        self.floor = float(floor)
        self.t = t
        where = "" if t is None else f" at t={t:.6g}"
        super().__init__(f"vacuum floor breached{where}: min rho={min_rho:.3e} <= {floor:.1e}")


class InstabilityError(QhdError):
    """A solver produced non-finite values."""

    def __init__(self, t, partial=None):
        self.t = float(t)
        self.partial = partial
        super().__init__(f"non-finite state detected at t={t:.6g}")


class AssumptionError(QhdError):
    """A pressure law failed a structural assumption a monitor relies on."""

    def __init__(self, message, report=None):
        self.report = report
        super().__init__(message)


class ConfigError(QhdError):
    """Malformed or inconsistent scenario configuration."""
