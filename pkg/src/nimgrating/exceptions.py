"""Exception types raised by the solver pipeline."""


class NimGratingError(Exception):
    """Base class for all package errors."""


class InvalidConfig(NimGratingError, ValueError):
    """Raised when a configuration violates a physical or geometric invariant."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations) or "invalid configuration")


class WoodAnomaly(NimGratingError):
    """A retained mode has |alpha_n| == kappa_1, where beta_n vanishes."""

    def __init__(self, n, alpha_n, kappa1):
        self.n = n
        self.alpha_n = alpha_n
        self.kappa1 = kappa1
        super().__init__(
            f"Wood anomaly: mode n={n} has |alpha_n|={abs(alpha_n):.12g} "
            f"equal to kappa_1={kappa1:.12g}; perturb theta or omega, "
            "or lower the truncation"
        )


class MeshError(NimGratingError, ValueError):
    """Degenerate geometry or a mesh that fails quality checks."""


class TruncationMismatch(NimGratingError, ValueError):
    """Mode sets or trace coefficients of different truncation were combined."""


class SingularSystem(NimGratingError):
    """The assembled system is numerically singular.

    Usually signals a frequency close to the exceptional set or a contrast
    close to eps1/eps2 = -1.
    """

    def __init__(self, rcond, message=None):
        self.rcond = rcond
        super().__init__(
            message
            or f"reciprocal condition estimate {rcond:.3e} below threshold; "
            "perturb omega slightly and retry"
        )


class DegenerateLayer(NimGratingError):
    """The per-mode flat-grating transmission system is singular."""


class InsufficientSampling(NimGratingError, ValueError):
    """Too few trace samples to resolve the requested modes."""
