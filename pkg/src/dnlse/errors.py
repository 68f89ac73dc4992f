"""Exception hierarchy shared by every module of the package."""


class DNLSEError(Exception):
    """Base class for all package errors."""


class ConfigError(DNLSEError, ValueError):
    """Invalid parameters or inconsistent configuration."""


class EmptyLatticeError(ConfigError):
    pass


class LatticeMismatchError(DNLSEError, ValueError):
    """Two arrays that must describe the same lattice have different sizes."""


class OracleSizeError(DNLSEError, ValueError):
    pass


class BoundaryContaminationError(DNLSEError, RuntimeError):
    """Mass reached the lattice edges; periodic wraparound would corrupt the run."""

    def __init__(self, t, tail_mass, threshold):
        self.t = t
        self.tail_mass = tail_mass
        self.threshold = threshold
        super().__init__(
            f"tail mass {tail_mass:.3e} exceeds {threshold:.1e} at t={t:g}; "
            "increase the lattice half-width L"
        )


class UndefinedDiagnosticError(DNLSEError, ValueError):
    pass


class DegenerateDenominatorError(DNLSEError, ValueError):
    pass


class GridMismatchError(DNLSEError, ValueError):
    pass


class EnsembleInvalidError(DNLSEError, RuntimeError):
    pass


class CheckpointError(DNLSEError, RuntimeError):
    pass


class FitError(DNLSEError, ValueError):
    pass


class FitDomainError(FitError):
    """Non-positive values inside a log-log fit window."""


class InsufficientDataError(FitError):
    pass


class DegenerateCollapseError(DNLSEError, ValueError):
    pass
