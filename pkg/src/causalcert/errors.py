"""Exception types shared across the toolkit."""


class CausalCertError(Exception):
    """Base class for all toolkit errors."""


class DuplicateFactorError(CausalCertError):
    """A factor name appears more than once where it must be unique."""


class UnknownFactorError(CausalCertError):
    """An operation referenced a factor name the operator does not carry."""


class DimMismatchError(CausalCertError):
    """Two factors with the same name (or paired labels) disagree in dimension."""


class NotHermitianError(CausalCertError):
    """A matrix that must be Hermitian is not, beyond tolerance."""


class InvalidParamError(CausalCertError):
    """A scenario or constructor parameter is outside its admissible range."""


class ValidationError(CausalCertError):
    """A structural validation (process, instrument, POVM, D-POVM) failed.

    Carries the full report so callers can surface per-constraint residuals.
    """

    def __init__(self, report):
        self.report = report
        super().__init__(str(report))


class SolverError(CausalCertError):
    """The conic solver failed or returned an unusable status."""

    def __init__(self, status, message=""):
        self.status = status
        super().__init__(message or f"solver failed with status {status!r}")


class NotAWitnessError(CausalCertError):
    """A candidate witness family is not in the required dual cone."""


class FrameError(CausalCertError):
    """A quantum-input set is not tomographically complete (singular frame)."""


class InvalidBracketError(CausalCertError):
    """Threshold scan endpoints do not bracket the feasibility boundary."""
