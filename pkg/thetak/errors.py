"""
Exception hierarchy for thetak.

Three families, mapped by the CLI to exit codes:

    UsageError      -> 2   bad names, specs, configs, unsupported requests
    NumericalError  -> 3   quadrature or truncation could not be certified
    DomainError     -> 3   mathematically invalid input reached a kernel
"""


class ThetakError(Exception):
    pass


# ─── Usage ───────────────────────────────────────────────────────────────────

class UsageError(ThetakError):
    pass


class UnknownModelError(UsageError):
    pass


class UnknownGermError(UsageError):
    pass


class SpecSyntaxError(UsageError):
    pass


class ConfigError(UsageError):
    pass


class SpinConditionError(UsageError):
    """Odd weights were supplied where only even (spin) weights are admitted."""
    pass


class NonAdmissibleLabelError(UsageError):
    pass


class UnsupportedPairError(UsageError):
    pass


class UnsupportedOrderError(UsageError):
    pass


class NoncompactModelError(UsageError):
    pass


# ─── Numerics ────────────────────────────────────────────────────────────────

class NumericalError(ThetakError):
    pass


class QuadratureError(NumericalError):
    pass


class TruncationCertificateError(NumericalError):
    pass


# ─── Domain ──────────────────────────────────────────────────────────────────

class DomainError(ThetakError):
    pass


class ZeroConstantTermError(DomainError):
    pass


class PropernessError(DomainError):
    pass


class UnsupportedTermError(DomainError):
    pass


class UnboundedSupportError(DomainError):
    pass


class OperatorOrderError(DomainError):
    pass


class EnumerationBoundError(DomainError):
    pass


class InvalidTestFunctionError(DomainError):
    pass
