"""Exception types raised across the package."""


class QbmeError(Exception):
    """Base class for all package errors."""


class NotHermitian(QbmeError, ValueError):
    pass


class NotPSD(QbmeError, ValueError):
    pass


class TraceNotOne(QbmeError, ValueError):
    pass


class DimensionMismatch(QbmeError, ValueError):
    pass


class NotNormalized(QbmeError, ValueError):
    pass


class NotUnitary(QbmeError, ValueError):
    pass


class DegenerateQR(QbmeError, RuntimeError):
    pass


class RankOutOfRange(QbmeError, ValueError):
    pass


class CertificationFailed(QbmeError, ValueError):
    pass


class ZeroProbabilityOutcome(QbmeError, ValueError):
    """The observed outcome has (numerically) zero probability under the posterior."""


class DegenerateEnsemble(QbmeError, ValueError):
    pass


class OutcomeOutOfRange(QbmeError, IndexError):
    pass


class IdentityViolated(QbmeError, ArithmeticError):
    """Two routes to the same PGM quantity disagree beyond tolerance."""
