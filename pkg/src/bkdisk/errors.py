"""Exception types shared across the package."""


class BkdiskError(Exception):
    """Base class for all package errors."""


class DegreeOverflow(BkdiskError):
    """An exponent exceeds the declared truncation order."""


class BackendParse(BkdiskError):
    """A coefficient string could not be parsed in the requested backend."""


class BackendMismatch(BkdiskError):
    """Two series with different numeric backends were combined."""


class VarCountMismatch(BkdiskError):
    """Two series with different variable counts were combined."""


class NonpositiveConstantTerm(BkdiskError):
    """series_power requires a strictly positive constant term."""


class ExactBackendFractionalPower(BkdiskError):
    """Fractional exponents are not representable on the exact backend."""


class KTooLarge(BkdiskError):
    """Requested more boundary derivatives than the truncation order holds."""


class NonpositiveMoment(BkdiskError):
    """A moment integral came out non-positive (weight not positive, or
    truncation damage)."""


class AlphaTooSmall(BkdiskError):
    """The height parameter is outside its admissible range."""


class OrderExceedsTable(BkdiskError):
    """A series order was requested beyond the stored moment table."""


class UntrustedTail(BkdiskError):
    """A truncated evaluation carries no usable tail bound."""


class PositivityLost(BkdiskError):
    """A weight stopped being positive on its sample grid."""


class SingularProfile(BkdiskError):
    """The boundary profile makes the requested quantity singular."""


class NonpositiveWeight(BkdiskError):
    """The weight is not positive where a positive value is required."""
