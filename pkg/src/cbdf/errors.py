"""Exception types raised by the cbdf package."""


class CbdfError(Exception):
    """Base class for all cbdf errors."""


class SingularMatrix(CbdfError):
    """A pivot fell below the singularity threshold during elimination."""


class DegreeZero(CbdfError):
    """Root finding requested for a constant polynomial."""


class NoConvergence(CbdfError):
    """An iteration exhausted its budget without meeting its tolerance."""


class SingularJacobian(CbdfError):
    """The Newton correction matrix is numerically singular."""


class OrderOutOfRange(CbdfError):
    """Requested scheme order outside the supported range."""


class DuplicateNode(CbdfError):
    """Two interpolation nodes coincide within tolerance."""


class DuplicateEps(CbdfError):
    """Two scaled node offsets coincide within tolerance, or one is zero."""


class NoAdmissibleRoot(CbdfError):
    """No sub-step fraction with positive real part exists for these ratios."""


class DegenerateDenominator(CbdfError):
    """A closed-form denominator vanished; weights are not defined here."""


class PoleEvaluation(CbdfError):
    """Closed-form expression evaluated at (or too close to) one of its poles."""


class DegenerateImaginaryPart(CbdfError):
    """The imaginary part entering the error constant is numerically zero."""


class EmptySector(CbdfError):
    """No stable sector exists even at vanishing half-angle."""


class DomainError(CbdfError):
    """Function argument outside its real domain."""


class UnknownProblem(CbdfError):
    """No builtin test problem with the requested name."""


class MissingExactSolution(CbdfError):
    """The requested operation needs an exact solution the problem lacks."""
