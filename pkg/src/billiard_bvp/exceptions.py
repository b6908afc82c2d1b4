"""Exception hierarchy shared by all modules."""


class BilliardError(Exception):
    """Base class for every error raised by this package."""


class NotOnBoundary(BilliardError, ValueError):
    """A boundary-only query was made at a point off the table boundary."""


class GrazingImpact(BilliardError):
    """The incoming velocity is (nearly) tangent to the boundary.

    The elastic law is not applied in this regime because the motion may
    slide along the boundary, which the model does not cover.
    """

    def __init__(self, message, normal_speed=None):
        super().__init__(message)
        self.normal_speed = normal_speed


class NoImpactBeforeT(BilliardError):
    """The trajectory reaches the horizon without touching the boundary."""


class BracketLost(BilliardError):
    """Bisection could not keep a valid sign bracket."""


class EscalationFailed(BilliardError):
    """Velocity scaling did not produce the requested extra impacts."""


class OriginTooClose(BilliardError):
    """An attainable curve passes too close to the origin for a winding number.

    This is not a failure of the computation: the shell very likely carries a
    solution of the Dirichlet problem near ``theta``.
    """

    def __init__(self, message, min_dist, theta):
        super().__init__(message)
        self.min_dist = min_dist
        self.theta = theta


class MeshBudgetExceeded(BilliardError):
    """Adaptive angular refinement hit its doubling limit."""


class ZeroForce(BilliardError, ValueError):
    """Constant-force reduction requested for a zero force."""


class SchemaError(BilliardError, ValueError):
    """A problem config failed validation; ``errors`` lists every problem."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))
