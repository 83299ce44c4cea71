"""Exception hierarchy.

Validation problems derive from ``ValueError``; numerical failures of the
solvers derive from :class:`NumericalFailure` so the CLI can map them to
distinct exit codes.
"""

from __future__ import annotations


class MinklabError(Exception):
    """Base class for all package errors."""

    code = "error"

    def to_json(self) -> dict:
        return {"error": self.code, "message": str(self)}


class NumericalFailure(MinklabError, RuntimeError):
    code = "numerical_failure"


# symmetry
class NotOrthogonal(MinklabError, ValueError):
    code = "not_orthogonal"


class ClosureOverflow(MinklabError, RuntimeError):
    code = "closure_overflow"


class UnknownGroup(MinklabError, ValueError):
    code = "unknown_group"


class DegenerateOrbit(MinklabError, ValueError):
    code = "degenerate_orbit"


# bodies
class DegenerateHull(MinklabError, ValueError):
    code = "degenerate_hull"


class OriginNotInterior(MinklabError, ValueError):
    code = "origin_not_interior"


class Unbounded(MinklabError, ValueError):
    code = "unbounded"


# quadrature
class NonpositiveSupport(MinklabError, ValueError):
    code = "nonpositive_support"


class NonpositiveRadial(MinklabError, ValueError):
    code = "nonpositive_radial"


class DegenerateSimplex(MinklabError, ValueError):
    code = "degenerate_simplex"


# optimize
class NonSpanningGroup(MinklabError, ValueError):
    code = "non_spanning_group"


class NoImprovement(NumericalFailure):
    code = "no_improvement"


class BoundaryStuck(NumericalFailure):
    code = "boundary_stuck"


# planar
class NewtonDiverged(NumericalFailure):
    code = "newton_diverged"


class NonPositive(NumericalFailure):
    code = "non_positive"


class BranchLost(NumericalFailure):
    code = "branch_lost"


# regular
class UnknownSymbol(MinklabError, ValueError):
    code = "unknown_symbol"


class InvalidFlag(MinklabError, ValueError):
    code = "invalid_flag"


class OutsideSimplex(MinklabError, ValueError):
    code = "outside_simplex"


class SampleViolation(MinklabError, AssertionError):
    code = "sample_violation"

    def __init__(self, message: str, body: dict | None = None):
        super().__init__(message)
        self.body = body

    def to_json(self) -> dict:
        out = super().to_json()
        out["body"] = self.body
        return out


# cli
class ConfigError(MinklabError, ValueError):
    code = "config_error"

    def __init__(self, message: str, pointer: str = ""):
        super().__init__(message)
        self.pointer = pointer

    def to_json(self) -> dict:
        out = super().to_json()
        out["pointer"] = self.pointer
        return out
