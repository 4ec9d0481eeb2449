"""Exception types raised by the numerical routines.

Every failure mode that a caller can reasonably branch on gets its own
class; all inherit from :class:`LatticeWaveError` so blanket handling
stays possible.  Constructors accept a message plus optional keyword
diagnostics which are stashed on the instance and appended to ``str()``.
"""

from __future__ import annotations

__all__ = [
    "LatticeWaveError",
    "NoConvergence",
    "SingularJacobian",
    "RankDeficiency",
    "StepUnderflow",
    "NonFiniteState",
    "IrrationalWavenumber",
    "BranchCountMismatch",
    "MatchingAmbiguity",
    "ContourTooClose",
    "ProjectorRankMismatch",
    "MultiplicityMismatch",
    "BranchMissing",
    "AssignmentAmbiguous",
    "DerivativeUnavailable",
    "NormalizationViolated",
    "PacketDispersed",
    "SchemaError",
    "MissingArtifacts",
]


class LatticeWaveError(Exception):
    """Base class for all package errors."""

    def __init__(self, message: str, **diagnostics):
        self.diagnostics = diagnostics
        if diagnostics:
            detail = ", ".join(f"{k}={v!r}" for k, v in sorted(diagnostics.items()))
            message = f"{message} [{detail}]"
        super().__init__(message)


class NoConvergence(LatticeWaveError):
    """An iteration hit its cap without meeting its tolerance."""


class SingularJacobian(LatticeWaveError):
    """A linear solve inside a Newton iteration met a singular matrix."""


class RankDeficiency(LatticeWaveError):
    """A kernel or bordered system has unexpected rank."""


class StepUnderflow(LatticeWaveError):
    """Step-size control shrank below the representable floor."""


class NonFiniteState(LatticeWaveError):
    """A state vector picked up NaN or Inf entries."""


class IrrationalWavenumber(LatticeWaveError):
    """A wavenumber was not supplied as an exact rational p/N."""


class BranchCountMismatch(LatticeWaveError):
    """The critical cluster does not contain the expected branch count."""


class MatchingAmbiguity(LatticeWaveError):
    """Eigenpair continuation could not decide between candidates."""


class ContourTooClose(LatticeWaveError):
    """A spectral contour passes too near a multiplier."""


class ProjectorRankMismatch(LatticeWaveError):
    """A Riesz projector has trace far from the expected integer rank."""


class MultiplicityMismatch(LatticeWaveError):
    """Algebraic multiplicity at the origin differs from the class value."""


class BranchMissing(LatticeWaveError):
    """A requested spectral branch is absent from the computed set."""


class AssignmentAmbiguous(LatticeWaveError):
    """Velocity/speed matching has two near-optimal assignments."""


class DerivativeUnavailable(LatticeWaveError):
    """A parameter derivative was requested along an unsupported direction."""


class NormalizationViolated(LatticeWaveError):
    """A normalization or biorthogonality contract failed its check."""


class PacketDispersed(LatticeWaveError):
    """A wave packet spread beyond measurable width inside the window."""


class SchemaError(LatticeWaveError):
    """Configuration validation failed.

    Collects every violation, not just the first; ``violations`` is a
    list of ``(field_path, message)`` pairs.
    """

    def __init__(self, violations):
        self.violations = list(violations)
        lines = "; ".join(f"{path}: {msg}" for path, msg in self.violations)
        super(LatticeWaveError, self).__init__(
            f"{len(self.violations)} config violation(s): {lines}"
        )
        self.diagnostics = {}


class MissingArtifacts(LatticeWaveError):
    """A pipeline stage's required upstream artifacts are absent."""
