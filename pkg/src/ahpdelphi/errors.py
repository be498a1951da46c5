"""Exception types shared across the package."""

from __future__ import annotations


class AhpDelphiError(Exception):
    """Base class for all domain errors raised by this package."""


class InvalidMatrixError(AhpDelphiError):
    """A comparison matrix violates its invariants (shape, diagonal,
    reciprocity, or judgment-scale membership)."""


class ConvergenceError(AhpDelphiError):
    """Power iteration failed to converge within the iteration cap.

    Cannot happen for positive matrices; raised only to surface internal
    errors instead of returning garbage.
    """


class RankingError(AhpDelphiError):
    """Rankings are malformed, mismatched, or too few for the statistic."""


class AggregationError(AhpDelphiError):
    """Priority aggregation is impossible (empty input, missing weight,
    or an attribute abstained by every stakeholder)."""


class UtilityError(AhpDelphiError):
    """A utility function or preference function violates its contract."""


class SessionError(AhpDelphiError):
    """Base class for negotiation-session errors."""


class PhaseError(SessionError):
    """Operation not legal in the session's current phase, or an illegal
    phase transition was requested."""


class IncompleteRoundError(PhaseError):
    """Round advancement requested before the phase's required inputs
    are complete."""


class UnknownStakeholderError(SessionError):
    """Stakeholder id not registered in the session."""


class DelegationError(SessionError):
    """Delegation request is illegal (cycle, double delegation, or an
    operation attempted by a delegating stakeholder)."""


class MatrixRejectedError(SessionError):
    """Submission rejected because the matrix failed the consistency gate.

    Carries the full consistency report, including the offending judgment
    triples, so the stakeholder can refine the matrix.
    """

    def __init__(self, report):
        self.report = report
        super().__init__(
            f"matrix rejected: CR {report.cr:.4f} exceeds the 0.10 limit"
        )
