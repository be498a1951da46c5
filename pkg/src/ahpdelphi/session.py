"""The negotiation workflow as an event-sourced state machine.

Stakeholders submit judgment matrices during elicitation (inconsistent
matrices bounce with a refinement report), an agreement gate decides
whether negotiation is needed, and up to three feedback rounds follow
before the individual priorities are aggregated into the final utility
function.

Every state change is validated first, then recorded as a JSON-ready
event and applied through a pure transition function, so replaying a
session's event log reconstructs the exact same state, including the
final priority vector bit for bit. Timestamps always come from the
caller; this module never reads a clock.

Legal phase transitions:

    Elicitation -> Round1            (agreement gate failed)
    Elicitation -> Aggregation       (agreement gate passed on first check)
    Round1 -> Round2 -> Round3 -> Aggregation -> Closed

Entering Aggregation finalizes the session automatically.
"""

from __future__ import annotations

import hashlib
import random
import string
from dataclasses import dataclass
from enum import Enum
from statistics import median
from typing import Iterable, Mapping, Sequence

from .ahp import (
    ComparisonMatrix,
    ConsistencyReport,
    PriorityVector,
    analyze,
    consistency,
)
from .attributes import QualityAttribute, check_unique_ids
from .consensus import (
    ConcordanceReport,
    Ranking,
    StakeholderWeight,
    aggregate_aip,
    concordance,
    ranking_conflicts,
    ranking_from_priorities,
)
from .errors import (
    DelegationError,
    IncompleteRoundError,
    MatrixRejectedError,
    PhaseError,
    SessionError,
    UnknownStakeholderError,
)
from .utility import PreferenceFunction, UtilityFunction, UtilityMode, build_utility

EVENT_SCHEMA = "session-event/1"
SNAPSHOT_SCHEMA = "session-snapshot/1"


class Phase(str, Enum):
    ELICITATION = "Elicitation"
    ROUND1 = "Round1"
    ROUND2 = "Round2"
    ROUND3 = "Round3"
    AGGREGATION = "Aggregation"
    CLOSED = "Closed"


#: Phases that accept matrix submissions (elicitation plus every
#: negotiation round; matrices may be revised in any round).
SUBMISSION_PHASES = frozenset(
    {Phase.ELICITATION, Phase.ROUND1, Phase.ROUND2, Phase.ROUND3}
)

NEGOTIATION_PHASES = frozenset({Phase.ROUND1, Phase.ROUND2, Phase.ROUND3})

_PRIOR_ROUND = {Phase.ROUND2: Phase.ROUND1, Phase.ROUND3: Phase.ROUND2}


class RationaleKind(str, Enum):
    ANSWER = "answer"
    COMMENT = "comment"
    DISSENT = "dissent"
    ATTRIBUTE_SUGGESTION = "attribute_suggestion"


class AbstentionKind(str, Enum):
    DONT_KNOW = "dont_know"
    DONT_CARE = "dont_care"


@dataclass(frozen=True)
class Abstention:
    attribute_id: str
    kind: AbstentionKind

    def to_dict(self) -> dict:
        return {"attribute_id": self.attribute_id, "kind": self.kind.value}


@dataclass(frozen=True)
class Participant:
    stakeholder_id: str
    weight: float
    pseudonym: str


@dataclass(frozen=True)
class SessionConfig:
    """Thresholds and utility settings frozen at session creation."""

    cr_limit: float = 0.10
    w_threshold: float = 0.7
    triple_threshold: float = 2.0
    tie_epsilon: float = 1e-9
    utility_mode: UtilityMode = UtilityMode.PREFERENCE_NORMALIZED
    preferences: Mapping[str, PreferenceFunction] | None = None
    prompts: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if not (0 < self.w_threshold <= 1):
            raise ValueError("agreement threshold must be in (0, 1]")
        if not isinstance(self.utility_mode, UtilityMode):
            object.__setattr__(self, "utility_mode", UtilityMode(self.utility_mode))
        object.__setattr__(self, "prompts", tuple(self.prompts))

    def to_dict(self) -> dict:
        return {
            "cr_limit": self.cr_limit,
            "w_threshold": self.w_threshold,
            "triple_threshold": self.triple_threshold,
            "tie_epsilon": self.tie_epsilon,
            "utility_mode": self.utility_mode.value,
            "preferences": (
                None
                if self.preferences is None
                else {aid: pf.to_dict() for aid, pf in self.preferences.items()}
            ),
            "prompts": list(self.prompts),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SessionConfig":
        prefs = data.get("preferences")
        return cls(
            cr_limit=data.get("cr_limit", 0.10),
            w_threshold=data.get("w_threshold", 0.7),
            triple_threshold=data.get("triple_threshold", 2.0),
            tie_epsilon=data.get("tie_epsilon", 1e-9),
            utility_mode=UtilityMode(data.get("utility_mode", "preference_normalized")),
            preferences=(
                None
                if prefs is None
                else {aid: PreferenceFunction.from_dict(d) for aid, d in prefs.items()}
            ),
            prompts=tuple(data.get("prompts", ())),
        )


@dataclass(frozen=True)
class Submission:
    """One stakeholder's accepted judgment matrix for one phase.

    Only consistent matrices become submissions; rejection happens before
    anything is stored. Abstained attributes are excluded from the matrix,
    which covers the remaining attributes in declaration order.
    """

    stakeholder_id: str
    matrix: ComparisonMatrix
    abstentions: tuple[Abstention, ...]
    derived_priorities: PriorityVector
    consistency_report: ConsistencyReport
    submitted_at: float
    round: Phase

    def abstained_ids(self) -> tuple[str, ...]:
        return tuple(a.attribute_id for a in self.abstentions)


@dataclass(frozen=True)
class Rationale:
    """A pseudonymized statement attached to a negotiation round."""

    author_pseudonym: str
    round: Phase
    kind: RationaleKind
    body: str
    prompt: str = ""
    attribute_ids: tuple[str, ...] = ()
    proposed_attribute: QualityAttribute | None = None

    def to_dict(self) -> dict:
        data = {
            "author_pseudonym": self.author_pseudonym,
            "round": self.round.value,
            "kind": self.kind.value,
            "body": self.body,
            "prompt": self.prompt,
            "attribute_ids": list(self.attribute_ids),
        }
        if self.proposed_attribute is not None:
            data["proposed_attribute"] = self.proposed_attribute.to_dict()
        return data


@dataclass(frozen=True)
class Delegation:
    delegator_id: str
    delegate_id: str
    start_phase: Phase

    def to_dict(self) -> dict:
        return {
            "delegator_id": self.delegator_id,
            "delegate_id": self.delegate_id,
            "start_phase": self.start_phase.value,
        }


@dataclass(frozen=True)
class SessionResult:
    """Immutable outcome of a closed session."""

    priorities: PriorityVector
    utility: UtilityFunction
    dissents: tuple[Rationale, ...]

    def to_dict(self) -> dict:
        return {
            "priorities": self.priorities.to_dict(),
            "utility": self.utility.to_dict(),
            "dissents": [r.to_dict() for r in self.dissents],
        }


def _pseudonym_labels(count: int) -> list[str]:
    """Participant A, Participant B, ... extending AA, AB, ... as needed."""
    labels = []
    letters = string.ascii_uppercase
    for i in range(count):
        name = ""
        n = i
        while True:
            name = letters[n % 26] + name
            n = n // 26 - 1
            if n < 0:
                break
        labels.append(f"Participant {name}")
    return labels


def _default_pseudonym_seed(session_id: str) -> int:
    digest = hashlib.sha256(session_id.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


class DelphiSession:
    """One negotiation: participants, rounds, submissions, and the result.

    All mutating methods validate, then record an event; events accumulate
    until the caller drains them with :meth:`take_new_events`. Mutations
    must be serialized per session by the caller; reads may be concurrent.
    """

    def __init__(self) -> None:
        # populated exclusively through events; use create() or replay()
        self.session_id: str = ""
        self.attributes: tuple[QualityAttribute, ...] = ()
        self.participants: dict[str, Participant] = {}
        self.config: SessionConfig = SessionConfig()
        self.phase: Phase = Phase.ELICITATION
        self.pseudonym_seed: int = 0
        self.submissions: dict[Phase, dict[str, Submission]] = {
            p: {} for p in SUBMISSION_PHASES
        }
        self.rationales: list[tuple[str, Rationale]] = []
        self.delegations: dict[str, Delegation] = {}
        self.gate_reports: dict[Phase, ConcordanceReport] = {}
        self.result: SessionResult | None = None
        self._seq = 0
        self._new_events: list[dict] = []

    # -- construction -------------------------------------------------

    @classmethod
    def create(
        cls,
        session_id: str,
        attributes: Sequence[QualityAttribute],
        participants: Sequence[tuple[str, float]],
        config: SessionConfig | None = None,
        *,
        at: float = 0.0,
        pseudonym_seed: int | None = None,
    ) -> "DelphiSession":
        """Open a session in the elicitation phase.

        Stakeholder weights are stored as given and normalized on use.
        ``pseudonym_seed`` drives the pseudonym shuffle; it defaults to a
        hash of the session id, and services should pass a secret random
        value instead.
        """
        if len(attributes) < 2:
            raise SessionError("a session needs at least 2 attributes to compare")
        check_unique_ids(attributes)
        if not participants:
            raise SessionError("a session needs at least 1 participant")
        ids = [sid for sid, _ in participants]
        if len(set(ids)) != len(ids):
            raise SessionError("duplicate participant ids")
        for sid, weight in participants:
            if weight <= 0:
                raise SessionError(f"weight for {sid!r} must be positive")
        config = config or SessionConfig()
        if config.preferences is not None:
            attr_ids = {a.id for a in attributes}
            unknown = set(config.preferences) - attr_ids
            if unknown:
                raise SessionError(f"preferences for unknown attributes: {sorted(unknown)}")
        if pseudonym_seed is None:
            pseudonym_seed = _default_pseudonym_seed(session_id)

        session = cls()
        session._emit(
            "session_created",
            {
                "session_id": session_id,
                "attributes": [a.to_dict() for a in attributes],
                "participants": [
                    {"stakeholder_id": sid, "weight": weight}
                    for sid, weight in participants
                ],
                "config": config.to_dict(),
                "pseudonym_seed": pseudonym_seed,
            },
            at,
        )
        return session

    @classmethod
    def replay(cls, events: Iterable[dict]) -> "DelphiSession":
        """Rebuild a session by folding its event log."""
        session = cls()
        applied = False
        for event in events:
            session.apply_event(event)
            applied = True
        if not applied:
            raise SessionError("cannot replay an empty event log")
        return session

    def apply_event(self, event: dict) -> None:
        """Apply one previously recorded event (recovery/replay path)."""
        if event.get("schema") != EVENT_SCHEMA:
            raise SessionError(f"unknown event schema: {event.get('schema')!r}")
        expected = self._seq + 1
        if event["seq"] != expected:
            raise SessionError(
                f"event log gap: expected seq {expected}, got {event['seq']}"
            )
        self._apply(event)
        self._seq = event["seq"]

    def take_new_events(self) -> list[dict]:
        """Drain events recorded since the last call (for persistence)."""
        events, self._new_events = self._new_events, []
        return events

    @property
    def last_seq(self) -> int:
        return self._seq

    # -- participant helpers -------------------------------------------

    def participant(self, stakeholder_id: str) -> Participant:
        try:
            return self.participants[stakeholder_id]
        except KeyError:
            raise UnknownStakeholderError(
                f"unknown stakeholder: {stakeholder_id!r}"
            ) from None

    def is_delegating(self, stakeholder_id: str) -> bool:
        return stakeholder_id in self.delegations

    def active_participants(self) -> list[Participant]:
        """Participants currently voting themselves (not delegating)."""
        return [
            p for sid, p in self.participants.items() if sid not in self.delegations
        ]

    def resolve_delegate(self, stakeholder_id: str) -> str:
        """Terminal delegate of a delegation chain (acyclic by construction)."""
        seen = set()
        current = stakeholder_id
        while current in self.delegations:
            if current in seen:
                raise DelegationError("delegation cycle detected")
            seen.add(current)
            current = self.delegations[current].delegate_id
        return current

    def effective_weights(self) -> dict[str, float]:
        """Per active participant: own weight plus all delegated weight."""
        weights = {p.stakeholder_id: 0.0 for p in self.active_participants()}
        for sid, participant in self.participants.items():
            weights[self.resolve_delegate(sid)] += participant.weight
        return weights

    def attribute_ids(self) -> tuple[str, ...]:
        return tuple(a.id for a in self.attributes)

    def latest_submission(self, stakeholder_id: str) -> Submission | None:
        """Most recent accepted submission across all phases."""
        for phase in (Phase.ROUND3, Phase.ROUND2, Phase.ROUND1, Phase.ELICITATION):
            sub = self.submissions[phase].get(stakeholder_id)
            if sub is not None:
                return sub
        return None

    def dissent_of(self, stakeholder_id: str) -> Rationale | None:
        pseudonym = self.participant(stakeholder_id).pseudonym
        for sid, rationale in reversed(self.rationales):
            if sid == stakeholder_id and rationale.kind is RationaleKind.DISSENT:
                assert rationale.author_pseudonym == pseudonym
                return rationale
        return None

    def suggestion_queue(self) -> list[Rationale]:
        """New-attribute suggestions awaiting facilitator review."""
        return [
            r
            for _, r in self.rationales
            if r.kind is RationaleKind.ATTRIBUTE_SUGGESTION
        ]

    # -- operations -----------------------------------------------------

    def submit_matrix(
        self,
        stakeholder_id: str,
        matrix: ComparisonMatrix,
        abstentions: Sequence[Abstention] = (),
        *,
        at: float = 0.0,
    ) -> Submission:
        """Accept a consistent judgment matrix, or reject with the report.

        The matrix must cover the session attributes minus the abstained
        ones, in declaration order. A consistency ratio above the session
        limit raises :class:`MatrixRejectedError` carrying the full report
        (offending triples included) and records nothing. An accepted
        submission replaces any earlier one by the same stakeholder in the
        current phase.
        """
        if self.phase not in SUBMISSION_PHASES:
            raise PhaseError(f"submissions are not accepted in phase {self.phase.value}")
        self.participant(stakeholder_id)
        if self.is_delegating(stakeholder_id):
            raise DelegationError(
                f"{stakeholder_id!r} has delegated their vote and cannot submit"
            )
        abstentions = tuple(abstentions)
        attr_ids = self.attribute_ids()
        seen_abstained = set()
        for abst in abstentions:
            if abst.attribute_id not in attr_ids:
                raise SessionError(f"abstention for unknown attribute: {abst.attribute_id!r}")
            if abst.attribute_id in seen_abstained:
                raise SessionError(f"duplicate abstention: {abst.attribute_id!r}")
            seen_abstained.add(abst.attribute_id)
        remaining = tuple(aid for aid in attr_ids if aid not in seen_abstained)
        if len(remaining) < 2:
            raise SessionError(
                "abstentions leave fewer than 2 attributes; nothing to compare"
            )
        if matrix.attribute_ids != remaining:
            raise SessionError(
                f"matrix must cover {list(remaining)} in order, got {list(matrix.attribute_ids)}"
            )
        report = consistency(matrix, self.config.triple_threshold)
        if report.cr > self.config.cr_limit:
            raise MatrixRejectedError(report)

        self._emit(
            "matrix_submitted",
            {
                "stakeholder_id": stakeholder_id,
                "matrix": matrix.to_dict(),
                "abstentions": [a.to_dict() for a in abstentions],
            },
            at,
        )
        return self.submissions[self.phase][stakeholder_id]

    def check_agreement_gate(self, *, at: float = 0.0) -> ConcordanceReport:
        """Compute agreement across the current phase's submissions.

        Every active participant must have submitted in the current phase.
        Rankings are derived from each submission's priorities with the
        stakeholder's abstained attributes ranked last. A single active
        participant trivially agrees with themselves. The report is
        recorded; after elicitation it decides whether the session may
        aggregate directly or must open the first negotiation round.
        """
        if self.phase not in SUBMISSION_PHASES:
            raise PhaseError(f"no agreement gate in phase {self.phase.value}")
        missing = [
            p.stakeholder_id
            for p in self.active_participants()
            if p.stakeholder_id not in self.submissions[self.phase]
        ]
        if missing:
            raise SessionError(f"missing submissions from: {sorted(missing)}")
        self._emit("agreement_checked", {"phase": self.phase.value}, at)
        return self.gate_reports[self.phase]

    def current_concordance(self) -> ConcordanceReport:
        """Agreement over the latest submissions of all active participants
        (read-only; unlike the gate this never records anything)."""
        rankings = [
            self._full_ranking(sub)
            for sub in self._latest_active_submissions().values()
        ]
        return self._concordance_of(rankings)

    def post_rationale(
        self,
        stakeholder_id: str,
        kind: RationaleKind,
        body: str,
        *,
        prompt: str = "",
        attribute_ids: Sequence[str] = (),
        proposed_attribute: QualityAttribute | None = None,
        at: float = 0.0,
    ) -> Rationale:
        """Record an answer, comment, dissent, or attribute suggestion.

        Rationales are stored under the author's pseudonym and surface to
        other participants only through feedback bundles. Dissent is legal
        only in the third round and requires a non-empty body; attribute
        suggestions carry the proposed attribute and queue for facilitator
        review without touching the live attribute set.
        """
        kind = RationaleKind(kind)
        if self.phase not in NEGOTIATION_PHASES:
            raise PhaseError(f"rationales are not accepted in phase {self.phase.value}")
        self.participant(stakeholder_id)
        if self.is_delegating(stakeholder_id):
            raise DelegationError(
                f"{stakeholder_id!r} has delegated their vote and cannot post"
            )
        if kind is RationaleKind.DISSENT and self.phase is not Phase.ROUND3:
            raise PhaseError("dissent may only be declared in the third round")
        if kind is RationaleKind.DISSENT and not body.strip():
            raise SessionError("a dissent declaration requires a rationale body")
        if kind is RationaleKind.ATTRIBUTE_SUGGESTION and proposed_attribute is None:
            raise SessionError("an attribute suggestion must carry the proposed attribute")
        if kind is not RationaleKind.ATTRIBUTE_SUGGESTION and proposed_attribute is not None:
            raise SessionError("only attribute suggestions may carry an attribute payload")
        attr_ids = self.attribute_ids()
        for aid in attribute_ids:
            if aid not in attr_ids:
                raise SessionError(f"rationale references unknown attribute: {aid!r}")

        payload = {
            "stakeholder_id": stakeholder_id,
            "kind": kind.value,
            "body": body,
            "prompt": prompt,
            "attribute_ids": list(attribute_ids),
        }
        if proposed_attribute is not None:
            payload["proposed_attribute"] = proposed_attribute.to_dict()
        self._emit("rationale_posted", payload, at)
        return self.rationales[-1][1]

    def delegate(
        self, delegator_id: str, delegate_id: str, *, at: float = 0.0
    ) -> Delegation:
        """Hand the delegator's vote to another participant (proxy voting).

        While active, the delegator submits nothing and their weight flows
        to the end of the delegation chain; chains must stay acyclic.
        """
        if self.phase in (Phase.AGGREGATION, Phase.CLOSED):
            raise PhaseError(f"cannot delegate in phase {self.phase.value}")
        self.participant(delegator_id)
        self.participant(delegate_id)
        if delegator_id == delegate_id:
            raise DelegationError("cannot delegate to oneself")
        if delegator_id in self.delegations:
            raise DelegationError(f"{delegator_id!r} already delegates")
        # walking from the proposed delegate must not lead back
        current = delegate_id
        while current in self.delegations:
            current = self.delegations[current].delegate_id
            if current == delegator_id:
                raise DelegationError("delegation would create a cycle")
        self._emit(
            "delegation_created",
            {"delegator_id": delegator_id, "delegate_id": delegate_id},
            at,
        )
        return self.delegations[delegator_id]

    def revoke_delegation(self, delegator_id: str, *, at: float = 0.0) -> None:
        """End a delegation; the delegator participates themselves again."""
        if self.phase in (Phase.AGGREGATION, Phase.CLOSED):
            raise PhaseError(f"cannot revoke in phase {self.phase.value}")
        self.participant(delegator_id)
        if delegator_id not in self.delegations:
            raise DelegationError(f"{delegator_id!r} has no active delegation")
        self._emit("delegation_revoked", {"delegator_id": delegator_id}, at)

    def feedback_bundle(self, stakeholder_id: str) -> dict:
        """Anonymized view for one participant in rounds 2 and 3.

        Contains the prior round's rationales (pseudonymized), the current
        concordance, the conflicting attribute pairs with the requester's
        own side marked, and the anonymous per-attribute distribution of
        priorities. Never contains stakeholder ids.
        """
        if self.phase not in (Phase.ROUND2, Phase.ROUND3):
            raise PhaseError(f"no feedback bundle in phase {self.phase.value}")
        self.participant(stakeholder_id)
        if self.is_delegating(stakeholder_id):
            raise DelegationError(
                f"{stakeholder_id!r} has delegated their vote; no active participation"
            )
        prior = _PRIOR_ROUND[self.phase]
        prior_rationales = [
            r.to_dict() for _, r in self.rationales if r.round is prior
        ]

        latest = self._latest_active_submissions()
        labeled_rankings = [
            (self.participants[sid].pseudonym, self._full_ranking(sub))
            for sid, sub in latest.items()
        ]
        report = self._concordance_of([r for _, r in labeled_rankings])
        own_pseudonym = self.participants[stakeholder_id].pseudonym
        conflicts = []
        if len(labeled_rankings) >= 2:
            for conflict in ranking_conflicts(labeled_rankings):
                own_side = None
                if own_pseudonym in conflict.prefers_a:
                    own_side = "a"
                elif own_pseudonym in conflict.prefers_b:
                    own_side = "b"
                entry = conflict.to_dict()
                entry["requester_prefers"] = own_side
                conflicts.append(entry)

        distribution = {}
        for aid in self.attribute_ids():
            values = [
                sub.derived_priorities.as_mapping()[aid]
                for sub in latest.values()
                if aid in sub.derived_priorities.as_mapping()
            ]
            distribution[aid] = (
                None
                if not values
                else {
                    "min": min(values),
                    "median": float(median(values)),
                    "max": max(values),
                }
            )

        return {
            "phase": self.phase.value,
            "prompts": list(self.config.prompts),
            "prior_round_rationales": prior_rationales,
            "concordance": report.to_dict(),
            "conflicts": conflicts,
            "priority_distribution": distribution,
        }

    def advance_round(self, *, at: float = 0.0) -> Phase:
        """Facilitator action: move to the next phase once inputs are complete.

        Elicitation requires submissions from every active participant and
        a recorded agreement-gate check, which selects between Round1 and
        direct aggregation. Round1 requires every active participant to
        have answered the round's open questions; Round2 requires revised
        (or re-confirmed) submissions; Round3 requires a submission or a
        dissent from each. Entering Aggregation finalizes automatically.
        """
        if self.phase in (Phase.AGGREGATION, Phase.CLOSED):
            raise PhaseError(f"cannot advance from phase {self.phase.value}")

        if self.phase is Phase.ELICITATION:
            self._require_phase_submissions(Phase.ELICITATION)
            gate = self.gate_reports.get(Phase.ELICITATION)
            if gate is None:
                raise PhaseError(
                    "agreement gate has not been checked for this phase"
                )
            target = Phase.AGGREGATION if gate.agreed else Phase.ROUND1
        elif self.phase is Phase.ROUND1:
            answered = {
                sid
                for sid, r in self.rationales
                if r.round is Phase.ROUND1 and r.kind is RationaleKind.ANSWER
            }
            missing = [
                p.stakeholder_id
                for p in self.active_participants()
                if p.stakeholder_id not in answered
            ]
            if missing:
                raise IncompleteRoundError(
                    f"waiting for round-1 answers from: {sorted(missing)}"
                )
            target = Phase.ROUND2
        elif self.phase is Phase.ROUND2:
            self._require_phase_submissions(Phase.ROUND2)
            target = Phase.ROUND3
        else:  # ROUND3
            dissented = {
                sid
                for sid, r in self.rationales
                if r.round is Phase.ROUND3 and r.kind is RationaleKind.DISSENT
            }
            missing = [
                p.stakeholder_id
                for p in self.active_participants()
                if p.stakeholder_id not in self.submissions[Phase.ROUND3]
                and p.stakeholder_id not in dissented
            ]
            if missing:
                raise IncompleteRoundError(
                    f"waiting for round-3 revisions or dissents from: {sorted(missing)}"
                )
            target = Phase.AGGREGATION

        if target is Phase.AGGREGATION:
            # prove the aggregate is computable before committing the
            # transition, so a failed finalize cannot strand the session
            self._check_finalizable()
        self._emit("round_advanced", {"from": self.phase.value, "to": target.value}, at)
        if target is Phase.AGGREGATION:
            self.finalize_session(at=at)
        return self.phase

    def finalize_session(self, *, at: float = 0.0) -> SessionResult:
        """Aggregate the final submissions and close the session.

        Dissenters' latest submissions still count in the aggregate; their
        dissent declarations are attached to the result. The resulting
        priorities and utility function are immutable afterwards.
        """
        if self.phase is not Phase.AGGREGATION:
            raise PhaseError(
                f"finalize requires the aggregation phase, currently {self.phase.value}"
            )
        self._check_finalizable()
        self._emit("session_finalized", {}, at)
        assert self.result is not None
        return self.result

    def _check_finalizable(self) -> None:
        latest = self._latest_active_submissions()
        for participant in self.active_participants():
            sid = participant.stakeholder_id
            if sid not in latest and self.dissent_of(sid) is None:
                raise SessionError(
                    f"{sid!r} has neither a final submission nor a dissent"
                )
        if not latest:
            raise SessionError("no submissions to aggregate")
        # raises AggregationError if an attribute was abstained by everyone
        self._aggregate(latest)

    # -- internals ------------------------------------------------------

    def _require_phase_submissions(self, phase: Phase) -> None:
        missing = [
            p.stakeholder_id
            for p in self.active_participants()
            if p.stakeholder_id not in self.submissions[phase]
        ]
        if missing:
            raise IncompleteRoundError(
                f"waiting for {phase.value} submissions from: {sorted(missing)}"
            )

    def _latest_active_submissions(self) -> dict[str, Submission]:
        latest = {}
        for participant in self.active_participants():
            sub = self.latest_submission(participant.stakeholder_id)
            if sub is not None:
                latest[participant.stakeholder_id] = sub
        return latest

    def _full_ranking(self, submission: Submission) -> Ranking:
        """Ranking over all session attributes; abstained ones rank last."""
        ranked = ranking_from_priorities(
            submission.derived_priorities, self.config.tie_epsilon
        )
        order = sorted(
            range(len(ranked.attribute_ids)), key=lambda i: ranked.ranks[i]
        )
        sequence = [ranked.attribute_ids[i] for i in order]
        abstained = [
            aid for aid in self.attribute_ids() if aid in set(submission.abstained_ids())
        ]
        sequence.extend(abstained)
        attr_ids = self.attribute_ids()
        ranks = [0] * len(attr_ids)
        for position, aid in enumerate(sequence, start=1):
            ranks[attr_ids.index(aid)] = position
        return Ranking(attr_ids, tuple(ranks))

    def _concordance_of(self, rankings: list[Ranking]) -> ConcordanceReport:
        if len(rankings) < 2:
            # a single voice (or none) trivially agrees with itself
            n = len(self.attribute_ids())
            ranks = rankings[0].ranks if rankings else tuple(range(1, n + 1))
            sums = tuple(float(r) for r in ranks)
            return ConcordanceReport(
                w_coefficient=1.0,
                s=float(sum((r - (n + 1) / 2.0) ** 2 for r in ranks)),
                rank_sums=sums,
                mean_rank_sum=(n + 1) / 2.0,
                agreed=True,
                threshold=self.config.w_threshold,
            )
        return concordance(rankings, self.config.w_threshold)

    def _aggregate(self, latest: dict[str, Submission]) -> tuple[PriorityVector, UtilityFunction]:
        weights = self.effective_weights()
        vectors = [(sid, sub.derived_priorities) for sid, sub in latest.items()]
        abstentions = [
            (sid, aid) for sid, sub in latest.items() for aid in sub.abstained_ids()
        ]
        aggregate = aggregate_aip(
            vectors,
            [StakeholderWeight(sid, weights[sid]) for sid in latest],
            abstentions,
            attribute_ids=self.attribute_ids(),
        )
        preferences = dict(self.config.preferences or {})
        for aid in self.attribute_ids():
            preferences.setdefault(aid, PreferenceFunction.identity())
        utility = build_utility(aggregate, preferences, self.config.utility_mode)
        return aggregate, utility

    def _next_seq(self) -> int:
        return self._seq + 1

    def _emit(self, kind: str, payload: dict, at: float) -> None:
        event = {
            "schema": EVENT_SCHEMA,
            "seq": self._next_seq(),
            "kind": kind,
            "at": at,
            "payload": payload,
        }
        self._apply(event)
        self._seq = event["seq"]
        self._new_events.append(event)

    def _apply(self, event: dict) -> None:
        kind = event["kind"]
        payload = event["payload"]
        at = event["at"]
        if kind == "session_created":
            self._apply_created(payload)
        elif kind == "matrix_submitted":
            matrix = ComparisonMatrix.from_dict(payload["matrix"])
            abstentions = tuple(
                Abstention(a["attribute_id"], AbstentionKind(a["kind"]))
                for a in payload["abstentions"]
            )
            report, priorities = analyze(matrix, self.config.triple_threshold)
            self.submissions[self.phase][payload["stakeholder_id"]] = Submission(
                stakeholder_id=payload["stakeholder_id"],
                matrix=matrix,
                abstentions=abstentions,
                derived_priorities=priorities,
                consistency_report=report,
                submitted_at=at,
                round=self.phase,
            )
        elif kind == "rationale_posted":
            sid = payload["stakeholder_id"]
            proposed = payload.get("proposed_attribute")
            rationale = Rationale(
                author_pseudonym=self.participants[sid].pseudonym,
                round=self.phase,
                kind=RationaleKind(payload["kind"]),
                body=payload["body"],
                prompt=payload.get("prompt", ""),
                attribute_ids=tuple(payload.get("attribute_ids", ())),
                proposed_attribute=(
                    QualityAttribute.from_dict(proposed) if proposed else None
                ),
            )
            self.rationales.append((sid, rationale))
        elif kind == "delegation_created":
            self.delegations[payload["delegator_id"]] = Delegation(
                delegator_id=payload["delegator_id"],
                delegate_id=payload["delegate_id"],
                start_phase=self.phase,
            )
        elif kind == "delegation_revoked":
            del self.delegations[payload["delegator_id"]]
        elif kind == "agreement_checked":
            phase = Phase(payload["phase"])
            rankings = [
                self._full_ranking(self.submissions[phase][p.stakeholder_id])
                for p in self.active_participants()
            ]
            self.gate_reports[phase] = self._concordance_of(rankings)
        elif kind == "round_advanced":
            self.phase = Phase(payload["to"])
        elif kind == "session_finalized":
            latest = self._latest_active_submissions()
            aggregate, utility = self._aggregate(latest)
            dissents = tuple(
                r
                for _, r in self.rationales
                if r.kind is RationaleKind.DISSENT and r.round is Phase.ROUND3
            )
            self.result = SessionResult(aggregate, utility, dissents)
            self.phase = Phase.CLOSED
        else:
            raise SessionError(f"unknown event kind: {kind!r}")

    def _apply_created(self, payload: dict) -> None:
        self.session_id = payload["session_id"]
        self.attributes = tuple(
            QualityAttribute.from_dict(a) for a in payload["attributes"]
        )
        self.config = SessionConfig.from_dict(payload["config"])
        self.pseudonym_seed = payload["pseudonym_seed"]
        entries = payload["participants"]
        labels = _pseudonym_labels(len(entries))
        random.Random(self.pseudonym_seed).shuffle(labels)
        self.participants = {
            entry["stakeholder_id"]: Participant(
                stakeholder_id=entry["stakeholder_id"],
                weight=float(entry["weight"]),
                pseudonym=labels[idx],
            )
            for idx, entry in enumerate(entries)
        }
        self.phase = Phase.ELICITATION

    # -- snapshots ------------------------------------------------------

    def to_state(self) -> dict:
        """Materialized state for snapshot files; lossless via from_state."""
        state = {
            "schema": SNAPSHOT_SCHEMA,
            "seq": self._seq,
            "session_id": self.session_id,
            "attributes": [a.to_dict() for a in self.attributes],
            "participants": [
                {
                    "stakeholder_id": p.stakeholder_id,
                    "weight": p.weight,
                    "pseudonym": p.pseudonym,
                }
                for p in self.participants.values()
            ],
            "config": self.config.to_dict(),
            "pseudonym_seed": self.pseudonym_seed,
            "phase": self.phase.value,
            "submissions": {
                phase.value: {
                    sid: {
                        "matrix": sub.matrix.to_dict(),
                        "abstentions": [a.to_dict() for a in sub.abstentions],
                        "priorities": sub.derived_priorities.to_dict(),
                        "consistency": sub.consistency_report.to_dict(),
                        "submitted_at": sub.submitted_at,
                    }
                    for sid, sub in by_phase.items()
                }
                for phase, by_phase in self.submissions.items()
                if by_phase
            },
            "rationales": [
                [sid, r.to_dict()] for sid, r in self.rationales
            ],
            "delegations": {
                sid: d.to_dict() for sid, d in self.delegations.items()
            },
            "gate_reports": {
                phase.value: report.to_dict()
                for phase, report in self.gate_reports.items()
            },
            "result": None if self.result is None else self.result.to_dict(),
        }
        return state

    @classmethod
    def from_state(cls, state: dict) -> "DelphiSession":
        if state.get("schema") != SNAPSHOT_SCHEMA:
            raise SessionError(f"unknown snapshot schema: {state.get('schema')!r}")
        session = cls()
        session._seq = state["seq"]
        session.session_id = state["session_id"]
        session.attributes = tuple(
            QualityAttribute.from_dict(a) for a in state["attributes"]
        )
        session.participants = {
            p["stakeholder_id"]: Participant(
                p["stakeholder_id"], float(p["weight"]), p["pseudonym"]
            )
            for p in state["participants"]
        }
        session.config = SessionConfig.from_dict(state["config"])
        session.pseudonym_seed = state["pseudonym_seed"]
        session.phase = Phase(state["phase"])
        for phase_name, by_phase in state.get("submissions", {}).items():
            phase = Phase(phase_name)
            for sid, data in by_phase.items():
                session.submissions[phase][sid] = Submission(
                    stakeholder_id=sid,
                    matrix=ComparisonMatrix.from_dict(data["matrix"]),
                    abstentions=tuple(
                        Abstention(a["attribute_id"], AbstentionKind(a["kind"]))
                        for a in data["abstentions"]
                    ),
                    derived_priorities=PriorityVector.from_dict(data["priorities"]),
                    consistency_report=ConsistencyReport.from_dict(data["consistency"]),
                    submitted_at=data["submitted_at"],
                    round=phase,
                )
        for sid, rdata in state.get("rationales", []):
            proposed = rdata.get("proposed_attribute")
            session.rationales.append(
                (
                    sid,
                    Rationale(
                        author_pseudonym=rdata["author_pseudonym"],
                        round=Phase(rdata["round"]),
                        kind=RationaleKind(rdata["kind"]),
                        body=rdata["body"],
                        prompt=rdata.get("prompt", ""),
                        attribute_ids=tuple(rdata.get("attribute_ids", ())),
                        proposed_attribute=(
                            QualityAttribute.from_dict(proposed) if proposed else None
                        ),
                    ),
                )
            )
        for sid, ddata in state.get("delegations", {}).items():
            session.delegations[sid] = Delegation(
                delegator_id=ddata["delegator_id"],
                delegate_id=ddata["delegate_id"],
                start_phase=Phase(ddata["start_phase"]),
            )
        for phase_name, rdata in state.get("gate_reports", {}).items():
            session.gate_reports[Phase(phase_name)] = ConcordanceReport(
                w_coefficient=rdata["w_coefficient"],
                s=rdata["s"],
                rank_sums=tuple(rdata["rank_sums"]),
                mean_rank_sum=rdata["mean_rank_sum"],
                agreed=rdata["agreed"],
                threshold=rdata["threshold"],
            )
        result = state.get("result")
        if result is not None:
            session.result = SessionResult(
                priorities=PriorityVector.from_dict(result["priorities"]),
                utility=UtilityFunction.from_dict(result["utility"]),
                dissents=tuple(
                    Rationale(
                        author_pseudonym=r["author_pseudonym"],
                        round=Phase(r["round"]),
                        kind=RationaleKind(r["kind"]),
                        body=r["body"],
                        prompt=r.get("prompt", ""),
                        attribute_ids=tuple(r.get("attribute_ids", ())),
                    )
                    for r in result["dissents"]
                ),
            )
        return session
