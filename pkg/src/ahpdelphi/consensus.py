"""Cross-stakeholder statistics: rank derivation, rank agreement, conflict
detection, and weighted aggregation of individual priorities."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .ahp import PriorityVector
from .errors import AggregationError, RankingError


@dataclass(frozen=True)
class Ranking:
    """A strict ranking of attributes: rank 1 is most important and the
    ranks form a permutation of 1..n (ties are broken before construction)."""

    attribute_ids: tuple[str, ...]
    ranks: tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "attribute_ids", tuple(self.attribute_ids))
        object.__setattr__(self, "ranks", tuple(int(r) for r in self.ranks))
        n = len(self.attribute_ids)
        if len(self.ranks) != n:
            raise RankingError("ranks and attribute ids differ in length")
        if sorted(self.ranks) != list(range(1, n + 1)):
            raise RankingError(f"ranks must be a permutation of 1..{n}: {self.ranks}")

    def rank_of(self, attribute_id: str) -> int:
        return self.ranks[self.attribute_ids.index(attribute_id)]

    def to_dict(self) -> dict:
        return {"attributes": list(self.attribute_ids), "ranks": list(self.ranks)}


@dataclass(frozen=True)
class ConcordanceReport:
    """Agreement among k stakeholder rankings of n attributes.

    ``s`` is the sum of squared deviations of the per-attribute rank sums
    from their mean, and ``w_coefficient`` = 12 s / (k^2 (n^3 - n)), which
    is 1 for identical rankings and 0 when rank sums are all equal.
    """

    w_coefficient: float
    s: float
    rank_sums: tuple[float, ...]
    mean_rank_sum: float
    agreed: bool
    threshold: float

    def to_dict(self) -> dict:
        return {
            "w_coefficient": self.w_coefficient,
            "s": self.s,
            "rank_sums": list(self.rank_sums),
            "mean_rank_sum": self.mean_rank_sum,
            "agreed": self.agreed,
            "threshold": self.threshold,
        }


@dataclass(frozen=True)
class StakeholderWeight:
    """Relative influence of one stakeholder; normalized before use."""

    stakeholder_id: str
    weight: float

    def __post_init__(self) -> None:
        if self.weight <= 0:
            raise AggregationError(
                f"stakeholder weight must be positive: {self.stakeholder_id!r}"
            )


@dataclass(frozen=True)
class PairConflict:
    """An attribute pair ranked in opposite orders by different stakeholders."""

    attribute_a: str
    attribute_b: str
    prefers_a: tuple[str, ...]
    prefers_b: tuple[str, ...]

    def to_dict(self) -> dict:
        return {
            "attribute_a": self.attribute_a,
            "attribute_b": self.attribute_b,
            "prefers_a": list(self.prefers_a),
            "prefers_b": list(self.prefers_b),
        }


def ranking_from_priorities(
    priorities: PriorityVector, tie_epsilon: float = 1e-9
) -> Ranking:
    """Strict ranking from a priority vector, most important first.

    Attributes whose priorities differ by at most ``tie_epsilon`` (chained
    transitively) count as tied; ties resolve by declaration order, with
    the earlier-declared attribute taking the better rank.
    """
    if tie_epsilon < 0:
        raise ValueError("tie epsilon must be >= 0")
    order = sorted(
        range(len(priorities.values)),
        key=lambda i: (-priorities.values[i], i),
    )
    # regroup chained near-ties by declaration order
    resolved: list[int] = []
    group = [order[0]]
    for idx in order[1:]:
        prev = group[-1]
        if priorities.values[prev] - priorities.values[idx] <= tie_epsilon:
            group.append(idx)
        else:
            resolved.extend(sorted(group))
            group = [idx]
    resolved.extend(sorted(group))
    ranks = [0] * len(resolved)
    for position, idx in enumerate(resolved, start=1):
        ranks[idx] = position
    return Ranking(priorities.attribute_ids, tuple(ranks))


def _check_common_attributes(rankings: Sequence[Ranking]) -> tuple[str, ...]:
    if len(rankings) < 2:
        raise RankingError("need at least 2 rankings")
    attrs = rankings[0].attribute_ids
    for r in rankings[1:]:
        if r.attribute_ids != attrs:
            raise RankingError(
                f"rankings cover different attribute sets: {attrs} vs {r.attribute_ids}"
            )
    return attrs


def concordance(rankings: Sequence[Ranking], threshold: float = 0.7) -> ConcordanceReport:
    """Kendall-style concordance of k strict rankings.

    Rank sums R_i are accumulated per attribute, s is the squared deviation
    of the R_i from their mean, and the coefficient is s scaled by its
    maximum k^2 (n^3 - n) / 12. ``agreed`` is set when the coefficient
    reaches ``threshold``.
    """
    if not (0 < threshold <= 1):
        raise RankingError("agreement threshold must be in (0, 1]")
    attrs = _check_common_attributes(rankings)
    n = len(attrs)
    if n < 2:
        raise RankingError("concordance needs at least 2 attributes")
    k = len(rankings)
    rank_sums = [float(sum(r.ranks[i] for r in rankings)) for i in range(n)]
    mean = sum(rank_sums) / n
    s = sum((ri - mean) ** 2 for ri in rank_sums)
    w = 12.0 * s / (k * k * (n**3 - n))
    return ConcordanceReport(
        w_coefficient=w,
        s=s,
        rank_sums=tuple(rank_sums),
        mean_rank_sum=mean,
        agreed=w >= threshold,
        threshold=threshold,
    )


def ranking_conflicts(
    rankings: Sequence[tuple[str, Ranking]]
) -> tuple[PairConflict, ...]:
    """Attribute pairs on which stakeholders disagree about the order.

    Takes (stakeholder label, ranking) pairs so each side of a conflict
    can name its supporters; pass pseudonyms as labels when the output is
    shown to other participants. Pairs ranked identically by everyone are
    omitted, so the result is empty exactly when all rankings agree.
    """
    labels = [label for label, _ in rankings]
    if len(set(labels)) != len(labels):
        raise RankingError("duplicate stakeholder labels")
    attrs = _check_common_attributes([r for _, r in rankings])
    conflicts = []
    for a_idx in range(len(attrs)):
        for b_idx in range(a_idx + 1, len(attrs)):
            prefers_a = tuple(
                label for label, r in rankings if r.ranks[a_idx] < r.ranks[b_idx]
            )
            prefers_b = tuple(
                label for label, r in rankings if r.ranks[a_idx] > r.ranks[b_idx]
            )
            if prefers_a and prefers_b:
                conflicts.append(
                    PairConflict(attrs[a_idx], attrs[b_idx], prefers_a, prefers_b)
                )
    return tuple(conflicts)


def aggregate_aip(
    vectors: Sequence[tuple[str, PriorityVector]],
    weights: Sequence[StakeholderWeight],
    abstentions: Sequence[tuple[str, str]] = (),
    attribute_ids: Sequence[str] | None = None,
) -> PriorityVector:
    """Weighted arithmetic mean of individual priority vectors.

    Each vector covers the attribute set minus that stakeholder's abstained
    attributes. Per attribute, the mean runs over the non-abstaining
    stakeholders with their weights renormalized; the final vector is then
    renormalized to sum 1. ``attribute_ids`` fixes the output order and
    defaults to first appearance across the input vectors.
    """
    if not vectors:
        raise AggregationError("no priority vectors to aggregate")
    weight_by_id = {w.stakeholder_id: w.weight for w in weights}
    missing = [sid for sid, _ in vectors if sid not in weight_by_id]
    if missing:
        raise AggregationError(f"missing weights for stakeholders: {missing}")
    abstained = set(abstentions)

    if attribute_ids is None:
        seen: list[str] = []
        for _, vec in vectors:
            for aid in vec.attribute_ids:
                if aid not in seen:
                    seen.append(aid)
        attribute_ids = seen

    aggregate = []
    for aid in attribute_ids:
        contributions = []
        for sid, vec in vectors:
            if (sid, aid) in abstained:
                continue
            mapping = vec.as_mapping()
            if aid not in mapping:
                raise AggregationError(
                    f"vector for {sid!r} misses attribute {aid!r} without abstaining"
                )
            contributions.append((weight_by_id[sid], mapping[aid]))
        if not contributions:
            raise AggregationError(
                f"attribute {aid!r} was abstained by every stakeholder; "
                "the session must resolve it in negotiation"
            )
        total_weight = sum(w for w, _ in contributions)
        aggregate.append(sum(w * v for w, v in contributions) / total_weight)

    total = sum(aggregate)
    return PriorityVector(tuple(attribute_ids), tuple(v / total for v in aggregate))
