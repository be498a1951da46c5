"""Weighted-sum utility functions over quality-attribute metrics.

A utility function pairs each attribute's aggregated weight with a
preference function mapping the raw metric to [0, 1]. Two evaluation
modes exist: ``preference_normalized`` (the recommended default) runs
raw metrics through the preference functions, while ``raw_linear``
reproduces the plain weighted sum of raw metric values and therefore
only admits identity preferences.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from enum import Enum
from typing import Mapping

from .ahp import PriorityVector
from .attributes import Direction
from .canonical import canonical_json
from .errors import UtilityError

UTILITY_SCHEMA = "utility/1"

# preference is 0.95 at the good-enough threshold and 0.05 at the
# insufficient threshold: logit(0.95) = ln 19
_LOGIT_95 = math.log(19.0)


class PreferenceKind(str, Enum):
    IDENTITY_LINEAR = "identity_linear"
    SIGMOID = "sigmoid"


class UtilityMode(str, Enum):
    PREFERENCE_NORMALIZED = "preference_normalized"
    RAW_LINEAR = "raw_linear"


@dataclass(frozen=True)
class PreferenceFunction:
    """Maps one attribute's raw metric value to a preference level.

    ``identity_linear`` passes the raw value through unchanged (callers
    pre-scale if a [0, 1] result is required). ``sigmoid`` interpolates
    between an insufficient threshold and a good-enough threshold:

        p(x) = 1 / (1 + exp(-s (x - c)))

    with c the midpoint of the two thresholds and s chosen so that the
    preference is 0.95 at ``good_enough`` and 0.05 at ``insufficient``.
    For a lower-is-better attribute the slope is computed with the
    thresholds swapped, mirroring the curve around the midpoint.
    """

    kind: PreferenceKind
    insufficient: float | None = None
    good_enough: float | None = None
    direction: Direction = Direction.HIGHER_IS_BETTER

    def __post_init__(self) -> None:
        if not isinstance(self.kind, PreferenceKind):
            object.__setattr__(self, "kind", PreferenceKind(self.kind))
        if not isinstance(self.direction, Direction):
            object.__setattr__(self, "direction", Direction(self.direction))
        if self.kind is PreferenceKind.SIGMOID:
            if self.insufficient is None or self.good_enough is None:
                raise UtilityError("sigmoid preference needs both thresholds")
            if self.insufficient == self.good_enough:
                raise UtilityError("sigmoid thresholds must differ")

    @classmethod
    def identity(cls) -> "PreferenceFunction":
        return cls(kind=PreferenceKind.IDENTITY_LINEAR)

    @classmethod
    def sigmoid(
        cls,
        insufficient: float,
        good_enough: float,
        direction: Direction = Direction.HIGHER_IS_BETTER,
    ) -> "PreferenceFunction":
        return cls(
            kind=PreferenceKind.SIGMOID,
            insufficient=float(insufficient),
            good_enough=float(good_enough),
            direction=direction,
        )

    @property
    def slope(self) -> float:
        """Signed slope parameter s of the sigmoid form."""
        if self.kind is not PreferenceKind.SIGMOID:
            raise UtilityError("slope is defined for sigmoid preferences only")
        span = self.good_enough - self.insufficient
        if self.direction is Direction.LOWER_IS_BETTER:
            span = -span
        return 2.0 * _LOGIT_95 / span

    @property
    def midpoint(self) -> float:
        if self.kind is not PreferenceKind.SIGMOID:
            raise UtilityError("midpoint is defined for sigmoid preferences only")
        return (self.insufficient + self.good_enough) / 2.0

    def to_dict(self) -> dict:
        if self.kind is PreferenceKind.IDENTITY_LINEAR:
            return {"kind": self.kind.value}
        return {
            "kind": self.kind.value,
            "insufficient_threshold": self.insufficient,
            "good_enough_threshold": self.good_enough,
            "direction": self.direction.value,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "PreferenceFunction":
        kind = PreferenceKind(data["kind"])
        if kind is PreferenceKind.IDENTITY_LINEAR:
            return cls.identity()
        return cls.sigmoid(
            insufficient=data["insufficient_threshold"],
            good_enough=data["good_enough_threshold"],
            direction=Direction(data.get("direction", "higher_is_better")),
        )


def preference_value(pf: PreferenceFunction, raw: float) -> float:
    """Apply one preference function to a raw metric value."""
    if pf.kind is PreferenceKind.IDENTITY_LINEAR:
        return float(raw)
    exponent = -pf.slope * (float(raw) - pf.midpoint)
    # large exponents saturate cleanly instead of overflowing
    if exponent > 700.0:
        return 0.0
    if exponent < -700.0:
        return 1.0
    return 1.0 / (1.0 + math.exp(exponent))


@dataclass(frozen=True)
class UtilityTerm:
    attribute_id: str
    weight: float
    preference: PreferenceFunction

    def to_dict(self) -> dict:
        return {
            "attribute_id": self.attribute_id,
            "weight": self.weight,
            "preference": self.preference.to_dict(),
        }


@dataclass(frozen=True)
class UtilityFunction:
    """Weighted sum of per-attribute preference values."""

    terms: tuple[UtilityTerm, ...]
    mode: UtilityMode

    def __post_init__(self) -> None:
        object.__setattr__(self, "terms", tuple(self.terms))
        if not isinstance(self.mode, UtilityMode):
            object.__setattr__(self, "mode", UtilityMode(self.mode))
        if not self.terms:
            raise UtilityError("a utility function needs at least one term")
        total = sum(t.weight for t in self.terms)
        if abs(total - 1.0) > 1e-9:
            raise UtilityError(f"weights must sum to 1, got {total!r}")
        if self.mode is UtilityMode.RAW_LINEAR:
            offender = next(
                (t for t in self.terms if t.preference.kind is not PreferenceKind.IDENTITY_LINEAR),
                None,
            )
            if offender is not None:
                raise UtilityError(
                    f"raw_linear mode permits only identity preferences; "
                    f"{offender.attribute_id!r} has {offender.preference.kind.value}"
                )

    @property
    def attribute_ids(self) -> tuple[str, ...]:
        return tuple(t.attribute_id for t in self.terms)

    def to_dict(self) -> dict:
        return {
            "schema": UTILITY_SCHEMA,
            "mode": self.mode.value,
            "terms": [t.to_dict() for t in self.terms],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "UtilityFunction":
        schema = data.get("schema", UTILITY_SCHEMA)
        if schema != UTILITY_SCHEMA:
            raise UtilityError(f"unsupported utility schema: {schema!r}")
        return cls(
            terms=tuple(
                UtilityTerm(
                    attribute_id=t["attribute_id"],
                    weight=t["weight"],
                    preference=PreferenceFunction.from_dict(t["preference"]),
                )
                for t in data["terms"]
            ),
            mode=UtilityMode(data["mode"]),
        )


def build_utility(
    priorities: PriorityVector,
    preferences: Mapping[str, PreferenceFunction],
    mode: UtilityMode = UtilityMode.PREFERENCE_NORMALIZED,
) -> UtilityFunction:
    """Assemble a utility function from aggregated priorities.

    The weights are carried over verbatim (no renormalization beyond what
    the priority vector already guarantees); every attribute must have a
    preference function.
    """
    missing = [aid for aid in priorities.attribute_ids if aid not in preferences]
    if missing:
        raise UtilityError(f"missing preference functions for: {missing}")
    terms = tuple(
        UtilityTerm(aid, weight, preferences[aid])
        for aid, weight in zip(priorities.attribute_ids, priorities.values)
    )
    return UtilityFunction(terms=terms, mode=UtilityMode(mode))


def evaluate(u: UtilityFunction, sample: Mapping[str, float]) -> float:
    """Evaluate the weighted sum on one metric sample.

    In preference_normalized mode each raw metric first runs through its
    preference function, so the result lies in [0, 1]; raw_linear sums the
    weighted raw values directly.
    """
    missing = [t.attribute_id for t in u.terms if t.attribute_id not in sample]
    if missing:
        raise UtilityError(f"sample misses metrics for: {missing}")
    return sum(
        t.weight * preference_value(t.preference, sample[t.attribute_id])
        for t in u.terms
    )


def render_expression(u: UtilityFunction) -> str:
    """Human-readable weighted-sum form, weights at 3 decimals.

    raw_linear renders bare metric terms ("0.800*safety(m)" style with a
    dot operator); preference_normalized prefixes each term with "pref_"
    to show the preference mapping is applied.
    """
    parts = []
    for t in u.terms:
        name = t.attribute_id
        if u.mode is UtilityMode.PREFERENCE_NORMALIZED:
            name = f"pref_{name}"
        parts.append(f"{t.weight:.3f}·{name}(m)")
    return "U(m) = " + " + ".join(parts)


def export_utility(u: UtilityFunction, format: str = "canonical_json") -> str:
    """Export as byte-stable canonical JSON or as the readable expression."""
    if format == "canonical_json":
        return canonical_json(u.to_dict())
    if format == "human_readable_expression":
        return render_expression(u)
    raise UtilityError(f"unknown export format: {format!r}")


def import_utility(document: str) -> UtilityFunction:
    """Inverse of the canonical_json export."""
    try:
        data = json.loads(document)
    except json.JSONDecodeError as exc:
        raise UtilityError(f"invalid utility document: {exc}") from exc
    return UtilityFunction.from_dict(data)
