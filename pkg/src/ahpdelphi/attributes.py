"""Quality attributes: the objects stakeholders compare and trade off."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum


class Direction(str, Enum):
    """Whether larger raw metric values are preferable."""

    HIGHER_IS_BETTER = "higher_is_better"
    LOWER_IS_BETTER = "lower_is_better"


@dataclass(frozen=True)
class QualityAttribute:
    """One quality attribute of the system under discussion.

    ``metric_unit`` documents the raw measurement the attribute is judged
    by (e.g. expected collisions, mission duration in timesteps, consumed
    watt-hours); ``direction`` states which way that metric is preferable.
    """

    id: str
    name: str
    description: str = ""
    metric_unit: str = ""
    direction: Direction = Direction.HIGHER_IS_BETTER

    def __post_init__(self) -> None:
        if not self.id:
            raise ValueError("attribute id must be non-empty")
        if not self.name:
            raise ValueError("attribute name must be non-empty")
        if not isinstance(self.direction, Direction):
            object.__setattr__(self, "direction", Direction(self.direction))

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "name": self.name,
            "description": self.description,
            "metric_unit": self.metric_unit,
            "direction": self.direction.value,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "QualityAttribute":
        return cls(
            id=data["id"],
            name=data["name"],
            description=data.get("description", ""),
            metric_unit=data.get("metric_unit", ""),
            direction=Direction(data.get("direction", "higher_is_better")),
        )


def check_unique_ids(attributes) -> None:
    """Reject duplicate attribute ids within one attribute set."""
    seen = set()
    for attr in attributes:
        if attr.id in seen:
            raise ValueError(f"duplicate attribute id: {attr.id!r}")
        seen.add(attr.id)
