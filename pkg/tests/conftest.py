from __future__ import annotations

import numpy as np
import pytest

from ahpdelphi.ahp import ComparisonMatrix
from ahpdelphi.attributes import QualityAttribute


@pytest.fixture
def robot_attributes():
    return [
        QualityAttribute(id="safety", name="Safety", metric_unit="expected collisions",
                         direction="lower_is_better"),
        QualityAttribute(id="speed", name="Speed", metric_unit="timesteps",
                         direction="lower_is_better"),
        QualityAttribute(id="energy", name="Energy Consumption", metric_unit="watt-hours",
                         direction="lower_is_better"),
    ]


@pytest.fixture
def robot_matrix():
    """Safety very strongly over speed (7), extremely over energy (9),
    speed and energy equal."""
    return ComparisonMatrix.from_rows(
        ["safety", "speed", "energy"],
        [[1, 7, 9], ["1/7", 1, 1], ["1/9", 1, 1]],
    )


@pytest.fixture
def inconsistent_matrix():
    """a_12=3, a_23=3, a_13=1/3: cyclic deviation factor 27."""
    return ComparisonMatrix.from_rows(
        ["safety", "speed", "energy"],
        [[1, 3, "1/3"], ["1/3", 1, 3], [3, "1/3", 1]],
    )


def ratio_matrix(weights: np.ndarray) -> np.ndarray:
    """Perfectly consistent matrix a_ij = w_i / w_j from a weight vector."""
    w = np.asarray(weights, dtype=float)
    return w[:, None] / w[None, :]


def random_scale_matrix(n: int, rng: np.random.Generator) -> ComparisonMatrix:
    """Random reciprocal judgment matrix with entries on the legal scale."""
    from fractions import Fraction

    from ahpdelphi.ahp import JUDGMENT_VALUES

    ids = [f"a{i}" for i in range(n)]
    rows = [[Fraction(1)] * n for _ in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            value = JUDGMENT_VALUES[rng.integers(0, len(JUDGMENT_VALUES))]
            rows[i][j] = value
            rows[j][i] = 1 / value
    return ComparisonMatrix(tuple(ids), tuple(tuple(r) for r in rows))
