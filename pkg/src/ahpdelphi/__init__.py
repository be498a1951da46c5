"""Multi-stakeholder quality-attribute prioritization.

Pairwise-comparison elicitation with consistency checking, rank-agreement
measurement, a three-round anonymous negotiation workflow, and synthesis
of the agreed priorities into a weighted-sum utility function.
"""

from .ahp import (
    CR_LIMIT,
    JUDGMENT_VALUES,
    SCALE_LABELS,
    ComparisonMatrix,
    ConsistencyReport,
    JudgmentLevel,
    OffendingTriple,
    PriorityVector,
    consistency,
    dominant_eigen,
    nearest_judgment_value,
    principal_eigen,
    random_index,
    set_judgment,
)
from .attributes import Direction, QualityAttribute
from .canonical import canonical_json
from .consensus import (
    ConcordanceReport,
    PairConflict,
    Ranking,
    StakeholderWeight,
    aggregate_aip,
    concordance,
    ranking_conflicts,
    ranking_from_priorities,
)
from .errors import (
    AggregationError,
    AhpDelphiError,
    ConvergenceError,
    DelegationError,
    IncompleteRoundError,
    InvalidMatrixError,
    MatrixRejectedError,
    PhaseError,
    RankingError,
    SessionError,
    UnknownStakeholderError,
    UtilityError,
)
from .session import (
    Abstention,
    AbstentionKind,
    DelphiSession,
    Phase,
    Rationale,
    RationaleKind,
    SessionConfig,
    SessionResult,
    Submission,
)
from .utility import (
    PreferenceFunction,
    PreferenceKind,
    UtilityFunction,
    UtilityMode,
    build_utility,
    evaluate,
    export_utility,
    import_utility,
    preference_value,
    render_expression,
)

__version__ = "0.1.0"
