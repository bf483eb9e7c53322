"""Interactive mining of tactical hit patterns in racket-sport rallies.

The package splits into a handful of layers:

- model: datasets, tactics, matching
- cover: greedy usage assignment and the description-length metric
- miner: bottom-up discovery of an initial tactic set
- constraints: analyst adjustments, both global knobs and local edits
- nlp: free-text suggestions to constraints
- projection: stable 2-D layout for tactic overviews
- synth: reproducible benchmark data with planted tactics
- session: versioned preview/apply/undo workflow
- service, cli: HTTP and command-line front ends
"""

from .constraints import (
    Constraint,
    ConstraintError,
    DeleteTactic,
    ExpandTactic,
    FeatureImportance,
    FineTuneResult,
    GlobalConstraint,
    IndexRange,
    LengthRange,
    LocalConstraint,
    MergeTactics,
    SpecifyFeature,
    SplitByFeature,
    TrimTactic,
    compile_global,
    fine_tune_optimize,
    generate_fine_tuning,
    remine,
)
from .cover import (
    CoverResult,
    MetricParams,
    TacticStats,
    cover,
    description_length,
    score_and_importance,
    set_description_length,
)
from .miner import MinerConfig, mine_initial, optimize
from .model import (
    Dataset,
    Feature,
    FeatureSchema,
    Rally,
    Tactic,
    TacticSet,
    Usage,
    ValidationError,
    enumerate_matches,
    match_at,
    validate_dataset,
)
from .nlp import ParsedSuggestion, ParseError, SuggestionContext, context_from_session, parse
from .projection import (
    BasisSet,
    ProjectedPoint,
    ProjectionModel,
    default_basis,
    fit_projection,
    project,
    similarity_vector,
    tactic_distance,
)
from .session import Session, SessionError, StaleVersionError
from .synth import SynthParams, generate, generate_constraint_suite

__version__ = "0.1.0"

__all__ = [
    "Constraint",
    "ConstraintError",
    "CoverResult",
    "Dataset",
    "DeleteTactic",
    "ExpandTactic",
    "Feature",
    "FeatureImportance",
    "FeatureSchema",
    "FineTuneResult",
    "GlobalConstraint",
    "IndexRange",
    "LengthRange",
    "LocalConstraint",
    "MergeTactics",
    "MetricParams",
    "MinerConfig",
    "ParseError",
    "ParsedSuggestion",
    "ProjectedPoint",
    "ProjectionModel",
    "BasisSet",
    "Rally",
    "Session",
    "SessionError",
    "SpecifyFeature",
    "SplitByFeature",
    "StaleVersionError",
    "SuggestionContext",
    "SynthParams",
    "Tactic",
    "TacticSet",
    "TacticStats",
    "TrimTactic",
    "Usage",
    "ValidationError",
    "compile_global",
    "context_from_session",
    "cover",
    "default_basis",
    "description_length",
    "enumerate_matches",
    "fine_tune_optimize",
    "fit_projection",
    "generate",
    "generate_constraint_suite",
    "generate_fine_tuning",
    "match_at",
    "mine_initial",
    "optimize",
    "parse",
    "project",
    "remine",
    "score_and_importance",
    "set_description_length",
    "similarity_vector",
    "tactic_distance",
    "validate_dataset",
]
