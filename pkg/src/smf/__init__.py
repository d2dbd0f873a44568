"""Symbolic mirroring: unify differing classifier predictions ("views")
into shared abstractions, properties, and relationships over a small
knowledge base, run reflective program graphs, evaluate corpora, and feed
plan conditions from unified views."""

from .converge import (
    Convergence,
    Explanation,
    Outcome,
    OutcomeKind,
    View,
    class_phrase,
    classify_outcome,
    converge,
    explain,
    normalize,
    render_convergence,
    render_explanation,
)
from .graph import (
    ExecutionTrace,
    Node,
    ProgramGraph,
    Runtime,
    default_runtime,
    draw,
    execute,
    get_classifiers,
    load_program,
    meta_knowledge,
    register_builtins,
)
from .kb import (
    ClassDef,
    Finding,
    IndividualDef,
    KnowledgeBase,
    PropertyAssertion,
    RelationAssertion,
    ValidationReport,
    parse_kb,
    serialize_kb,
    validate_kb,
)
from .planner import (
    Fact,
    Operator,
    Plan,
    PlanningDocument,
    condition_from_views,
    generalize_relationship,
    parse_domain,
    plan,
)
from .predictions import (
    PredictionCorpus,
    PredictionDistribution,
    fetch_remote,
    load_predictions,
    top_prediction,
)
from .reasoner import (
    AncestorList,
    LiftedRelationship,
    ancestors,
    get_properties,
    get_relationships,
    is_subclass,
    lowest_level_ancestor,
    match_view_with_individual,
)
from .study import (
    ChiSquareResult,
    CorpusReport,
    StreamEncoding,
    chi_squared_2x1,
    corpus_outcomes,
    encode_stream,
    render_report,
    run_corpus,
)

__version__ = "0.1.0"
