"""Tiered logic-programming engine.

Programs classify into three control tiers by their dependency cycles:
join (no recursion), recursion (stratified cycles), and constraint
(negation in cycles). Join/recursion programs evaluate bottom-up to the
stratified least model with semi-naive iteration, indexes, and optional
demand-driven (magic-set) query rewriting; constraint programs run under
the well-founded (3-valued) or stable-model (2-valued) semantics.
"""

from .analysis import (
    DependencyGraph,
    Stratification,
    Tier,
    build_graph,
    classify,
    magic_transform,
    relevance_prune,
)
from .errors import TrilogicError
from .fixpoint import EvalConfig, EvalStats, answer_query, evaluate, evaluate_program
from .joineval import JoinPlan, eval_aggregate, eval_rule, plan
from .stable import SolveStats, check_stable, propagate, solve
from .store import Database, Relation, TermStore
from .syntax import (
    Atom,
    Program,
    Rule,
    desugar_paths,
    load,
    parse,
    parse_query,
    validate_safety,
)
from .wfs import GroundProgram, WfModel, ground, reduct_least_model, well_founded

__all__ = [
    "Atom",
    "Database",
    "DependencyGraph",
    "EvalConfig",
    "EvalStats",
    "GroundProgram",
    "JoinPlan",
    "Program",
    "Relation",
    "Rule",
    "SolveStats",
    "Stratification",
    "TermStore",
    "Tier",
    "TrilogicError",
    "WfModel",
    "answer_query",
    "build_graph",
    "check_stable",
    "classify",
    "desugar_paths",
    "eval_aggregate",
    "eval_rule",
    "evaluate",
    "evaluate_program",
    "ground",
    "load",
    "magic_transform",
    "parse",
    "parse_query",
    "plan",
    "propagate",
    "reduct_least_model",
    "relevance_prune",
    "solve",
    "validate_safety",
    "well_founded",
]
