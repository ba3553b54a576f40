"""Datalog-style engine whose rule bodies may call externally defined predicates."""

from .errors import (
    ConstraintViolation, LimitExceeded, NotStratifiable, OracleFailure, OracleLogError,
    ParseError, SafetyError,
)
from .grounder import (
    ConstantRegistry, GroundingLimits, GroundRule, Interpretation, evaluate,
    instantiate_rule, intern_constant, stratify,
)
from .oracles import (
    Call, ExternalPredicate, OracleSignature, Pattern, TalkativeOracle, answer_call,
    call_subsumes, pattern_of_terms,
)
from .parser import parse_program, parse_rule
from .registry import Package, Registry
from .safety import (
    CompletelyDefinedRule, analyze_program, build_dependency_graph, check_usual_safety,
    complete_rule, requires_strong_safety,
)
from .stdlib import stdlib
from .syntax import (
    Atom, ImportDirective, Integer, Literal, Program, Rule, String, Symbol, Variable, render,
)

__all__ = [
    "Atom", "Call", "CompletelyDefinedRule", "ConstantRegistry", "ConstraintViolation",
    "ExternalPredicate", "GroundRule", "GroundingLimits", "ImportDirective", "Integer",
    "Interpretation", "LimitExceeded", "Literal", "NotStratifiable", "OracleFailure",
    "OracleLogError", "OracleSignature", "Package", "ParseError", "Pattern", "Program",
    "Registry", "Rule", "SafetyError", "String", "Symbol", "TalkativeOracle", "Variable",
    "analyze_program", "answer_call", "build_dependency_graph", "call_subsumes",
    "check_usual_safety", "complete_rule", "evaluate", "instantiate_rule", "intern_constant",
    "parse_program", "parse_rule", "pattern_of_terms", "render", "requires_strong_safety",
    "stdlib", "stratify",
]
