"""Finite interaction systems, simulations, MELL connectives, and the
width-bounded relational model of the typed differential lambda-calculus."""

from .core import (
    Counterexample,
    InteractionSystem,
    Multiset,
    Relation,
    SimulationStrategy,
    StructureError,
    check_simulation,
    compose,
    compose_relations,
    copycat,
    greatest_simulation,
    identity_relation,
    multisets_upto,
    synthesize_strategy,
    total_relation,
    union,
)
from .connectives import (
    ComonadLawReport,
    SizeCapError,
    abort,
    bang,
    bang_morphism,
    check_comonad_laws,
    comultiplication,
    counit,
    curry,
    lollipop,
    magic,
    multithread,
    skip,
    tensor,
    tensor_morphism,
    tensor_strategy,
    uncurry,
)
from .terms import (
    App,
    Arrow,
    Base,
    Context,
    Diff,
    Lam,
    ParseError,
    Sum,
    Term,
    TypeCheckError,
    TypeExpr,
    Var,
    Zero,
    diff_substitute,
    free_vars,
    make_sum,
    normalize,
    parse_context,
    parse_term,
    parse_type,
    reduce,
    substitute,
    term_to_str,
    type_to_str,
    typecheck,
)
from .semantics import (
    CorrectnessReport,
    Denotation,
    DenotationRelation,
    InvarianceReport,
    SemanticsError,
    denotation_as_relation,
    denote,
    interpret_type,
    states_of,
    verify_correctness,
    verify_invariance,
)
from .fixtures import FIXTURES, fixture, four_state_cycle, stack_system

__all__ = [name for name in dir() if not name.startswith("_")]
