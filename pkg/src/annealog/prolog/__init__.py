"""Prolog-subset frontend: parsing, type/width inference, compilation of
predicates and queries to word-level circuits, and sample decoding."""

from .ast import (Arith, Atom, Call, Clause, Int, Predicate, Program, Relation,
                  TypeAssert, Var)
from .parser import parse_program, parse_query
from .infer import TypeEnv, check_acyclic, infer_types
from .compiler import (Bindings, DecodeStats, QueryPlan, compile_program,
                       compile_query, decode_samples, evaluate_query)

__all__ = [
    "Arith", "Atom", "Call", "Clause", "Int", "Predicate", "Program",
    "Relation", "TypeAssert", "Var", "parse_program", "parse_query",
    "TypeEnv", "check_acyclic", "infer_types", "Bindings", "DecodeStats",
    "QueryPlan", "compile_program", "compile_query", "decode_samples",
    "evaluate_query",
]
