"""Call-graph checks and type/width inference.

Types (integer vs atom) propagate through a union-find over clause
variables and predicate argument positions; widths follow from the largest
integer literal and the number of distinct atoms.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import ceil, log2

from ..errors import RecursionCycleError, TypeInferenceError
from .ast import (Arith, Atom, Call, Int, Program, Relation, TypeAssert, Var,
                  goal_terms, walk_terms)

INT = "integer"
ATOM = "atom"


def check_acyclic(program: Program) -> list:
    """Topological order of predicates; cycles and unknown callees error."""
    graph = {}
    for key, pred in program.predicates.items():
        callees = set()
        for clause in pred.clauses:
            for goal in clause.body:
                if isinstance(goal, Call):
                    if goal.key not in program.predicates:
                        raise RecursionCycleError(
                            f"unknown predicate {goal.name}/{len(goal.args)} "
                            f"called from {key[0]}/{key[1]}")
                    callees.add(goal.key)
        graph[key] = callees

    order = []
    state = {}  # 0 visiting, 1 done

    def visit(key, path):
        if state.get(key) == 1:
            return
        if state.get(key) == 0:
            cycle = path[path.index(key):] + (key,)
            names = " -> ".join(f"{n}/{a}" for n, a in cycle)
            raise RecursionCycleError(
                f"recursive predicates are not supported: {names}", cycle)
        state[key] = 0
        for callee in sorted(graph[key]):
            visit(callee, path + (key,))
        state[key] = 1
        order.append(key)

    for key in sorted(graph):
        visit(key, ())
    return order


@dataclass
class TypeEnv:
    int_width: int
    atom_width: int
    atom_table: dict                 # atom name -> code, first-appearance order
    var_types: dict                  # (clause id, var name) -> INT | ATOM
    query_types: dict                # var name -> INT | ATOM
    param_types: dict                # ((name, arity), pos) -> INT | ATOM
    warnings: list = field(default_factory=list)

    def width_of(self, kind: str) -> int:
        return self.int_width if kind == INT else self.atom_width

    def atom_code(self, name: str) -> int:
        return self.atom_table[name]

    def atom_name(self, code: int) -> str:
        for name, c in self.atom_table.items():
            if c == code:
                return name
        raise KeyError(code)


class _Unifier:
    def __init__(self):
        self.parent = {}
        self.tag = {}  # root -> (type, evidence)

    def find(self, x):
        self.parent.setdefault(x, x)
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return
        ta, tb = self.tag.get(ra), self.tag.get(rb)
        if ta and tb and ta[0] != tb[0]:
            raise TypeInferenceError(
                f"type conflict: {_key_str(a)} is {ta[0]} ({ta[1]}) but "
                f"{_key_str(b)} is {tb[0]} ({tb[1]})")
        self.parent[rb] = ra
        if tb and not ta:
            self.tag[ra] = tb
        self.tag.pop(rb, None)
        if tb and ta:
            self.tag[ra] = ta

    def mark(self, key, kind, evidence):
        root = self.find(key)
        cur = self.tag.get(root)
        if cur and cur[0] != kind:
            raise TypeInferenceError(
                f"type conflict: {_key_str(key)} is {cur[0]} ({cur[1]}) "
                f"but also {kind} ({evidence})")
        if not cur:
            self.tag[root] = (kind, evidence)

    def type_of(self, key):
        entry = self.tag.get(self.find(key))
        return entry[0] if entry else None


def _key_str(key):
    if key[0] == "param":
        (_, (name, arity), pos) = key
        return f"argument {pos + 1} of {name}/{arity}"
    return f"variable {key[2]}"


def infer_types(program: Program, query=(), min_int_bits: int | None = None) -> TypeEnv:
    """Propagate integer/atom evidence and compute bus widths.

    Widths: max(1, ceil(log2(n_max + 1))) bits for integers (n_max = the
    largest literal in program + query; `min_int_bits` can only raise it)
    and max(1, ceil(log2(#atoms))) bits for atoms.
    """
    uni = _Unifier()
    atoms: list = []
    max_int = 0

    def see_term(term):
        nonlocal max_int
        if isinstance(term, Atom) and term.name not in atoms:
            atoms.append(term.name)
        if isinstance(term, Int):
            max_int = max(max_int, term.value)

    def arith_vars(term, scope, evidence):
        for sub in walk_terms(term):
            see_term(sub)
            if isinstance(sub, Var):
                uni.mark(scope(sub), INT, evidence)

    def handle_relation(goal: Relation, scope):
        evidence = f"in {goal}"
        sides = (goal.lhs, goal.rhs)
        if goal.op in ("<", ">", "=<", ">="):
            for side in sides:
                if isinstance(side, Atom):
                    raise TypeInferenceError(
                        f"atom {side.name!r} used in an ordered comparison ({goal})")
                arith_vars(side, scope, evidence)
            return
        # "=": arithmetic or integer on either side forces integer; an atom
        # forces atom; var = var just unifies.
        lhs, rhs = sides
        for side in sides:
            see_term(side)
        forced = None
        if any(isinstance(s, (Arith, Int)) for s in sides):
            forced = INT
        elif any(isinstance(s, Atom) for s in sides):
            forced = ATOM
        for side in sides:
            if isinstance(side, Arith):
                arith_vars(side, scope, evidence)
            elif isinstance(side, Var) and forced:
                uni.mark(scope(side), forced, evidence)
        if isinstance(lhs, Var) and isinstance(rhs, Var):
            uni.union(scope(lhs), scope(rhs))
        if isinstance(lhs, Atom) and isinstance(rhs, Atom):
            pass  # statically true/false; compiled as a constant test

    def handle_call(goal: Call, scope):
        evidence = f"in {goal}"
        for pos, arg in enumerate(goal.args):
            pkey = ("param", goal.key, pos)
            see_term(arg)
            if isinstance(arg, Var):
                uni.union(pkey, scope(arg))
            elif isinstance(arg, Int):
                uni.mark(pkey, INT, evidence)
            elif isinstance(arg, Atom):
                uni.mark(pkey, ATOM, evidence)
            elif isinstance(arg, Arith):
                uni.mark(pkey, INT, evidence)
                arith_vars(arg, scope, evidence)

    clause_ids = {}
    for ci, clause in enumerate(program.clause_order):
        clause_ids[id(clause)] = ci

        def scope(var, ci=ci):
            return ("var", ci, var.name)

        for pos, arg in enumerate(clause.head_args):
            pkey = ("param", clause.key, pos)
            see_term(arg)
            if isinstance(arg, Var):
                uni.union(pkey, scope(arg))
            elif isinstance(arg, Int):
                uni.mark(pkey, INT, f"in head of {clause.head_name}")
            elif isinstance(arg, Atom):
                uni.mark(pkey, ATOM, f"in head of {clause.head_name}")
        for goal in clause.body:
            if isinstance(goal, Relation):
                handle_relation(goal, scope)
            elif isinstance(goal, Call):
                handle_call(goal, scope)
            elif isinstance(goal, TypeAssert):
                uni.mark(scope(goal.var), goal.kind, f"{goal.kind}/1 assertion")

    def qscope(var):
        return ("q", None, var.name)

    for goal in query:
        if isinstance(goal, Relation):
            handle_relation(goal, qscope)
        elif isinstance(goal, Call):
            handle_call(goal, qscope)
        elif isinstance(goal, TypeAssert):
            uni.mark(qscope(goal.var), goal.kind, f"{goal.kind}/1 assertion")

    # resolve all variables; missing evidence is an error, not a guess
    var_types = {}
    warnings = []
    for ci, clause in enumerate(program.clause_order):
        head_vars = {t.name for t in clause.head_args if isinstance(t, Var)}
        body_vars = set()
        for goal in clause.body:
            for term in goal_terms(goal):
                if isinstance(term, Var):
                    body_vars.add(term.name)
        for name in sorted(head_vars | body_vars):
            kind = uni.type_of(("var", ci, name))
            if kind is None:
                raise TypeInferenceError(
                    f"cannot infer whether {name} (clause at line {clause.line}, "
                    f"{clause.head_name}/{len(clause.head_args)}) is an integer "
                    f"or an atom; add integer({name}) or atom({name})")
            var_types[(ci, name)] = kind
        for name in sorted(head_vars - body_vars):
            warnings.append(
                f"{clause.head_name}/{len(clause.head_args)}: variable {name} "
                "appears only in the clause head and is unconstrained")

    query_types = {}
    from .ast import query_variables

    for name in query_variables(query):
        kind = uni.type_of(("q", None, name))
        if kind is None:
            raise TypeInferenceError(
                f"cannot infer whether query variable {name} is an integer or "
                f"an atom; add integer({name}) or atom({name})")
        query_types[name] = kind

    param_types = {}
    for key, pred in program.predicates.items():
        for pos in range(pred.arity):
            kind = uni.type_of(("param", key, pos))
            if kind is not None:
                param_types[(key, pos)] = kind

    int_width = max(1, ceil(log2(max_int + 1)) if max_int else 1)
    if min_int_bits:
        int_width = max(int_width, int(min_int_bits))
    atom_width = max(1, ceil(log2(len(atoms))) if len(atoms) > 1 else 1)
    atom_table = {name: code for code, name in enumerate(atoms)}
    return TypeEnv(int_width, atom_width, atom_table, var_types, query_types,
                   param_types, warnings)
