"""AST for the supported Prolog subset: atoms, non-negative integers,
variables, +/* arithmetic, relational goals, calls, and type assertions."""

from __future__ import annotations

from dataclasses import dataclass, field

RELOPS = ("=", "<", ">", "=<", ">=")
ARITH_OPS = ("+", "*")


@dataclass(frozen=True)
class Var:
    name: str

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class Int:
    value: int

    def __str__(self):
        return str(self.value)


@dataclass(frozen=True)
class Atom:
    name: str

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class Arith:
    op: str
    left: "Term"
    right: "Term"

    def __str__(self):
        return f"{self.left}{self.op}{self.right}"


Term = Var | Int | Atom | Arith


@dataclass(frozen=True)
class Relation:
    op: str
    lhs: Term
    rhs: Term

    def __str__(self):
        return f"{self.lhs} {self.op} {self.rhs}"


@dataclass(frozen=True)
class Call:
    name: str
    args: tuple

    @property
    def key(self):
        return (self.name, len(self.args))

    def __str__(self):
        return f"{self.name}({', '.join(map(str, self.args))})"


@dataclass(frozen=True)
class TypeAssert:
    kind: str  # "integer" | "atom"
    var: Var

    def __str__(self):
        return f"{self.kind}({self.var})"


Goal = Relation | Call | TypeAssert


@dataclass
class Clause:
    head_name: str
    head_args: tuple
    body: tuple
    line: int = 0

    @property
    def key(self):
        return (self.head_name, len(self.head_args))

    def __str__(self):
        head = f"{self.head_name}({', '.join(map(str, self.head_args))})"
        if not self.body:
            return head + "."
        return head + " :- " + ", ".join(map(str, self.body)) + "."


@dataclass
class Predicate:
    name: str
    arity: int
    clauses: list = field(default_factory=list)

    @property
    def key(self):
        return (self.name, self.arity)


@dataclass
class Program:
    predicates: dict = field(default_factory=dict)  # (name, arity) -> Predicate
    clause_order: list = field(default_factory=list)

    def add_clause(self, clause: Clause):
        pred = self.predicates.setdefault(
            clause.key, Predicate(clause.head_name, len(clause.head_args)))
        pred.clauses.append(clause)
        self.clause_order.append(clause)

    def dump(self) -> str:
        return "\n".join(str(c) for c in self.clause_order) + "\n"


def walk_terms(term: Term):
    yield term
    if isinstance(term, Arith):
        yield from walk_terms(term.left)
        yield from walk_terms(term.right)


def goal_terms(goal: Goal):
    if isinstance(goal, Relation):
        yield from walk_terms(goal.lhs)
        yield from walk_terms(goal.rhs)
    elif isinstance(goal, Call):
        for arg in goal.args:
            yield from walk_terms(arg)
    elif isinstance(goal, TypeAssert):
        yield goal.var


def query_variables(goals) -> list:
    """Distinct variables of a query in order of first appearance."""
    seen: list = []
    for goal in goals:
        for term in goal_terms(goal):
            if isinstance(term, Var) and term.name not in seen:
                seen.append(term.name)
    return seen
