"""Compile predicates and queries to word-level circuits with a Valid bit,
and decode solver samples back to variable bindings.

Every predicate becomes one circuit with renamed argument buses plus a
single-bit Valid output; clause goals AND together, clauses OR together.
Calls instantiate the callee's circuit, and variables shared between goals
reuse the same bus, which is what makes unification free.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from ..errors import CompileError, TypeInferenceError
from ..synth import Bus, CircuitBuilder, WordCircuit, make_bus
from .ast import (Arith, Atom, Call, Int, Program, Relation, TypeAssert, Var,
                  query_variables)
from .infer import ATOM, INT, TypeEnv

_RELKIND = {"=": "EQ", "<": "LT", ">": "GT", "=<": "LE", ">=": "GE"}


def _param_names(arity: int):
    names = []
    for i in range(arity):
        names.append(chr(ord("A") + i) if i < 26 else f"A{i}")
    return names


class _ClauseCompiler:
    """Shared goal-compilation logic for clause bodies and queries."""

    def __init__(self, builder: CircuitBuilder, env: TypeEnv, circuits: dict,
                 var_kind, where: str):
        self.b = builder
        self.env = env
        self.circuits = circuits
        self.var_kind = var_kind  # name -> INT | ATOM
        self.where = where
        self.bus_of: dict = {}

    def bind(self, name: str, bus: Bus):
        self.bus_of[name] = bus

    def var_bus(self, var: Var) -> Bus:
        bus = self.bus_of.get(var.name)
        if bus is None:
            kind = self.var_kind(var.name)
            bus = self.b._fresh_bus(self.env.width_of(kind), f"${var.name}_")
            self.bus_of[var.name] = bus
        return bus

    def const_bus(self, term) -> Bus:
        if isinstance(term, Int):
            return self.b.const(term.value, self.env.int_width)
        return self.b.const(self.env.atom_code(term.name), self.env.atom_width)

    def term_bus(self, term) -> Bus:
        if isinstance(term, Var):
            return self.var_bus(term)
        if isinstance(term, (Int, Atom)):
            return self.const_bus(term)
        left = self.term_bus(term.left)
        right = self.term_bus(term.right)
        return self.b.add(left, right) if term.op == "+" else self.b.mul(left, right)

    def compile_goal(self, goal) -> Bus | None:
        """Returns the goal's 1-bit net, or None when the goal is absorbed
        (type assertions, and equalities realized by bus aliasing)."""
        if isinstance(goal, TypeAssert):
            return None
        if isinstance(goal, Call):
            callee = self.circuits.get(goal.key)
            if callee is None:
                raise CompileError(
                    f"unknown predicate {goal.name}/{len(goal.args)} in {self.where}")
            args = [self.term_bus(arg) for arg in goal.args]
            return self.b.call(callee, args)
        # Relation
        if goal.op == "=":
            lhs, rhs = goal.lhs, goal.rhs
            # a fresh variable on one side simply adopts the other side's bus
            if isinstance(lhs, Var) and lhs.name not in self.bus_of:
                if not (isinstance(rhs, Var) and rhs.name not in self.bus_of):
                    self.bind(lhs.name, self.term_bus(rhs))
                    return None
            elif isinstance(rhs, Var) and rhs.name not in self.bus_of:
                self.bind(rhs.name, self.term_bus(lhs))
                return None
        return self.b.relation(_RELKIND[goal.op], self.term_bus(goal.lhs),
                               self.term_bus(goal.rhs))


def compile_predicate(pred, env: TypeEnv, program: Program,
                      circuits: dict) -> WordCircuit:
    """One circuit per predicate: renamed argument buses + Valid output."""
    name = f"{pred.name}/{pred.arity}"
    b = CircuitBuilder(name)
    params = []
    for pos, pname in enumerate(_param_names(pred.arity)):
        kind = env.param_types.get((pred.key, pos))
        if kind is None:
            raise TypeInferenceError(
                f"argument {pos + 1} of {name} has no type evidence")
        params.append(b.input(pname, env.width_of(kind)))

    clause_ids = {id(c): ci for ci, c in enumerate(program.clause_order)}
    clause_valids = []
    for clause in pred.clauses:
        ci = clause_ids[id(clause)]
        cc = _ClauseCompiler(
            b, env, circuits,
            var_kind=lambda v, ci=ci: env.var_types[(ci, v)],
            where=name)
        goal_bits = []
        for pos, arg in enumerate(clause.head_args):
            if isinstance(arg, Var):
                if arg.name in cc.bus_of:  # repeated head variable
                    goal_bits.append(
                        b.relation("EQ", params[pos], cc.bus_of[arg.name]))
                else:
                    cc.bind(arg.name, params[pos])
            else:  # head literal
                goal_bits.append(b.relation("EQ", params[pos], cc.const_bus(arg)))
        for goal in clause.body:
            bit = cc.compile_goal(goal)
            if bit is not None:
                goal_bits.append(bit)
        clause_valids.append(b.and_reduce(goal_bits))

    valid = clause_valids[0]
    for other in clause_valids[1:]:
        valid = b.or1(valid, other)
    valid = b.name_bit(valid, "Valid")
    b.mark_output(valid)
    return b.done()


def compile_program(program: Program, env: TypeEnv, order) -> dict:
    """Compile every predicate in topological order; returns key -> circuit."""
    circuits: dict = {}
    for key in order:
        circuits[key] = compile_predicate(program.predicates[key], env,
                                          program, circuits)
    return circuits


@dataclass
class QueryPlan:
    """Everything decoding needs: variable buses, the Valid bit, and whether
    it was pinned (variable-bearing queries pin Valid to true; fully ground
    queries leave it free and report it)."""

    variables: list                  # (name, kind, Bus) in appearance order
    valid_bus: Bus
    valid_pinned: bool
    goals: tuple
    net_pins: list = field(default_factory=list)   # (net, bool) extra query pins


def compile_query(goals, program: Program, env: TypeEnv,
                  circuits: dict) -> tuple:
    """Wrap the query goals in a Query circuit; returns (circuit, plan)."""
    b = CircuitBuilder("Query")
    names = query_variables(goals)
    cc = _ClauseCompiler(b, env, circuits,
                         var_kind=lambda v: env.query_types[v],
                         where="query")
    variables = []
    for vname in names:
        kind = env.query_types[vname]
        bus = b.input(vname, env.width_of(kind))
        cc.bind(vname, bus)
        variables.append((vname, kind, bus))
    goal_bits = []
    for goal in goals:
        bit = cc.compile_goal(goal)
        if bit is not None:
            goal_bits.append(bit)
    valid = b.name_bit(b.and_reduce(goal_bits), "Valid")
    b.mark_output(valid)
    plan = QueryPlan(variables, valid, valid_pinned=bool(names), goals=tuple(goals))
    return b.done(), plan


# --- decoding ----------------------------------------------------------------

@dataclass(frozen=True)
class Bindings:
    """One distinct decoded solution with its sample multiplicity."""

    values: tuple  # ((var, value), ...) in query order; value is int or str
    count: int

    def as_dict(self) -> dict:
        return dict(self.values)

    def __str__(self):
        inner = ", ".join(f"{k} = {v}" for k, v in self.values)
        return f"{inner} ({self.count})"


@dataclass
class DecodeStats:
    total: int = 0
    rejected_pins: int = 0
    rejected_valid: int = 0
    rejected_atom_range: int = 0
    rejected_filter: int = 0
    valid_reading: bool | None = None  # ground queries: the reported Valid

    @property
    def rejected(self) -> int:
        return (self.rejected_pins + self.rejected_valid
                + self.rejected_atom_range + self.rejected_filter)


def decode_samples(samples, spin_plan, env: TypeEnv, program: Program | None = None,
                   post_filter: bool = False):
    """Map spin samples to bindings, rejecting samples that disagree with a
    pin, read Valid false under a pinned Valid, or decode an atom code out
    of range.  Does NOT verify constraints classically unless `post_filter`
    asks for the classical relation check.
    """
    stats = DecodeStats()
    counts: dict = {}
    index = {s: k for k, s in enumerate(samples.spins)}
    valid_ix = index.get(spin_plan.valid_spin)
    pin_ixs = [(index[s], v) for s, v in spin_plan.pins if s in index]
    var_ixs = []
    for name, kind, spin_list in spin_plan.variables:
        var_ixs.append((name, kind, [index[s] for s in spin_list]))

    for row in samples.records:
        values, _, count = row
        stats.total += count
        if any((values[ix] > 0) != want for ix, want in pin_ixs):
            stats.rejected_pins += count
            continue
        if spin_plan.valid_pinned and valid_ix is not None and values[valid_ix] < 0:
            stats.rejected_valid += count
            continue
        if not spin_plan.valid_pinned and valid_ix is not None:
            reading = values[valid_ix] > 0
            stats.valid_reading = (reading if stats.valid_reading in (None, reading)
                                   else None)
        decoded = []
        atom_bad = False
        for name, kind, ixs in var_ixs:
            raw = 0
            for k, ix in enumerate(ixs):
                if values[ix] > 0:
                    raw |= 1 << k
            if kind == ATOM:
                if raw >= max(1, len(env.atom_table)):
                    atom_bad = True
                    break
                decoded.append((name, env.atom_name(raw)))
            else:
                decoded.append((name, raw))
        if atom_bad:
            stats.rejected_atom_range += count
            continue
        key = tuple(decoded)
        if post_filter:
            if not evaluate_query(spin_plan.goals, dict(key), program, env):
                stats.rejected_filter += count
                continue
        counts[key] = counts.get(key, 0) + count

    bindings = [Bindings(k, c) for k, c in counts.items()]
    bindings.sort(key=lambda b: (-b.count, tuple(str(v) for _, v in b.values)))
    return bindings, stats


# --- classical verification (the optional post-processing step) -------------

_FILTER_BUDGET = 1 << 20


def _eval_term(term, binding, env):
    mask = (1 << env.int_width) - 1
    if isinstance(term, Int):
        return term.value & mask
    if isinstance(term, Atom):
        return term.name
    if isinstance(term, Var):
        return binding[term.name]
    left = _eval_term(term.left, binding, env)
    right = _eval_term(term.right, binding, env)
    return (left + right if term.op == "+" else left * right) & mask


def _eval_relation(goal, binding, env) -> bool:
    lhs = _eval_term(goal.lhs, binding, env)
    rhs = _eval_term(goal.rhs, binding, env)
    if goal.op == "=":
        return lhs == rhs
    return {"<": lhs < rhs, ">": lhs > rhs,
            "=<": lhs <= rhs, ">=": lhs >= rhs}[goal.op]


def evaluate_query(goals, binding, program, env: TypeEnv) -> bool:
    """Classical truth of the query goals under modular-width semantics."""
    return _eval_goals(goals, dict(binding), program, env)


def _eval_goals(goals, binding, program, env) -> bool:
    free: list = []
    seen = set(binding)
    for goal in goals:
        for term in _goal_vars(goal):
            if term.name not in seen:
                seen.add(term.name)
                kind = _free_var_kind(goal, term, program, env)
                free.append((term.name, kind))
    domains = []
    for name, kind in free:
        if kind == ATOM:
            domains.append(list(env.atom_table))
        else:
            domains.append(list(range(1 << env.int_width)))
    size = 1
    for dom in domains:
        size *= len(dom)
        if size > _FILTER_BUDGET:
            raise CompileError("classical verification budget exceeded")
    for combo in itertools.product(*domains):
        trial = dict(binding)
        trial.update({name: value for (name, _), value in zip(free, combo)})
        if all(_eval_goal(g, trial, program, env) for g in goals):
            return True
    return False


def _goal_vars(goal):
    from .ast import goal_terms

    for term in goal_terms(goal):
        if isinstance(term, Var):
            yield term


def _free_var_kind(goal, var, program, env):
    if isinstance(goal, Call):
        for pos, arg in enumerate(goal.args):
            if isinstance(arg, Var) and arg.name == var.name:
                kind = env.param_types.get((goal.key, pos))
                if kind:
                    return kind
    return INT


def _eval_goal(goal, binding, program, env) -> bool:
    if isinstance(goal, TypeAssert):
        return True
    if isinstance(goal, Relation):
        return _eval_relation(goal, binding, env)
    pred = program.predicates[goal.key]
    values = [_eval_term(arg, binding, env) for arg in goal.args]
    clause_ids = {id(c): ci for ci, c in enumerate(program.clause_order)}
    for clause in pred.clauses:
        ci = clause_ids[id(clause)]
        local: dict = {}
        ok = True
        for arg, value in zip(clause.head_args, values):
            if isinstance(arg, Var):
                if arg.name in local and local[arg.name] != value:
                    ok = False
                    break
                local[arg.name] = value
            else:
                lit = arg.value & ((1 << env.int_width) - 1) \
                    if isinstance(arg, Int) else arg.name
                if lit != value:
                    ok = False
                    break
        if not ok:
            continue
        body_vars = []
        names = set(local)
        for goal2 in clause.body:
            for term in _goal_vars(goal2):
                if term.name not in names:
                    names.add(term.name)
                    body_vars.append((term.name, env.var_types[(ci, term.name)]))
        domains = []
        for name, kind in body_vars:
            domains.append(list(env.atom_table) if kind == ATOM
                           else list(range(1 << env.int_width)))
        size = 1
        for dom in domains:
            size *= len(dom)
            if size > _FILTER_BUDGET:
                raise CompileError("classical verification budget exceeded")
        for combo in itertools.product(*domains):
            trial = dict(local)
            trial.update({name: v for (name, _), v in zip(body_vars, combo)})
            if all(_eval_goal(g, trial, program, env) for g in clause.body):
                return True
    return False
