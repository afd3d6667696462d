"""Word-level circuits: bit-vector buses and arithmetic/relational operators,
lowered to standard-cell netlists.

Unsigned modular arithmetic at the bus width throughout (the wraparound is
what makes 6+6 = 6*6 = 4 at three bits).  Bit 0 is the least significant;
display is big-endian.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from .errors import CircuitError
from .netlist import NetlistModule

# Operator kinds.  CALL instantiates another predicate's circuit and yields
# its Valid bit; everything else is a plain word operator.
KINDS = ("CONST", "ADD", "MUL", "EQ", "NEQ", "LT", "GT", "LE", "GE",
         "AND_REDUCE", "BIT_AND", "BIT_OR", "BIT_NOT", "OR1", "CALL")


@dataclass(frozen=True)
class Bus:
    """Named ordered wires; index 0 = LSB.  A Bus may be a view over nets
    produced elsewhere (e.g. the packed vector of goal bits)."""

    name: str
    bits: tuple

    @property
    def width(self) -> int:
        return len(self.bits)

    def __repr__(self):
        return f"{self.name}[{self.width}]"


@dataclass(frozen=True)
class WordOp:
    kind: str
    inputs: tuple
    output: Bus
    value: int | None = None    # CONST only
    callee: str | None = None   # CALL only


@dataclass
class WordCircuit:
    name: str
    inputs: list = field(default_factory=list)
    outputs: list = field(default_factory=list)
    ops: list = field(default_factory=list)

    def validate(self):
        driven = set()
        known = set()
        for bus in self.inputs:
            known.update(bus.bits)
        for op in self.ops:
            for bus in op.inputs:
                missing = [b for b in bus.bits if b not in known]
                if missing:
                    raise CircuitError(
                        f"{self.name}: op {op.kind} reads undriven net(s) "
                        f"{missing!r} (ops must be topologically ordered)")
            for b in op.output.bits:
                if b in driven:
                    raise CircuitError(f"{self.name}: net {b!r} driven twice")
                driven.add(b)
                known.add(b)
        for bus in self.outputs:
            missing = [b for b in bus.bits if b not in known]
            if missing:
                raise CircuitError(f"{self.name}: output net(s) {missing!r} undriven")


def bus_net_names(bus: Bus):
    """Default wire naming: bare name for 1-bit buses, name[i] otherwise."""
    if bus.width == 1:
        return (bus.name,)
    return tuple(f"{bus.name}[{i}]" for i in range(bus.width))


def make_bus(name: str, width: int) -> Bus:
    return Bus(name, bus_net_names(Bus(name, ("?",) * width)))


class CircuitBuilder:
    """Convenience layer that keeps ops topologically ordered and names
    fresh."""

    def __init__(self, name: str):
        self.circuit = WordCircuit(name)
        self._fresh = 0
        self._const_cache = {}

    def _fresh_bus(self, width: int, stem: str = "$t") -> Bus:
        self._fresh += 1
        return make_bus(f"{stem}{self._fresh}", width)

    def input(self, name: str, width: int) -> Bus:
        bus = make_bus(name, width)
        self.circuit.inputs.append(bus)
        return bus

    def mark_output(self, bus: Bus):
        self.circuit.outputs.append(bus)

    def _op(self, kind, inputs, output, **kw) -> Bus:
        self.circuit.ops.append(WordOp(kind, tuple(inputs), output, **kw))
        return output

    def const(self, value: int, width: int) -> Bus:
        key = (value % (1 << width), width)
        if key not in self._const_cache:
            out = self._fresh_bus(width, "$k")
            self._const_cache[key] = self._op("CONST", (), out, value=key[0])
        return self._const_cache[key]

    def zext(self, bus: Bus, width: int) -> Bus:
        if bus.width == width:
            return bus
        if bus.width > width:
            raise CircuitError(f"cannot narrow {bus} to {width} bits")
        zero = self.const(0, 1)
        return Bus(bus.name, bus.bits + zero.bits * (width - bus.width))

    def _binary(self, kind: str, a: Bus, b: Bus, out_width: int) -> Bus:
        w = max(a.width, b.width)
        a, b = self.zext(a, w), self.zext(b, w)
        return self._op(kind, (a, b), self._fresh_bus(out_width or w))

    def add(self, a, b) -> Bus:
        return self._binary("ADD", a, b, 0)

    def mul(self, a, b) -> Bus:
        return self._binary("MUL", a, b, 0)

    def bit_and(self, a, b) -> Bus:
        return self._binary("BIT_AND", a, b, 0)

    def bit_or(self, a, b) -> Bus:
        return self._binary("BIT_OR", a, b, 0)

    def bit_not(self, a: Bus) -> Bus:
        return self._op("BIT_NOT", (a,), self._fresh_bus(a.width))

    def relation(self, kind: str, a, b) -> Bus:
        return self._binary(kind, a, b, 1)

    def or1(self, a: Bus, b: Bus) -> Bus:
        return self._op("OR1", (a, b), self._fresh_bus(1))

    def and_reduce(self, bits, stem: str = "$v", out: Bus | None = None) -> Bus:
        """Reduce 1-bit buses to a single Valid-style bit."""
        bits = list(bits)
        if not bits:
            return self.const(1, 1)
        if len(bits) == 1 and out is None:
            return bits[0]
        self._fresh += 1
        packed = Bus(f"{stem}{self._fresh}", tuple(b.bits[0] for b in bits))
        return self._op("AND_REDUCE", (packed,), out or self._fresh_bus(1))

    def name_bit(self, bit: Bus, name: str) -> Bus:
        """Expose a 1-bit value under a fixed net name (a zero-cost alias
        once lowered)."""
        return self.and_reduce([bit], out=make_bus(name, 1))

    def call(self, callee: "WordCircuit", args) -> Bus:
        expect = callee.inputs
        if len(args) != len(expect):
            raise CircuitError(
                f"call to {callee.name}: {len(args)} argument(s) for "
                f"{len(expect)} parameter(s)")
        fixed = []
        for arg, param in zip(args, expect):
            if arg.width > param.width:
                raise CircuitError(
                    f"call to {callee.name}: argument {arg} wider than {param}")
            fixed.append(self.zext(arg, param.width))
        return self._op("CALL", tuple(fixed), self._fresh_bus(1), callee=callee.name)

    def done(self) -> WordCircuit:
        self.circuit.validate()
        return self.circuit


# --- constant folding --------------------------------------------------------

def _mask(value: int, width: int) -> int:
    return value & ((1 << width) - 1)


def _eval_op(op: WordOp, vals):
    w = op.inputs[0].width if op.inputs else op.output.width
    if op.kind == "ADD":
        return _mask(vals[0] + vals[1], w)
    if op.kind == "MUL":
        return _mask(vals[0] * vals[1], w)
    if op.kind == "BIT_AND":
        return vals[0] & vals[1]
    if op.kind == "BIT_OR":
        return vals[0] | vals[1]
    if op.kind == "BIT_NOT":
        return _mask(~vals[0], w)
    if op.kind == "EQ":
        return int(vals[0] == vals[1])
    if op.kind == "NEQ":
        return int(vals[0] != vals[1])
    if op.kind == "LT":
        return int(vals[0] < vals[1])
    if op.kind == "GT":
        return int(vals[0] > vals[1])
    if op.kind == "LE":
        return int(vals[0] <= vals[1])
    if op.kind == "GE":
        return int(vals[0] >= vals[1])
    if op.kind == "AND_REDUCE":
        return int(vals[0] == (1 << op.inputs[0].width) - 1)
    if op.kind == "OR1":
        return vals[0] | vals[1]
    return None


def fold_constants(circuit: WordCircuit) -> WordCircuit:
    """Single semantics-preserving pass: evaluate ops whose inputs are all
    constants (modular), eliminate ADD-with-0 / MUL-with-1 identities, and
    drop constants nothing reads."""
    const_of = {}
    subst = {}
    out_names = {b.name for b in circuit.outputs}
    new_ops = []

    def resolve(bus: Bus) -> Bus:
        while bus.name in subst:
            bus = subst[bus.name]
        return bus

    for op in circuit.ops:
        ins = tuple(resolve(b) for b in op.inputs)
        op = replace(op, inputs=ins)
        if op.kind == "CONST":
            const_of[op.output.name] = op.value
            new_ops.append(op)
            continue
        if op.kind == "CALL":
            new_ops.append(op)
            continue
        vals = [const_of.get(b.name) for b in ins]
        if ins and all(v is not None for v in vals):
            value = _eval_op(op, vals)
            if value is not None:
                const_of[op.output.name] = value
                new_ops.append(WordOp("CONST", (), op.output, value=value))
                continue
        if op.kind in ("ADD", "MUL") and op.output.name not in out_names:
            ident = 0 if op.kind == "ADD" else 1
            a, b = ins
            if const_of.get(a.name) == ident:
                subst[op.output.name] = b
                continue
            if const_of.get(b.name) == ident:
                subst[op.output.name] = a
                continue
        new_ops.append(op)

    # drop CONST ops nothing reads (after substitution)
    read = set()
    for op in new_ops:
        for bus in op.inputs:
            read.add(bus.name)
    for bus in circuit.outputs:
        read.add(resolve(bus).name)
    kept = [op for op in new_ops
            if op.kind != "CONST" or op.output.name in read]
    folded = WordCircuit(circuit.name, list(circuit.inputs),
                         [resolve(b) for b in circuit.outputs], kept)
    return folded


# --- lowering to cells -------------------------------------------------------

class _Lowerer:
    def __init__(self, circuit: WordCircuit, lib: dict, modules: dict):
        self.c = circuit
        self.lib = lib
        self.modules = modules  # lowered NetlistModule per callee name
        self.mod = NetlistModule(circuit.name)
        self._n = 0

    def fresh(self) -> str:
        self._n += 1
        return f"$n{self._n}"

    def gate(self, cell: str, **bindings) -> str:
        """Instantiate a 2-or-3 port cell; returns the output net."""
        out_port = self.lib[cell].output
        if out_port not in bindings:
            bindings[out_port] = self.fresh()
        self.mod.add_instance(cell, bindings)
        return bindings[out_port]

    def alias(self, a: str, b: str):
        if a != b:
            self.mod.add_alias(a, b)

    def lower(self) -> NetlistModule:
        self.c.validate()
        for bus in self.c.inputs + self.c.outputs:
            for net in bus.bits:
                if net not in self.mod.ports:
                    self.mod.ports.append(net)
        for op in self.c.ops:
            getattr(self, f"_op_{op.kind.lower()}")(op)
        return self.mod

    # -- operators

    def _op_const(self, op):
        for k, net in enumerate(op.output.bits):
            self.mod.add_pin(net, bool((op.value >> k) & 1))

    def _op_add(self, op):
        a, b = op.inputs
        self._ripple_add(list(a.bits), list(b.bits), list(op.output.bits))

    def _ripple_add(self, a, b, out):
        w = len(out)
        carry = None
        for i in range(w):
            last = i == w - 1
            if carry is None:
                self.gate("XOR", A=a[i], B=b[i], Y=out[i])
                if not last:
                    carry = self.gate("AND", A=a[i], B=b[i])
            else:
                p = self.gate("XOR", A=a[i], B=b[i])
                self.gate("XOR", A=p, B=carry, Y=out[i])
                if not last:
                    g = self.gate("AND", A=a[i], B=b[i])
                    t = self.gate("AND", A=p, B=carry)
                    carry = self.gate("OR", A=g, B=t)

    def _op_mul(self, op):
        a, b = op.inputs
        w = op.output.width
        col = [None] * w
        for j in range(w):
            col[j] = self.gate("AND", A=a.bits[0], B=b.bits[j])
        for i in range(1, w):
            carry = None
            for j in range(i, w):
                pp = self.gate("AND", A=a.bits[i], B=b.bits[j - i])
                last = j == w - 1
                x = col[j]
                p = self.gate("XOR", A=x, B=pp)
                if carry is None:
                    col[j] = p
                    if not last:
                        carry = self.gate("AND", A=x, B=pp)
                else:
                    col[j] = self.gate("XOR", A=p, B=carry)
                    if not last:
                        g = self.gate("AND", A=x, B=pp)
                        t = self.gate("AND", A=p, B=carry)
                        carry = self.gate("OR", A=g, B=t)
        for j in range(w):
            self.alias(col[j], op.output.bits[j])

    def _unsigned_gt(self, a, b) -> str:
        """Ripple comparator from the LSB: gt = a_i > b_i or (a_i = b_i and gt)."""
        gt = None
        for i in range(len(a)):
            nb = self.gate("NOT", A=b[i])
            g = self.gate("AND", A=a[i], B=nb)
            if gt is None:
                gt = g
            else:
                e = self.gate("XNOR", A=a[i], B=b[i])
                t = self.gate("AND", A=e, B=gt)
                gt = self.gate("OR", A=g, B=t)
        return gt

    def _op_gt(self, op):
        a, b = op.inputs
        self.alias(self._unsigned_gt(a.bits, b.bits), op.output.bits[0])

    def _op_lt(self, op):
        a, b = op.inputs
        self.alias(self._unsigned_gt(b.bits, a.bits), op.output.bits[0])

    def _op_le(self, op):
        a, b = op.inputs
        gt = self._unsigned_gt(a.bits, b.bits)
        self.gate("NOT", A=gt, Y=op.output.bits[0])

    def _op_ge(self, op):
        a, b = op.inputs
        lt = self._unsigned_gt(b.bits, a.bits)
        self.gate("NOT", A=lt, Y=op.output.bits[0])

    def _eq_bits(self, a, b) -> list:
        return [self.gate("XNOR", A=x, B=y) for x, y in zip(a, b)]

    def _tree(self, cell: str, nets: list) -> str:
        while len(nets) > 1:
            nxt = []
            for k in range(0, len(nets) - 1, 2):
                nxt.append(self.gate(cell, A=nets[k], B=nets[k + 1]))
            if len(nets) % 2:
                nxt.append(nets[-1])
            nets = nxt
        return nets[0]

    def _op_eq(self, op):
        a, b = op.inputs
        self.alias(self._tree("AND", self._eq_bits(a.bits, b.bits)),
                   op.output.bits[0])

    def _op_neq(self, op):
        a, b = op.inputs
        eq = self._tree("AND", self._eq_bits(a.bits, b.bits))
        self.gate("NOT", A=eq, Y=op.output.bits[0])

    def _op_and_reduce(self, op):
        self.alias(self._tree("AND", list(op.inputs[0].bits)), op.output.bits[0])

    def _op_or1(self, op):
        a, b = op.inputs
        self.gate("OR", A=a.bits[0], B=b.bits[0], Y=op.output.bits[0])

    def _op_bit_and(self, op):
        a, b = op.inputs
        for x, y, z in zip(a.bits, b.bits, op.output.bits):
            self.gate("AND", A=x, B=y, Y=z)

    def _op_bit_or(self, op):
        a, b = op.inputs
        for x, y, z in zip(a.bits, b.bits, op.output.bits):
            self.gate("OR", A=x, B=y, Y=z)

    def _op_bit_not(self, op):
        for x, z in zip(op.inputs[0].bits, op.output.bits):
            self.gate("NOT", A=x, Y=z)

    def _op_call(self, op):
        callee = self.modules.get(op.callee)
        if callee is None:
            raise CircuitError(f"call to unlowered circuit {op.callee!r}")
        bindings = {}
        caller_nets = [n for bus in op.inputs for n in bus.bits]
        caller_nets.append(op.output.bits[0])
        if len(callee.ports) != len(caller_nets):
            raise CircuitError(
                f"call to {op.callee}: {len(caller_nets)} nets for "
                f"{len(callee.ports)} ports")
        for port, net in zip(callee.ports, caller_nets):
            bindings[port] = net
        self.mod.add_submodule(callee, bindings)


def lower(circuit: WordCircuit, lib: dict, modules: dict | None = None) -> NetlistModule:
    """Expand every word operator into standard cells.

    `modules` maps callee circuit names to their (already lowered)
    NetlistModules for CALL instantiation.
    """
    return _Lowerer(circuit, lib, modules or {}).lower()


def emit_debug_dump(circuit: WordCircuit) -> str:
    """Deterministic pretty-print of buses and ops (for goldens and humans)."""
    lines = [f"circuit {circuit.name}"]
    for bus in circuit.inputs:
        lines.append(f"  input {bus.name}[{bus.width}]")
    for bus in circuit.outputs:
        lines.append(f"  output {bus.name}[{bus.width}]")
    for op in circuit.ops:
        if op.kind == "CONST":
            lines.append(f"  {op.output.name}[{op.output.width}] = CONST {op.value}")
        elif op.kind == "CALL":
            args = ", ".join(f"{b.name}[{b.width}]" for b in op.inputs)
            lines.append(f"  {op.output.name}[{op.output.width}] = CALL {op.callee}({args})")
        else:
            args = " ".join(f"{b.name}[{b.width}]" for b in op.inputs)
            lines.append(f"  {op.output.name}[{op.output.width}] = {op.kind} {args}")
    return "\n".join(lines) + "\n"
