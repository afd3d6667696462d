"""Gate-level IR: cell instances wired by nets, hierarchical macros, alias
resolution, flattening to one logical Hamiltonian, and the QMASM-like text
format (emit + parse).

Connections are realized by spin identification (union-find over aliases and
port bindings), not by chain couplings; physical chains belong to `embed`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .cellgen import Cell
from .errors import NetlistError, QmasmSyntaxError
from .ising import Hamiltonian
from .textfmt import format_coeff, parse_coeff

Net = str


@dataclass
class CellInstance:
    cell: str
    instance_id: str
    port_bindings: dict

    def net_for(self, port: str) -> Net:
        return self.port_bindings.get(port, f"{self.instance_id}.{port}")


@dataclass
class SubmoduleInstance:
    module: "NetlistModule"
    instance_id: str
    port_bindings: dict

    def net_for(self, port: str) -> Net:
        return self.port_bindings.get(port, f"{self.instance_id}.{port}")


@dataclass
class NetlistModule:
    """A macro: raw h/J lines, cell instances, submodule instances, aliases
    and a pin list (pins are applied by the caller after flattening; they are
    not part of the text format)."""

    name: str
    ports: list = field(default_factory=list)
    instances: list = field(default_factory=list)
    submodules: list = field(default_factory=list)
    aliases: list = field(default_factory=list)
    weights: dict = field(default_factory=dict)
    strengths: dict = field(default_factory=dict)
    pins: list = field(default_factory=list)
    _next_id: int = 1

    def fresh_id(self) -> str:
        iid = f"$id{self._next_id:05d}"
        self._next_id += 1
        return iid

    def add_instance(self, cell: str, bindings=None, instance_id=None) -> CellInstance:
        inst = CellInstance(cell, instance_id or self.fresh_id(), dict(bindings or {}))
        self.instances.append(inst)
        return inst

    def add_submodule(self, module: "NetlistModule", bindings=None,
                      instance_id=None) -> SubmoduleInstance:
        inst = SubmoduleInstance(module, instance_id or self.fresh_id(),
                                 dict(bindings or {}))
        self.submodules.append(inst)
        return inst

    def add_alias(self, a: Net, b: Net):
        self.aliases.append((a, b))

    def add_weight(self, net: Net, value):
        self.weights[net] = self.weights.get(net, Fraction(0)) + Fraction(value)

    def add_strength(self, a: Net, b: Net, value):
        key = (a, b) if a <= b else (b, a)
        self.strengths[key] = self.strengths.get(key, Fraction(0)) + Fraction(value)

    def add_pin(self, net: Net, value: bool):
        self.pins.append((net, bool(value)))


class _UnionFind:
    def __init__(self):
        self.parent = {}

    def find(self, x):
        self.parent.setdefault(x, x)
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            # canonical representative: lexicographically least name
            keep, drop = (ra, rb) if ra <= rb else (rb, ra)
            self.parent[drop] = keep

    def canonical(self, x):
        if x not in self.parent:
            return x
        return self.find(x)


@dataclass
class FlattenResult:
    hamiltonian: Hamiltonian
    net_to_spin: dict
    pins: list
    directed_edges: list

    @property
    def num_spins(self) -> int:
        return self.hamiltonian.num_spins


def flatten(module: NetlistModule, lib: dict) -> FlattenResult:
    """Instantiate every cell with ports renamed to bound nets (ancillas
    freshly namespaced per instance), resolve aliases to single spins, and
    return the sum of all the pieces."""
    pieces = []
    aliases = []
    pins = []
    edges = []
    nets = set()

    def resolve(prefix: str, net: Net) -> Net:
        return prefix + net if prefix else net

    def walk(mod: NetlistModule, prefix: str, stack: tuple):
        if id(mod) in stack:
            raise NetlistError(f"module {mod.name!r} instantiates itself")
        stack = stack + (id(mod),)
        for net, value in mod.weights.items():
            pieces.append(Hamiltonian({resolve(prefix, net): value}))
            nets.add(resolve(prefix, net))
        for (a, b), value in mod.strengths.items():
            ra, rb = resolve(prefix, a), resolve(prefix, b)
            pieces.append(Hamiltonian(quadratic={(ra, rb): value}))
            nets.update((ra, rb))
        for port in mod.ports:
            nets.add(resolve(prefix, port))
        for net, value in mod.pins:
            pins.append((resolve(prefix, net), value))
            nets.add(resolve(prefix, net))
        for inst in mod.instances:
            cell = lib.get(inst.cell)
            if cell is None:
                raise NetlistError(f"unknown cell {inst.cell!r} "
                                   f"(instance {inst.instance_id})")
            bad = set(inst.port_bindings) - set(cell.ports)
            if bad:
                raise NetlistError(
                    f"instance {inst.instance_id} binds {sorted(bad)!r}, "
                    f"not ports of cell {inst.cell}")
            mapping = {}
            for port in cell.ports:
                bound = inst.port_bindings.get(port)
                net = (resolve(prefix, bound) if bound is not None
                       else f"{prefix}{inst.instance_id}.{port}")
                mapping[port] = net
                nets.add(net)
            for anc in cell.ancillas:
                mapping[anc] = f"{prefix}{inst.instance_id}.{anc}"
            pieces.append(cell.hamiltonian.rename(mapping))
            if cell.output is not None:
                out = mapping[cell.output]
                for port in cell.ports:
                    if port != cell.output:
                        edges.append((mapping[port], out))
        for sub in mod.submodules:
            inner = f"{prefix}{sub.instance_id}."
            bad = set(sub.port_bindings) - set(sub.module.ports)
            if bad:
                raise NetlistError(
                    f"instance {sub.instance_id} binds {sorted(bad)!r}, "
                    f"not ports of module {sub.module.name}")
            for port, bound in sub.port_bindings.items():
                outer = resolve(prefix, bound)
                aliases.append((inner + port, outer))
                nets.update((inner + port, outer))
            walk(sub.module, inner, stack)
        for a, b in mod.aliases:
            aliases.append((resolve(prefix, a), resolve(prefix, b)))

    walk(module, "", ())

    for a, b in aliases:
        if a not in nets:
            raise NetlistError(f"alias references unknown net {a!r}")
        if b not in nets:
            raise NetlistError(f"alias references unknown net {b!r}")

    uf = _UnionFind()
    for a, b in aliases:
        uf.union(a, b)

    total = Hamiltonian()
    for piece in pieces:
        total = total + piece.rename({s: uf.canonical(s) for s in piece.spins()})
    net_map = {net: uf.canonical(net) for net in nets}
    pin_list = [(uf.canonical(net), value) for net, value in pins]
    edge_list = [(uf.canonical(a), uf.canonical(b)) for a, b in edges]
    return FlattenResult(total, net_map, pin_list, edge_list)


def check_combinational_acyclic(result: FlattenResult) -> None:
    """Raise if the driven-output graph of the flattened design has a cycle."""
    adj: dict = {}
    for a, b in result.directed_edges:
        adj.setdefault(a, []).append(b)
    WHITE, GRAY, BLACK = 0, 1, 2
    color = {}
    for start in sorted(adj):
        if color.get(start, WHITE) != WHITE:
            continue
        stack = [(start, iter(adj.get(start, ())))]
        color[start] = GRAY
        while stack:
            node, it = stack[-1]
            advanced = False
            for nxt in it:
                c = color.get(nxt, WHITE)
                if c == GRAY:
                    raise NetlistError(f"combinational cycle through net {nxt!r}")
                if c == WHITE:
                    color[nxt] = GRAY
                    stack.append((nxt, iter(adj.get(nxt, ()))))
                    advanced = True
                    break
            if not advanced:
                color[node] = BLACK
                stack.pop()


# --- QMASM-like text format ------------------------------------------------

def _module_lines(mod: NetlistModule, out: list):
    out.append(f"!begin_macro {mod.name}")
    h_lines = [f"{net} {format_coeff(v)}" for net, v in mod.weights.items()]
    j_lines = [f"{a} {b} {format_coeff(v)}" for (a, b), v in mod.strengths.items()]
    out.extend(h_lines)
    if h_lines and j_lines:
        out.append("")
    out.extend(j_lines)
    for inst in mod.instances:
        out.append(f"!use_macro {inst.cell} {inst.instance_id}")
    for sub in mod.submodules:
        out.append(f"!use_macro {sub.module.name} {sub.instance_id}")
    for inst in mod.instances:
        for port, net in inst.port_bindings.items():
            out.append(f"{inst.instance_id}.{port} = {net}")
    for sub in mod.submodules:
        for port, net in sub.port_bindings.items():
            out.append(f"{sub.instance_id}.{port} = {net}")
    for a, b in mod.aliases:
        out.append(f"{a} <-> {b}")
    out.append(f"!end_macro {mod.name}")


def emit_qmasm_text(module: NetlistModule, include_stdcell: bool | None = None) -> str:
    """Deterministic macro text: submodule definitions in dependency order,
    the module itself, then one top-level instantiation."""
    defs: list = []
    seen = set()

    def collect(mod: NetlistModule):
        for sub in mod.submodules:
            collect(sub.module)
        if mod.name not in seen:
            seen.add(mod.name)
            defs.append(mod)

    collect(module)
    uses_cells = any(m.instances for m in defs)
    if include_stdcell is None:
        include_stdcell = uses_cells
    out: list = []
    if include_stdcell:
        out.append("!include <stdcell>")
        out.append("")
    for mod in defs:
        _module_lines(mod, out)
        out.append("")
    out.append(f"!use_macro {module.name} {module.name}")
    return "\n".join(out) + "\n"


def parse_qmasm_text(text: str, lib: dict | None = None) -> NetlistModule:
    """Parse the emit grammar back into a NetlistModule.

    "=" and "<->" both denote aliasing at the logical level (the chain form
    is kept for fidelity with the macro-assembler format).  Macros that are
    not library cells become submodules; `!include <stdcell>` binds the
    built-in standard-cell library.
    """
    cells: dict = dict(lib) if lib else {}
    macros: dict = {}
    current: NetlistModule | None = None
    top_level = NetlistModule("main")

    def target() -> NetlistModule:
        return current if current is not None else top_level

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        toks = line.split()
        if toks[0] == "!include":
            if len(toks) != 2:
                raise QmasmSyntaxError("!include takes one argument", lineno)
            if toks[1] == "<stdcell>":
                from .cellgen import standard_library

                cells.update(standard_library())
            else:
                raise QmasmSyntaxError(f"unknown include {toks[1]!r}", lineno)
            continue
        if toks[0] == "!begin_macro":
            if len(toks) != 2:
                raise QmasmSyntaxError("!begin_macro takes one name", lineno)
            if current is not None:
                raise QmasmSyntaxError("nested !begin_macro", lineno)
            current = NetlistModule(toks[1])
            continue
        if toks[0] == "!end_macro":
            if current is None:
                raise QmasmSyntaxError("!end_macro without !begin_macro", lineno)
            if len(toks) == 2 and toks[1] != current.name:
                raise QmasmSyntaxError(
                    f"!end_macro {toks[1]} does not match {current.name}", lineno)
            macros[current.name] = current
            current = None
            continue
        if toks[0] == "!use_macro":
            if len(toks) != 3:
                raise QmasmSyntaxError("!use_macro takes a macro and an instance name",
                                       lineno)
            name, inst_id = toks[1], toks[2]
            if name in cells:
                target().add_instance(name, instance_id=inst_id)
            elif name in macros:
                target().add_submodule(macros[name], instance_id=inst_id)
            else:
                raise QmasmSyntaxError(f"unknown macro {name!r}", lineno)
            continue
        if toks[0].startswith("!"):
            raise QmasmSyntaxError(f"unknown directive {toks[0]!r}", lineno)
        if "<->" in toks:
            if len(toks) != 3 or toks[1] != "<->":
                raise QmasmSyntaxError("alias form is 'NET1 <-> NET2'", lineno)
            target().add_alias(toks[0], toks[2])
            continue
        if "=" in toks:
            if len(toks) != 3 or toks[1] != "=":
                raise QmasmSyntaxError("chain form is 'NET1 = NET2'", lineno)
            target().add_alias(toks[0], toks[2])
            continue
        if len(toks) == 2:
            try:
                target().add_weight(toks[0], parse_coeff(toks[1]))
            except ValueError:
                raise QmasmSyntaxError(f"bad coefficient {toks[1]!r}", lineno)
            continue
        if len(toks) == 3:
            try:
                target().add_strength(toks[0], toks[1], parse_coeff(toks[2]))
            except ValueError:
                raise QmasmSyntaxError(f"bad coefficient {toks[2]!r}", lineno)
            continue
        raise QmasmSyntaxError(
            "expected 'NET value', 'NET NET value', alias, chain or directive",
            lineno)

    if current is not None:
        raise QmasmSyntaxError(f"unterminated macro {current.name}",
                               len(text.splitlines()))
    # a single bare top-level instantiation denotes the root macro itself
    if (len(top_level.submodules) == 1 and not top_level.instances
            and not top_level.weights and not top_level.strengths
            and not top_level.aliases):
        root = top_level.submodules[0].module
        _infer_ports(root)
        return root
    _infer_ports(top_level)
    return top_level


def _infer_ports(mod: NetlistModule) -> None:
    """Ports of a parsed macro: plain (non-hierarchical, non-generated) nets
    in order of first appearance."""
    if mod.ports:
        return
    seen = []

    def note(net: Net):
        if "." not in net and not net.startswith("$") and net not in seen:
            seen.append(net)

    for net in mod.weights:
        note(net)
    for a, b in mod.strengths:
        note(a)
        note(b)
    for a, b in mod.aliases:
        note(a)
        note(b)
    for inst in mod.instances:
        for net in inst.port_bindings.values():
            note(net)
    for sub in mod.submodules:
        for net in sub.port_bindings.values():
            note(net)
    mod.ports = seen
