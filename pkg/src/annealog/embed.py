"""Simulated Chimera hardware, stochastic minor embedding, chain coupling
with range scaling, and unembedding of physical samples.

Qubits are integers: cell (row, col) of an MxN grid of K4,4 unit cells,
side 0 (vertical shore, couples to the cells above/below) or side 1
(horizontal shore, couples left/right), index k in 0..3:
``qubit = ((row*N + col)*2 + side)*4 + k``.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import EmbeddingError, HardwareFormatError
from .ising import Hamiltonian, as_coeff
from .kernels import derive_seed
from .textfmt import format_coeff, parse_coeff

SHORE = 4


@dataclass
class ChimeraGraph:
    rows: int
    cols: int
    dead_qubits: frozenset = frozenset()
    dead_couplers: frozenset = frozenset()
    h_range: tuple = (Fraction(-2), Fraction(2))
    j_range: tuple = (Fraction(-1), Fraction(1))

    def __post_init__(self):
        self.h_range = (as_coeff(self.h_range[0]), as_coeff(self.h_range[1]))
        self.j_range = (as_coeff(self.j_range[0]), as_coeff(self.j_range[1]))
        self._adj = None

    @property
    def num_qubits(self) -> int:
        return self.rows * self.cols * 2 * SHORE

    def qubit(self, row: int, col: int, side: int, k: int) -> int:
        return ((row * self.cols + col) * 2 + side) * SHORE + k

    def all_couplers(self):
        """Every coupler of the pristine topology, canonically ordered."""
        for r in range(self.rows):
            for c in range(self.cols):
                for k0 in range(SHORE):
                    v = self.qubit(r, c, 0, k0)
                    for k1 in range(SHORE):
                        yield (v, self.qubit(r, c, 1, k1))
                for k in range(SHORE):
                    if r + 1 < self.rows:
                        yield (self.qubit(r, c, 0, k), self.qubit(r + 1, c, 0, k))
                    if c + 1 < self.cols:
                        yield (self.qubit(r, c, 1, k), self.qubit(r, c + 1, 1, k))

    def usable_qubits(self) -> list:
        return [q for q in range(self.num_qubits) if q not in self.dead_qubits]

    def usable_couplers(self) -> list:
        out = []
        for a, b in self.all_couplers():
            if (a in self.dead_qubits or b in self.dead_qubits
                    or (a, b) in self.dead_couplers):
                continue
            out.append((a, b))
        return out

    def adjacency(self) -> dict:
        if self._adj is None:
            adj: dict = {q: [] for q in self.usable_qubits()}
            for a, b in self.usable_couplers():
                adj[a].append(b)
                adj[b].append(a)
            for q in adj:
                adj[q].sort()
            self._adj = adj
        return self._adj

    def has_coupler(self, a: int, b: int) -> bool:
        key = (a, b) if a < b else (b, a)
        return (a not in self.dead_qubits and b not in self.dead_qubits
                and key not in self.dead_couplers and b in self.adjacency().get(a, ()))


def generate_chimera(rows: int, cols: int, dead_fraction: float = 0.0,
                     seed: int = 0) -> ChimeraGraph:
    """Deterministic simulated hardware; qubits and couplers die independently
    with probability `dead_fraction` (a coupler with a dead endpoint is dead
    regardless)."""
    if rows < 1 or cols < 1:
        raise ValueError("rows and cols must be >= 1")
    if not 0 <= dead_fraction < 1:
        raise ValueError("dead_fraction must be in [0, 1)")
    base = ChimeraGraph(rows, cols)
    dead_q: set = set()
    dead_c: set = set()
    if dead_fraction > 0:
        rng = np.random.default_rng(derive_seed(seed, 0xC1))
        mask = rng.random(base.num_qubits) < dead_fraction
        dead_q = set(np.nonzero(mask)[0].tolist())
        couplers = list(base.all_couplers())
        mask_c = rng.random(len(couplers)) < dead_fraction
        dead_c = {couplers[k] for k in np.nonzero(mask_c)[0]}
    return ChimeraGraph(rows, cols, frozenset(dead_q), frozenset(dead_c))


@dataclass
class Embedding:
    """logical spin -> chain (non-empty set of physical qubits)."""

    chains: dict

    def all_qubits(self) -> set:
        out: set = set()
        for chain in self.chains.values():
            out |= chain
        return out

    def dump(self) -> str:
        lines = []
        for spin in sorted(self.chains, key=str):
            qubits = " ".join(str(q) for q in sorted(self.chains[spin]))
            lines.append(f"{spin} -> [{qubits}]")
        return "\n".join(lines) + "\n"


def validate_embedding(emb: Embedding, edges, hw: ChimeraGraph) -> list:
    """Check disjointness, chain connectivity, and edge coverage; returns
    human-readable problems (empty = valid)."""
    problems = []
    seen: dict = {}
    adj = hw.adjacency()
    for spin, chain in emb.chains.items():
        if not chain:
            problems.append(f"{spin}: empty chain")
            continue
        for q in chain:
            if q in hw.dead_qubits:
                problems.append(f"{spin}: dead qubit {q}")
            if q in seen:
                problems.append(f"{spin}: qubit {q} already used by {seen[q]}")
            seen[q] = spin
        # connectivity over usable couplers within the chain
        chain = set(chain)
        start = min(chain)
        visited = {start}
        queue = deque([start])
        while queue:
            q = queue.popleft()
            for nb in adj.get(q, ()):
                if nb in chain and nb not in visited:
                    visited.add(nb)
                    queue.append(nb)
        if visited != chain:
            problems.append(f"{spin}: chain {sorted(chain)} not connected")
    for a, b in edges:
        ca = emb.chains.get(a, set())
        cb = emb.chains.get(b, set())
        if not any(hw.has_coupler(q, p) for q in ca for p in cb):
            problems.append(f"no usable coupler between chains of {a} and {b}")
    return problems


def _grow_chain(target_chains, adj, used, rng):
    """Chain for a new vertex: BFS from each embedded neighbor chain through
    free qubits, then claim the free qubit minimizing the total distance plus
    the connecting paths."""
    dist_maps = []
    for chain in target_chains:
        dist: dict = {}
        queue = deque()
        for q in sorted(chain):
            for nb in adj[q]:
                if nb not in used and nb not in dist:
                    dist[nb] = (0, None)  # distance, parent
                    queue.append(nb)
        while queue:
            q = queue.popleft()
            d, _ = dist[q]
            for nb in adj[q]:
                if nb not in used and nb not in dist:
                    dist[nb] = (d + 1, q)
                    queue.append(nb)
        if not dist:
            return None
        dist_maps.append(dist)
    candidates = set(dist_maps[0])
    for dist in dist_maps[1:]:
        candidates &= set(dist)
    if not candidates:
        return None
    best = min(candidates, key=lambda q: (sum(d[q][0] for d in dist_maps), q))
    chain = {best}
    for dist in dist_maps:
        q = best
        while dist[q][1] is not None:
            q = dist[q][1]
            chain.add(q)
    return chain


def find_embedding(edges, nodes, hw: ChimeraGraph, seed: int = 0,
                   max_tries: int = 32) -> Embedding:
    """Randomized greedy chain growth with chain-reduction passes.

    Deterministic given the seed.  Raises EmbeddingError (reporting the
    largest embedded subgraph reached) when every try fails.
    """
    nodes = sorted(set(nodes) | {v for e in edges for v in e}, key=str)
    adjacency: dict = {v: set() for v in nodes}
    for a, b in edges:
        if a != b:
            adjacency[a].add(b)
            adjacency[b].add(a)
    adj = hw.adjacency()
    usable = sorted(adj)
    if not usable:
        raise EmbeddingError("no usable qubits", 0)
    best_progress = 0

    for trial in range(max_tries):
        rng = np.random.default_rng(derive_seed(seed, trial))
        order = list(nodes)
        rng.shuffle(order)
        order.sort(key=lambda v: -len(adjacency[v]))  # stable: keeps shuffle ties
        chains: dict = {}
        used: set = set()
        ok = True
        for v in order:
            placed = [u for u in sorted(adjacency[v], key=str) if u in chains]
            if not placed:
                free = [q for q in usable if q not in used]
                if not free:
                    ok = False
                    break
                chain = {free[rng.integers(len(free))]}
            else:
                chain = _grow_chain([chains[u] for u in placed], adj, used, rng)
                if chain is None:
                    ok = False
                    break
            chains[v] = chain
            used |= chain
            best_progress = max(best_progress, len(chains))
        if not ok:
            continue
        _reduce_chains(chains, adjacency, adj, passes=2)
        emb = Embedding(chains)
        if not validate_embedding(emb, edges, hw):
            return emb
    raise EmbeddingError(
        f"no embedding found in {max_tries} tries "
        f"(best partial: {best_progress}/{len(nodes)} vertices)", best_progress)


def _reduce_chains(chains, adjacency, adj, passes: int = 2):
    """Re-grow each chain with all neighbors present; keep shorter results."""
    for _ in range(passes):
        for v in sorted(chains, key=lambda v: (-len(chains[v]), str(v))):
            neighbors = [u for u in sorted(adjacency[v], key=str) if u in chains]
            if not neighbors:
                continue
            used = set()
            for u, chain in chains.items():
                if u != v:
                    used |= chain
            regrown = _grow_chain([chains[u] for u in neighbors], adj, used, None)
            if regrown is not None and len(regrown) < len(chains[v]):
                chains[v] = regrown


@dataclass
class PhysicalHamiltonian:
    hamiltonian: Hamiltonian         # over physical qubit ids (ints)
    chain_couplers: frozenset        # quadratic keys that realize chains
    scale_factor: Fraction
    embedding: Embedding


def default_chain_strength(h: Hamiltonian) -> Fraction:
    """2x the maximum absolute logical coefficient (configurable upstream)."""
    return 2 * max(h.max_abs_coefficient(), Fraction(1))


def embed_hamiltonian(h: Hamiltonian, emb: Embedding, hw: ChimeraGraph,
                      chain_strength=None, quantize_step=None) -> PhysicalHamiltonian:
    """Map a logical Hamiltonian onto hardware.

    Linear terms split equally across chain members; each logical coupling
    lands on the lowest-numbered usable inter-chain coupler; chains get
    ferromagnetic couplers of -chain_strength along a BFS spanning tree; the
    whole is uniformly scaled by the largest factor (capped at 1) that keeps
    every coefficient within the hardware ranges.
    """
    if chain_strength is None:
        chain_strength = default_chain_strength(h)
    chain_strength = as_coeff(chain_strength)
    if chain_strength <= 0:
        raise ValueError("chain_strength must be positive")
    adj = hw.adjacency()
    linear: dict = {}
    quadratic: dict = {}
    chain_keys: set = set()

    for spin in sorted(h.spins(), key=str):
        chain = emb.chains.get(spin)
        if not chain:
            raise EmbeddingError(f"no chain for logical spin {spin!r}")
        coeff = h.linear.get(spin)
        if coeff:
            share = coeff / len(chain)
            for q in sorted(chain):
                linear[q] = linear.get(q, Fraction(0)) + share
        # spanning tree from the lowest qubit id
        chain = set(chain)
        root = min(chain)
        seenq = {root}
        queue = deque([root])
        while queue:
            q = queue.popleft()
            for nb in adj.get(q, ()):
                if nb in chain and nb not in seenq:
                    seenq.add(nb)
                    queue.append(nb)
                    key = (q, nb) if q < nb else (nb, q)
                    quadratic[key] = quadratic.get(key, Fraction(0)) - chain_strength
                    chain_keys.add(key)
        if seenq != chain:
            raise EmbeddingError(f"chain of {spin!r} is not connected on hardware")

    for (a, b), coeff in sorted(h.quadratic.items(), key=lambda kv: (str(kv[0][0]),
                                                                     str(kv[0][1]))):
        pairs = [(q, p) for q in sorted(emb.chains[a]) for p in sorted(emb.chains[b])
                 if hw.has_coupler(q, p)]
        if not pairs:
            raise EmbeddingError(f"no usable coupler for logical edge ({a}, {b})")
        q, p = min(pairs)
        key = (q, p) if q < p else (p, q)
        quadratic[key] = quadratic.get(key, Fraction(0)) + coeff

    phys = Hamiltonian(linear, quadratic, h.offset)
    factor = Fraction(1)
    h_lo, h_hi = hw.h_range
    j_lo, j_hi = hw.j_range
    for value in phys.linear.values():
        bound = h_hi / value if value > 0 else h_lo / value
        factor = min(factor, bound)
    for value in phys.quadratic.values():
        bound = j_hi / value if value > 0 else j_lo / value
        factor = min(factor, bound)
    if factor != 1:
        phys = phys.scale(factor)
    if quantize_step:
        step = as_coeff(quantize_step)
        phys = Hamiltonian(
            {q: round(v / step) * step for q, v in phys.linear.items()},
            {k: round(v / step) * step for k, v in phys.quadratic.items()},
            phys.offset)
    return PhysicalHamiltonian(phys, frozenset(chain_keys), factor, emb)


def unembed_sample(sample: dict, emb: Embedding, policy: str = "discard"):
    """Physical assignment -> logical assignment, or None for a rejected
    (broken-chain) sample under the discard policy.  Majority voting breaks
    exact ties toward -1."""
    if policy not in ("discard", "majority"):
        raise ValueError(f"unknown unembed policy {policy!r}")
    logical = {}
    for spin, chain in emb.chains.items():
        values = [sample[q] for q in sorted(chain)]
        total = sum(values)
        if abs(total) == len(values):
            logical[spin] = values[0]
        elif policy == "discard":
            return None
        else:
            logical[spin] = 1 if total > 0 else -1
    return logical


# --- hardware description files ----------------------------------------------

def save_hardware(hw: ChimeraGraph) -> str:
    lines = [f"chimera {hw.rows} {hw.cols} {SHORE}",
             f"h_range {format_coeff(hw.h_range[0])} {format_coeff(hw.h_range[1])}",
             f"j_range {format_coeff(hw.j_range[0])} {format_coeff(hw.j_range[1])}"]
    for q in sorted(hw.dead_qubits):
        lines.append(f"dead_qubit {q}")
    for a, b in sorted(hw.dead_couplers):
        lines.append(f"dead_coupler {a} {b}")
    return "\n".join(lines) + "\n"


def load_hardware(text: str) -> ChimeraGraph:
    rows = cols = None
    h_range = (Fraction(-2), Fraction(2))
    j_range = (Fraction(-1), Fraction(1))
    dead_q: set = set()
    dead_c: set = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        toks = line.split()
        try:
            if toks[0] == "chimera" and len(toks) == 4:
                rows, cols = int(toks[1]), int(toks[2])
                if int(toks[3]) != SHORE:
                    raise HardwareFormatError(f"line {lineno}: shore must be {SHORE}")
            elif toks[0] == "h_range" and len(toks) == 3:
                h_range = (parse_coeff(toks[1]), parse_coeff(toks[2]))
            elif toks[0] == "j_range" and len(toks) == 3:
                j_range = (parse_coeff(toks[1]), parse_coeff(toks[2]))
            elif toks[0] == "dead_qubit" and len(toks) == 2:
                dead_q.add(int(toks[1]))
            elif toks[0] == "dead_coupler" and len(toks) == 3:
                a, b = int(toks[1]), int(toks[2])
                dead_c.add((a, b) if a < b else (b, a))
            else:
                raise HardwareFormatError(f"line {lineno}: unrecognized entry {line!r}")
        except ValueError as exc:
            raise HardwareFormatError(f"line {lineno}: {exc}") from exc
    if rows is None:
        raise HardwareFormatError("missing 'chimera M N 4' header")
    return ChimeraGraph(rows, cols, frozenset(dead_q), frozenset(dead_c),
                        h_range, j_range)
