"""Solver backends over logical or physical Hamiltonians.

Three exact/stochastic routes:

- ``exhaustive_solve``: enumerate all 2^N states (the oracle; guarded).
- ``elimination_solve``: exact min-sum variable elimination with full
  tie enumeration — returns exactly the ground states for Hamiltonians
  whose interaction graph has small induced width (circuit graphs do),
  far beyond the enumeration guard.
- ``simulated_anneal``: Metropolis sweeps with a geometric beta schedule,
  deterministic given the seed (counter-based random stream, so reads can
  run in any order and still replay).

Sample energies are always recomputed exactly (scaled-integer arithmetic);
floating point only decides Boltzmann acceptance inside SA sweeps.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import GuardError
from .ising import DEFAULT_MAX_SPINS, Hamiltonian, _sorted_spins, ground_states
from .kernels import active_backend, hamiltonian_arrays

#: Largest message-table width (in bits) the elimination solver will build.
ELIM_WIDTH_GUARD = 22
#: Ground-state count guard for elimination decoding.
ELIM_MAX_STATES = 1 << 16


@dataclass(frozen=True)
class AnnealParams:
    reads: int = 1000
    sweeps: int = 1000
    beta_initial: float = 0.1
    beta_final: float = 10.0
    seed: int = 0

    def __post_init__(self):
        if self.reads < 1 or self.sweeps < 1:
            raise ValueError("reads and sweeps must be >= 1")
        if not 0 < self.beta_initial <= self.beta_final:
            raise ValueError("need 0 < beta_initial <= beta_final")

    def betas(self) -> np.ndarray:
        return np.geomspace(self.beta_initial, self.beta_final, self.sweeps)


@dataclass
class SampleSet:
    """Distinct states with exact energies and multiplicities.

    Invariant: sum of counts + metadata['rejected'] == metadata['total_reads'].
    """

    spins: tuple
    records: list                    # (values tuple, energy Fraction, count)
    metadata: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.records)

    def min_energy(self) -> Fraction:
        return min(e for _, e, _ in self.records)

    def total_count(self) -> int:
        return sum(c for _, _, c in self.records)

    def audit(self, h: Hamiltonian) -> bool:
        """Recompute every stored energy exactly; True iff all match."""
        for values, energy, _ in self.records:
            assignment = dict(zip(self.spins, values))
            if h.energy(assignment) != energy:
                return False
        return True

    def filter_min_energy(self) -> "SampleSet":
        """Keep only the minimum-energy records (counts preserved)."""
        if not self.records:
            return self
        emin = self.min_energy()
        kept = [r for r in self.records if r[1] == emin]
        dropped = sum(c for _, e, c in self.records if e != emin)
        meta = dict(self.metadata)
        meta["filtered_suboptimal"] = meta.get("filtered_suboptimal", 0) + dropped
        return SampleSet(self.spins, kept, meta)

    def dump(self) -> str:
        """One line per distinct state: ±1 string in spin order, energy, count."""
        lines = [f"# spins: {' '.join(str(s) for s in self.spins)}"]
        for values, energy, count in self.records:
            bits = "".join("+" if v > 0 else "-" for v in values)
            lines.append(f"{bits} {energy} {count}")
        return "\n".join(lines) + "\n"


def _records_from_states(h, spins, states, counts=None):
    hvec, pi, pj, jv, denom = hamiltonian_arrays(h, spins)
    records = []
    for k, values in enumerate(states):
        arr = np.asarray(values, dtype=np.int64)
        e = int(arr @ hvec)
        if len(pi):
            e += int((arr[pi] * arr[pj]) @ jv)
        energy = Fraction(e, denom) + h.offset
        records.append((tuple(int(v) for v in values), energy,
                        1 if counts is None else counts[k]))
    records.sort(key=lambda r: (r[1], r[0]))
    return records


def exhaustive_solve(h: Hamiltonian, max_spins: int = DEFAULT_MAX_SPINS) -> SampleSet:
    """SampleSet of exactly the ground states, each with count 1."""
    gs = ground_states(h, max_spins)  # raises GuardError beyond the guard
    records = _records_from_states(h, gs.spins, sorted(gs.states))
    return SampleSet(gs.spins, records,
                     {"backend": "exhaustive", "total_reads": len(records),
                      "rejected": 0})


# --- exact variable elimination ---------------------------------------------

class _Factor:
    __slots__ = ("scope", "table")

    def __init__(self, scope, table):
        self.scope = tuple(scope)   # spin indices, ascending elimination position
        self.table = table          # int64 ndarray, shape (2,)*len(scope); 0 = -1

    def value_at(self, assignment) -> int:
        ix = tuple(1 if assignment[v] > 0 else 0 for v in self.scope)
        return int(self.table[ix])


def _elimination_order(n, edges):
    """Greedy min-degree order on the interaction graph (with fill-in);
    returns (order, max cluster size)."""
    adj = [set() for _ in range(n)]
    for i, j in edges:
        adj[i].add(j)
        adj[j].add(i)
    remaining = set(range(n))
    order = []
    width = 0
    while remaining:
        v = min(remaining, key=lambda s: (len(adj[s] & remaining), s))
        nbrs = adj[v] & remaining
        width = max(width, len(nbrs))
        for a in nbrs:
            adj[a].update(nbrs - {a})
        remaining.remove(v)
        order.append(v)
    return order, width


def elimination_width(h: Hamiltonian) -> int:
    """Induced width (max message scope) of the Hamiltonian's graph under
    the solver's elimination order; cheap feasibility probe."""
    spins = _sorted_spins(h)
    index = {s: k for k, s in enumerate(spins)}
    edges = [(index[i], index[j]) for (i, j) in h.quadratic]
    _, width = _elimination_order(len(spins), edges)
    return width


def elimination_solve(h: Hamiltonian, max_width: int = ELIM_WIDTH_GUARD,
                      max_states: int = ELIM_MAX_STATES) -> SampleSet:
    """All ground states by min-sum bucket elimination with tie branching.

    Exact (scaled-integer tables).  Refuses when the induced width exceeds
    `max_width` bits or the ground manifold exceeds `max_states` states.
    """
    spins = _sorted_spins(h)
    n = len(spins)
    if n == 0:
        return SampleSet((), [((), h.offset, 1)],
                         {"backend": "elimination", "total_reads": 1, "rejected": 0})
    hvec, pi, pj, jv, denom = hamiltonian_arrays(h, spins)
    edges = list(zip(pi.tolist(), pj.tolist()))
    order, width = _elimination_order(n, edges)
    if width > max_width:
        raise GuardError(
            f"elimination width {width} exceeds the guard of {max_width}; "
            "use the sampling backend instead")
    pos = {v: k for k, v in enumerate(order)}

    factors = []
    for i in range(n):
        if hvec[i]:
            factors.append(_Factor((i,), np.array([-hvec[i], hvec[i]],
                                                  dtype=np.int64)))
    for k in range(len(pi)):
        w = jv[k]
        table = np.array([[w, -w], [-w, w]], dtype=np.int64)
        factors.append(_Factor((int(pi[k]), int(pj[k])), table))

    buckets: dict = {v: [] for v in range(n)}
    for f in factors:
        first = min(f.scope, key=lambda v: pos[v])
        buckets[first].append(f)

    constant = 0
    saved: dict = {}
    for v in order:
        bucket = buckets[v]
        saved[v] = list(bucket)
        if not bucket:
            # unconstrained spin: both values optimal
            continue
        scope_union = sorted({u for f in bucket for u in f.scope} - {v},
                             key=lambda u: pos[u])
        full = [v] + scope_union
        acc = np.zeros((2,) * len(full), dtype=np.int64)
        for f in bucket:
            perm = [f.scope.index(u) for u in full if u in f.scope]
            t = np.transpose(f.table, perm)
            shape = tuple(2 if u in f.scope else 1 for u in full)
            acc = acc + t.reshape(shape)
        msg = acc.min(axis=0)
        if scope_union:
            nf = _Factor(tuple(scope_union), msg)
            first = min(nf.scope, key=lambda u: pos[u])
            buckets[first].append(nf)
        else:
            constant += int(msg)

    # enumerate every optimal assignment by branching on ties in reverse order
    partials = [dict()]
    for v in reversed(order):
        bucket = saved[v]
        nxt = []
        for partial in partials:
            if not bucket:
                choices = (-1, 1)
            else:
                e_lo = e_hi = 0
                for f in bucket:
                    partial[v] = -1
                    e_lo += f.value_at(partial)
                    partial[v] = 1
                    e_hi += f.value_at(partial)
                del partial[v]
                if e_lo < e_hi:
                    choices = (-1,)
                elif e_hi < e_lo:
                    choices = (1,)
                else:
                    choices = (-1, 1)
            for choice in choices:
                cand = dict(partial)
                cand[v] = choice
                nxt.append(cand)
        if len(nxt) > max_states:
            raise GuardError(
                f"more than {max_states} degenerate ground states; "
                "raise max_states or pin more spins")
        partials = nxt

    states = sorted(tuple(p[i] for i in range(n)) for p in partials)
    records = _records_from_states(h, spins, states)
    emin = records[0][1] if records else h.offset
    assert all(e == emin for _, e, _ in records), "elimination decode mismatch"
    return SampleSet(spins, records,
                     {"backend": "elimination", "total_reads": len(records),
                      "rejected": 0, "width": width})


def simulated_anneal(h: Hamiltonian, params: AnnealParams | None = None) -> SampleSet:
    """Metropolis single-spin-flip annealing; final state of each read.

    Sweep order is the fixed sorted spin order; the per-(read, sweep, spin)
    random stream is counter-based, so a fixed seed replays exactly.
    """
    params = params or AnnealParams()
    spins = _sorted_spins(h)
    n = len(spins)
    if n == 0:
        return SampleSet((), [((), h.offset, params.reads)],
                         {"backend": "sa", "total_reads": params.reads,
                          "rejected": 0})
    hvec, pi, pj, jv, denom = hamiltonian_arrays(h, spins)
    betas = params.betas() / float(denom)  # scaled-int dE * beta_eff
    finals = active_backend().sa_sample(n, hvec, pi, pj, jv, betas,
                                        params.reads, params.seed)
    uniq: dict = {}
    for row in finals:
        key = tuple(int(v) for v in row)
        uniq[key] = uniq.get(key, 0) + 1
    states = sorted(uniq)
    records = _records_from_states(h, spins, states, [uniq[s] for s in states])
    return SampleSet(spins, records,
                     {"backend": "sa", "total_reads": params.reads, "rejected": 0,
                      "reads": params.reads, "sweeps": params.sweeps,
                      "beta_initial": params.beta_initial,
                      "beta_final": params.beta_final, "seed": params.seed})


def solve(h: Hamiltonian, backend: str = "auto",
          params: AnnealParams | None = None,
          max_spins: int = DEFAULT_MAX_SPINS) -> SampleSet:
    """Backend dispatch.

    auto: enumeration within the spin guard, exact elimination when the
    interaction graph is narrow enough, simulated annealing otherwise.
    exhaustive: exact result required — enumeration or elimination; refuses
    (GuardError) if both guards fail.
    sa: simulated annealing.
    """
    n = h.num_spins
    if backend == "auto":
        if n <= max_spins:
            result = exhaustive_solve(h, max_spins)
        elif elimination_width(h) <= ELIM_WIDTH_GUARD:
            result = elimination_solve(h)
        else:
            result = simulated_anneal(h, params)
    elif backend == "exhaustive":
        if n <= max_spins:
            result = exhaustive_solve(h, max_spins)
        else:
            result = elimination_solve(h)  # GuardError when too wide
    elif backend == "sa":
        result = simulated_anneal(h, params)
    else:
        raise ValueError(f"unknown backend {backend!r}")
    return result
