"""Exact 2-local Ising Hamiltonians over symbolic spins.

Coefficients are exact rationals (`fractions.Fraction`); all ground-state
comparisons are exact.  Spins take values in {-1, +1} with the project-wide
convention false <-> -1, true <-> +1.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import lcm
from types import MappingProxyType
from typing import Iterable, Mapping, Sequence, Union

from .errors import EvaluationError, GuardError

SpinId = Union[str, int]

#: Enumeration guard: 2^24 = 16.7M assignments is the desk-scale oracle bound.
DEFAULT_MAX_SPINS = 24


def as_coeff(value) -> Fraction:
    """Coerce a number to an exact Fraction (floats go through their repr)."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        return Fraction(str(value))
    if isinstance(value, str):
        return Fraction(value)
    raise TypeError(f"cannot use {value!r} as a coefficient")


def spin_of_bool(b: bool) -> int:
    return 1 if b else -1


def bool_of_spin(s: int) -> bool:
    return s > 0


def canonical_pair(i: SpinId, j: SpinId) -> tuple[SpinId, SpinId]:
    return (i, j) if i <= j else (j, i)


class Hamiltonian:
    """Immutable sparse Hamiltonian: linear h_i, quadratic J_ij and an offset.

    The offset carries constant terms produced when aliasing collapses a
    quadratic coupling onto a single spin (sigma^2 = 1); it shifts energies
    but never the set of minimizers.  Zero-valued entries are dropped and
    quadratic keys are stored canonically ordered, so two equal Hamiltonians
    compare equal structurally.
    """

    __slots__ = ("_linear", "_quadratic", "_offset", "_spins")

    def __init__(self, linear=None, quadratic=None, offset=0):
        lin: dict[SpinId, Fraction] = {}
        for spin, value in (linear or {}).items():
            v = as_coeff(value)
            if v:
                lin[spin] = v
        quad: dict[tuple[SpinId, SpinId], Fraction] = {}
        off = as_coeff(offset)
        for pair, value in (quadratic or {}).items():
            i, j = pair
            v = as_coeff(value)
            if i == j:
                off += v  # sigma_i * sigma_i == 1
                continue
            key = canonical_pair(i, j)
            v = quad.get(key, Fraction(0)) + v
            if v:
                quad[key] = v
            else:
                quad.pop(key, None)
        self._linear = lin
        self._quadratic = quad
        self._offset = off
        spins = set(lin)
        for i, j in quad:
            spins.add(i)
            spins.add(j)
        self._spins = frozenset(spins)

    @property
    def linear(self) -> Mapping[SpinId, Fraction]:
        return MappingProxyType(self._linear)

    @property
    def quadratic(self) -> Mapping[tuple[SpinId, SpinId], Fraction]:
        return MappingProxyType(self._quadratic)

    @property
    def offset(self) -> Fraction:
        return self._offset

    def spins(self) -> frozenset:
        return self._spins

    @property
    def num_spins(self) -> int:
        return len(self._spins)

    def energy(self, assignment: Mapping[SpinId, int]) -> Fraction:
        """Evaluate sum h_i*s_i + sum J_ij*s_i*s_j + offset, exactly."""
        total = self._offset
        for spin, coeff in self._linear.items():
            s = assignment.get(spin)
            if s is None:
                raise EvaluationError(f"no value assigned to spin {spin!r}")
            total += coeff * s
        for (i, j), coeff in self._quadratic.items():
            si = assignment.get(i)
            sj = assignment.get(j)
            if si is None:
                raise EvaluationError(f"no value assigned to spin {i!r}")
            if sj is None:
                raise EvaluationError(f"no value assigned to spin {j!r}")
            total += coeff * si * sj
        return total

    def __add__(self, other: "Hamiltonian") -> "Hamiltonian":
        if not isinstance(other, Hamiltonian):
            return NotImplemented
        lin = dict(self._linear)
        for spin, value in other._linear.items():
            lin[spin] = lin.get(spin, Fraction(0)) + value
        quad = dict(self._quadratic)
        for pair, value in other._quadratic.items():
            quad[pair] = quad.get(pair, Fraction(0)) + value
        return Hamiltonian(lin, quad, self._offset + other._offset)

    def scale(self, k) -> "Hamiltonian":
        """Multiply every coefficient (and the offset) by k."""
        k = as_coeff(k)
        return Hamiltonian(
            {s: v * k for s, v in self._linear.items()},
            {p: v * k for p, v in self._quadratic.items()},
            self._offset * k,
        )

    def __neg__(self) -> "Hamiltonian":
        return self.scale(-1)

    def __sub__(self, other: "Hamiltonian") -> "Hamiltonian":
        return self + (-other)

    def pin(self, spin: SpinId, value: bool, weight=1) -> "Hamiltonian":
        """Bias `spin` toward `value`: adds -weight*sigma for true, +weight for false."""
        w = as_coeff(weight)
        if w <= 0:
            raise ValueError(f"pin weight must be positive, got {weight}")
        return self + Hamiltonian({spin: -w if value else w})

    def rename(self, mapping: Mapping[SpinId, SpinId]) -> "Hamiltonian":
        """Rename spins; identified spins merge (may produce offset terms)."""
        lin: dict[SpinId, Fraction] = {}
        for spin, value in self._linear.items():
            t = mapping.get(spin, spin)
            lin[t] = lin.get(t, Fraction(0)) + value
        quad: dict[tuple[SpinId, SpinId], Fraction] = {}
        for (i, j), value in self._quadratic.items():
            key = (mapping.get(i, i), mapping.get(j, j))
            quad[key] = quad.get(key, Fraction(0)) + value
        return Hamiltonian(lin, quad, self._offset)

    def max_abs_coefficient(self) -> Fraction:
        best = Fraction(0)
        for v in self._linear.values():
            if abs(v) > best:
                best = abs(v)
        for v in self._quadratic.values():
            if abs(v) > best:
                best = abs(v)
        return best

    def coefficient_denominator_lcm(self) -> int:
        d = self._offset.denominator
        for v in self._linear.values():
            d = lcm(d, v.denominator)
        for v in self._quadratic.values():
            d = lcm(d, v.denominator)
        return d

    def is_empty(self) -> bool:
        return not self._linear and not self._quadratic and not self._offset

    def __eq__(self, other) -> bool:
        if not isinstance(other, Hamiltonian):
            return NotImplemented
        return (self._linear == other._linear
                and self._quadratic == other._quadratic
                and self._offset == other._offset)

    def __hash__(self):
        return hash((frozenset(self._linear.items()),
                     frozenset(self._quadratic.items()), self._offset))

    def __repr__(self):
        parts = []
        for s, v in sorted(self._linear.items(), key=lambda kv: str(kv[0])):
            parts.append(f"{v}*s[{s}]")
        for (i, j), v in sorted(self._quadratic.items(), key=lambda kv: (str(kv[0][0]), str(kv[0][1]))):
            parts.append(f"{v}*s[{i}]s[{j}]")
        if self._offset:
            parts.append(str(self._offset))
        return "Hamiltonian(" + " + ".join(parts or ["0"]) + ")"


@dataclass(frozen=True)
class GroundStateSet:
    """Exact minimum energy and every assignment achieving it.

    `states` holds value tuples aligned with the sorted `spins` tuple.
    """

    energy: Fraction
    spins: tuple
    states: frozenset

    def as_dicts(self) -> list[dict]:
        return [dict(zip(self.spins, st)) for st in sorted(self.states)]

    def __len__(self):
        return len(self.states)


def _sorted_spins(h: Hamiltonian) -> tuple:
    return tuple(sorted(h.spins(), key=lambda s: (isinstance(s, str), str(s))))


def ground_states(h: Hamiltonian, max_spins: int = DEFAULT_MAX_SPINS) -> GroundStateSet:
    """Exhaustively enumerate all 2^N assignments; return all minimizers.

    Refuses above `max_spins` — use the sampling backend for larger problems.
    """
    spins = _sorted_spins(h)
    n = len(spins)
    if n > max_spins:
        raise GuardError(
            f"{n} spins exceed the exhaustive guard of {max_spins}; "
            "use the sampling backend instead")
    if n == 0:
        return GroundStateSet(h.offset, (), frozenset({()}))

    from .kernels import active_backend, hamiltonian_arrays

    hvec, pi, pj, jv, denom = hamiltonian_arrays(h, spins)
    emin_scaled, states = active_backend().enum_ground(n, hvec, pi, pj, jv)
    energy = Fraction(int(emin_scaled), denom) + h.offset
    state_set = frozenset(tuple(int(v) for v in row) for row in states)
    return GroundStateSet(energy, spins, state_set)


def restrict_ground_states(h: Hamiltonian, visible: Sequence[SpinId],
                           max_spins: int = DEFAULT_MAX_SPINS) -> frozenset:
    """Project the ground states onto `visible` (tuples follow its order).

    A visible assignment is included iff its minimum energy over the hidden
    spins equals the global minimum — the check used to verify cells whose
    truth tables need ancilla spins.
    """
    all_spins = set(h.spins())
    missing = [v for v in visible if v not in all_spins]
    if missing:
        raise EvaluationError(f"visible spins not in Hamiltonian: {missing!r}")
    gs = ground_states(h, max_spins)
    index = {s: k for k, s in enumerate(gs.spins)}
    cols = [index[v] for v in visible]
    return frozenset(tuple(st[c] for c in cols) for st in gs.states)


def assignments(spins: Iterable[SpinId]):
    """Yield every total assignment over `spins` as a dict (test helper)."""
    spins = list(spins)
    for mask in range(1 << len(spins)):
        yield {s: (1 if (mask >> k) & 1 else -1) for k, s in enumerate(spins)}
