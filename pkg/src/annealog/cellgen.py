"""Penalty-model cells: Hamiltonians whose ground states realize Boolean
relations, the synthesizer that finds them on a coefficient grid, and the
standard-cell library used by circuit lowering."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import lcm

import numpy as np

from .errors import SynthesisError
from .ising import Hamiltonian, as_coeff, spin_of_bool
from .textfmt import format_coeff, parse_coeff

_ANCILLA_NAMES = ("x", "x2", "x3", "x4", "x5", "x6")


@dataclass(frozen=True)
class TruthTable:
    """A named Boolean relation: the rows a cell's ground states must realize."""

    ports: tuple
    valid_rows: frozenset

    def __post_init__(self):
        if not 1 <= len(self.ports) <= 6:
            raise ValueError(f"1..6 ports required, got {len(self.ports)}")
        if not self.valid_rows:
            raise ValueError("valid_rows must be non-empty")
        for row in self.valid_rows:
            if len(row) != len(self.ports):
                raise ValueError(f"row {row!r} does not match ports {self.ports!r}")

    @classmethod
    def of(cls, ports, rows) -> "TruthTable":
        return cls(tuple(ports), frozenset(tuple(bool(b) for b in r) for r in rows))

    @classmethod
    def from_function(cls, inputs, output, fn) -> "TruthTable":
        """Rows (in..., out) of a total Boolean function over `inputs`."""
        rows = []
        for bits in itertools.product((False, True), repeat=len(inputs)):
            rows.append(bits + (bool(fn(*bits)),))
        return cls.of(tuple(inputs) + (output,), rows)

    def spin_rows(self) -> frozenset:
        return frozenset(tuple(spin_of_bool(b) for b in row) for row in self.valid_rows)


@dataclass(frozen=True)
class Cell:
    """A verified penalty Hamiltonian over ports plus internal ancillas.

    `gap` is the verified margin: every visible row outside the truth table
    sits at least `gap` above the ground energy, after minimizing over the
    ancillas.  `output` names the driven port for netlist acyclicity checks.
    """

    name: str
    ports: tuple
    ancillas: tuple
    hamiltonian: Hamiltonian
    gap: Fraction
    truth_table: TruthTable
    output: str | None = None


@dataclass(frozen=True)
class SynthesisConfig:
    coefficient_grid: tuple = tuple(Fraction(k, 2) for k in range(-2, 3))
    max_ancillas: int = 1
    min_gap: Fraction = Fraction(1)

    def __post_init__(self):
        grid = tuple(sorted(as_coeff(g) for g in self.coefficient_grid))
        object.__setattr__(self, "coefficient_grid", grid)
        object.__setattr__(self, "min_gap", as_coeff(self.min_gap))
        if 0 not in grid:
            raise ValueError("coefficient grid must contain 0")
        if set(grid) != {-g for g in grid}:
            raise ValueError("coefficient grid must be symmetric about 0")
        if self.min_gap <= 0:
            raise ValueError("min_gap must be positive")


def _row_energies(h: Hamiltonian, spins):
    """Energies of all 2^n assignments, scaled ints; row r has spin i = bit i.

    Spins without terms get zero columns, so unreferenced ports are fine.
    """
    from .kernels import hamiltonian_arrays

    hvec, pi, pj, jv, denom = hamiltonian_arrays(h, tuple(spins))
    n = len(spins)
    idx = np.arange(1 << n, dtype=np.uint64)
    s = (2 * ((idx[:, None] >> np.arange(n, dtype=np.uint64)) & np.uint64(1)).astype(np.int64) - 1)
    e = s @ hvec
    if len(pi):
        e += (s[:, pi] * s[:, pj]) @ jv
    return e, denom


def cell_violations(cell: Cell) -> list:
    """Empty when the cell invariants hold; otherwise human-readable reasons."""
    spins = cell.ports + cell.ancillas
    if len(spins) > 24:
        raise ValueError("cell too large to verify exhaustively")
    extra = cell.hamiltonian.spins() - set(spins)
    if extra:
        return [f"hamiltonian references unknown spins {sorted(map(str, extra))!r}"]
    energies, denom = _row_energies(cell.hamiltonian, spins)
    p, m = len(cell.ports), len(cell.ancillas)
    # row index bit k = spin k; ancillas are the high bits
    table = energies.reshape((1 << m, 1 << p)) if m else energies.reshape((1, 1 << p))
    min_anc = table.min(axis=0)
    valid = np.zeros(1 << p, dtype=bool)
    for row in cell.truth_table.valid_rows:
        ix = 0
        for k, b in enumerate(row):
            if b:
                ix |= 1 << k
        valid[ix] = True
    e0 = int(min_anc[valid].min())
    problems = []
    bad_valid = np.nonzero(valid & (min_anc != e0))[0]
    for ix in bad_valid:
        problems.append(f"valid row {_row_str(cell, ix)} not at ground energy")
    gap_scaled = cell.gap * denom
    if (~valid).any():
        for ix in np.nonzero(~valid)[0]:
            if Fraction(int(min_anc[ix]) - e0) < gap_scaled:
                problems.append(
                    f"invalid row {_row_str(cell, ix)} within gap of ground")
    return problems


def _row_str(cell: Cell, ix: int) -> str:
    bits = ["t" if (ix >> k) & 1 else "f" for k in range(len(cell.ports))]
    return "(" + ",".join(f"{p}={b}" for p, b in zip(cell.ports, bits)) + ")"


def verify_cell(cell: Cell) -> bool:
    """Exhaustively check both cell invariants (ground set and gap)."""
    return not cell_violations(cell)


def synthesize_cell(tt: TruthTable, cfg: SynthesisConfig | None = None,
                    name: str = "cell") -> Cell:
    """Search the coefficient grid for a penalty Hamiltonian realizing `tt`.

    Tries 0 ancillas first, then 1, up to cfg.max_ancillas.  Among feasible
    candidates prefers fewer ancillas, then larger gap, then smaller sum of
    |coefficients|, then the lexicographically least coefficient vector
    (h coefficients in port-then-ancilla order, then J coefficients in pair
    index order), so results are deterministic.
    """
    from .kernels import active_backend

    cfg = cfg or SynthesisConfig()
    p = len(tt.ports)
    if p + cfg.max_ancillas > 8:
        raise ValueError("ports + max_ancillas must stay within 8 spins")

    scale = lcm(*(g.denominator for g in cfg.coefficient_grid), cfg.min_gap.denominator)
    grid_int = np.array(sorted(int(g * scale) for g in cfg.coefficient_grid),
                        dtype=np.int64)
    min_gap_int = int(cfg.min_gap * scale)

    for m in range(cfg.max_ancillas + 1):
        n = p + m
        spins = tt.ports + _ANCILLA_NAMES[:m]
        pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
        d = n + len(pairs)
        n_vis, n_hid = 1 << p, 1 << m
        # rows ordered v*n_hid + a: visible bits low, ancilla assignments
        # contiguous per visible row
        phit = np.empty((d, n_vis * n_hid), dtype=np.int64)
        for v in range(n_vis):
            for a in range(n_hid):
                r = v * n_hid + a
                sv = [1 if (v >> k) & 1 else -1 for k in range(p)]
                sv += [1 if (a >> k) & 1 else -1 for k in range(m)]
                for k in range(n):
                    phit[k, r] = sv[k]
                for q, (i, j) in enumerate(pairs):
                    phit[n + q, r] = sv[i] * sv[j]
        valid_mask = np.zeros(n_vis, dtype=bool)
        for row in tt.valid_rows:
            ix = 0
            for k, b in enumerate(row):
                if b:
                    ix |= 1 << k
            valid_mask[ix] = True

        found, gap_int, _, coeffs, _ = active_backend().synth_search(
            phit, grid_int, valid_mask, n_vis, n_hid, min_gap_int)
        if not found:
            continue
        linear = {spins[k]: Fraction(int(coeffs[k]), scale) for k in range(n)}
        quadratic = {(spins[i], spins[j]): Fraction(int(coeffs[n + q]), scale)
                     for q, (i, j) in enumerate(pairs)}
        cell = Cell(
            name=name,
            ports=tt.ports,
            ancillas=tuple(_ANCILLA_NAMES[:m]),
            hamiltonian=Hamiltonian(linear, quadratic),
            gap=Fraction(gap_int, scale),
            truth_table=tt,
        )
        problems = cell_violations(cell)
        if problems:  # search and verifier disagree: internal bug
            raise AssertionError(f"synthesized cell fails verification: {problems}")
        return cell

    raise SynthesisError(
        f"no feasible Hamiltonian for {len(tt.ports)}-port relation within "
        f"{cfg.max_ancillas} ancilla(s) on the given grid",
        ancillas_tried=cfg.max_ancillas)


def negate_output(cell: Cell, name: str, new_tt: TruthTable) -> Cell:
    """Complement the cell's output: negate every term containing that spin."""
    out = cell.output or cell.ports[-1]
    linear = dict(cell.hamiltonian.linear)
    if out in linear:
        linear[out] = -linear[out]
    quadratic = {}
    for (i, j), v in cell.hamiltonian.quadratic.items():
        quadratic[(i, j)] = -v if out in (i, j) else v
    return Cell(name, cell.ports, cell.ancillas,
                Hamiltonian(linear, quadratic, cell.hamiltonian.offset),
                cell.gap, new_tt, output=out)


def _lib_cell(name, ports, ancillas, linear, quadratic, gap, tt, output):
    return Cell(name, tuple(ports), tuple(ancillas),
                Hamiltonian(linear, quadratic), Fraction(gap), tt, output=output)


@lru_cache(maxsize=1)
def standard_library() -> dict:
    """The precomputed gate cells used by lowering, verified on first load.

    AND and OR carry the classic conjunction/disjunction coefficients; NAND
    and NOR are their output-negated images; XOR/XNOR/OAI3 were produced by
    `synthesize_cell` on the default grid and frozen here so importing the
    library stays fast.
    """
    h = Fraction(1, 2)
    tt_and = TruthTable.from_function(("A", "B"), "Y", lambda a, b: a and b)
    tt_or = TruthTable.from_function(("A", "B"), "Y", lambda a, b: a or b)
    tt_nand = TruthTable.from_function(("A", "B"), "Y", lambda a, b: not (a and b))
    tt_nor = TruthTable.from_function(("A", "B"), "Y", lambda a, b: not (a or b))
    tt_xor = TruthTable.from_function(("A", "B"), "Y", lambda a, b: a != b)
    tt_xnor = TruthTable.from_function(("A", "B"), "Y", lambda a, b: a == b)
    tt_not = TruthTable.from_function(("A",), "Y", lambda a: not a)
    tt_buf = TruthTable.from_function(("A",), "B", lambda a: a)
    tt_oai3 = TruthTable.from_function(("A", "B", "C"), "Y",
                                       lambda a, b, c: not ((a or b) and c))

    and_cell = _lib_cell(
        "AND", "ABY", (),
        {"A": -h, "B": -h, "Y": 1},
        {("A", "B"): h, ("A", "Y"): -1, ("B", "Y"): -1},
        2, tt_and, "Y")
    or_cell = _lib_cell(
        "OR", "ABY", (),
        {"A": h, "B": h, "Y": -1},
        {("A", "B"): h, ("A", "Y"): -1, ("B", "Y"): -1},
        2, tt_or, "Y")
    cells = {
        "BUF": _lib_cell("BUF", "AB", (), {}, {("A", "B"): -1}, 2, tt_buf, "B"),
        "NOT": _lib_cell("NOT", ("A", "Y"), (), {}, {("A", "Y"): 1}, 2, tt_not, "Y"),
        "AND": and_cell,
        "OR": or_cell,
        "NAND": negate_output(and_cell, "NAND", tt_nand),
        "NOR": negate_output(or_cell, "NOR", tt_nor),
        "XOR": _lib_cell(
            "XOR", "ABY", ("x",),
            {"A": -h, "B": -h, "Y": h, "x": -1},
            {("A", "B"): h, ("A", "Y"): -h, ("A", "x"): 1,
             ("B", "Y"): -h, ("B", "x"): 1, ("Y", "x"): -1},
            1, tt_xor, "Y"),
        "OAI3": _lib_cell(
            "OAI3", "ABCY", ("x",),
            {"A": -h, "C": -h, "x": -1},
            {("A", "C"): h, ("A", "x"): 1, ("B", "C"): h, ("B", "Y"): 1,
             ("B", "x"): -h, ("C", "Y"): 1, ("C", "x"): h, ("Y", "x"): -1},
            2, tt_oai3, "Y"),
    }
    cells["XNOR"] = negate_output(cells["XOR"], "XNOR", tt_xnor)
    for name, cell in cells.items():
        problems = cell_violations(cell)
        if problems:
            raise RuntimeError(f"standard cell {name} failed verification: {problems}")
    return cells


def library_to_text(lib: dict) -> str:
    """Export cells in the macro-body line grammar (ports/ancillas/gap as
    comments, h lines, blank line, J lines)."""
    out = []
    for name in sorted(lib):
        cell = lib[name]
        out.append(f"!begin_macro {name}")
        out.append("# ports: " + " ".join(cell.ports))
        if cell.ancillas:
            out.append("# ancillas: " + " ".join(cell.ancillas))
        if cell.output:
            out.append(f"# output: {cell.output}")
        out.append(f"# gap: {format_coeff(cell.gap)}")
        out.extend(_macro_body_lines(cell))
        out.append(f"!end_macro {name}")
        out.append("")
    return "\n".join(out)


def _macro_body_lines(cell: Cell) -> list:
    spins = cell.ports + cell.ancillas
    order = {s: k for k, s in enumerate(spins)}
    lines = []
    ham = cell.hamiltonian
    for s in spins:
        if s in ham.linear:
            lines.append(f"{s} {format_coeff(ham.linear[s])}")
    pairs = sorted(ham.quadratic, key=lambda p: (order[p[0]], order[p[1]])
                   if order[p[0]] < order[p[1]] else (order[p[1]], order[p[0]]))
    if lines and pairs:
        lines.append("")
    for i, j in pairs:
        a, b = (i, j) if order[i] < order[j] else (j, i)
        lines.append(f"{a} {b} {format_coeff(ham.quadratic[(i, j)])}")
    return lines


def cell_macro_text(cell: Cell, macro_name: str | None = None) -> str:
    """One cell as a stand-alone macro (Fig-4-shaped body)."""
    name = macro_name or cell.name
    return "\n".join([f"!begin_macro {name}", *_macro_body_lines(cell),
                      f"!end_macro {name}"])


def library_from_text(text: str) -> dict:
    """Parse the `library_to_text` format back into verified cells."""
    lib = {}
    name = None
    ports: tuple = ()
    ancillas: tuple = ()
    output = None
    gap = Fraction(1)
    linear: dict = {}
    quadratic: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("# ports:"):
            ports = tuple(line.split(":", 1)[1].split())
            continue
        if line.startswith("# ancillas:"):
            ancillas = tuple(line.split(":", 1)[1].split())
            continue
        if line.startswith("# output:"):
            output = line.split(":", 1)[1].strip()
            continue
        if line.startswith("# gap:"):
            gap = parse_coeff(line.split(":", 1)[1].strip())
            continue
        if line.startswith("#"):
            continue
        toks = line.split()
        if toks[0] == "!begin_macro":
            name = toks[1]
            ports, ancillas, output = (), (), None
            gap = Fraction(1)
            linear, quadratic = {}, {}
            continue
        if toks[0] == "!end_macro":
            spins = ports + ancillas
            undeclared = (set(linear) | {s for p in quadratic for s in p}) - set(spins)
            if undeclared:
                raise ValueError(
                    f"line {lineno}: spins {sorted(undeclared)} not declared as "
                    "ports or ancillas")
            tt = _recover_truth_table(name, ports, ancillas, linear, quadratic)
            cell = Cell(name, ports, ancillas, Hamiltonian(linear, quadratic),
                        gap, tt, output=output)
            problems = cell_violations(cell)
            if problems:
                raise ValueError(f"cell {name} failed verification: {problems}")
            lib[name] = cell
            name = None
            continue
        if name is None:
            raise ValueError(f"line {lineno}: coefficient outside a macro")
        if len(toks) == 2:
            linear[toks[0]] = parse_coeff(toks[1])
        elif len(toks) == 3:
            quadratic[(toks[0], toks[1])] = parse_coeff(toks[2])
        else:
            raise ValueError(f"line {lineno}: expected 'SPIN value' or 'SPIN SPIN value'")
    return lib


def _recover_truth_table(name, ports, ancillas, linear, quadratic) -> TruthTable:
    """The imported cell's relation is whatever its visible ground set is."""
    h = Hamiltonian(linear, quadratic)
    energies, _ = _row_energies(h, ports + ancillas)
    p, m = len(ports), len(ancillas)
    table = energies.reshape((1 << m, 1 << p)) if m else energies.reshape((1, 1 << p))
    min_anc = table.min(axis=0)
    e0 = int(min_anc.min())
    visible = frozenset(
        tuple(bool((ix >> k) & 1) for k in range(p))
        for ix in np.nonzero(min_anc == e0)[0])
    return TruthTable(tuple(ports), visible)
