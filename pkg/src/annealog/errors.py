"""Exception hierarchy for the annealog toolchain."""


class AnnealogError(Exception):
    """Base class for all toolchain errors."""


class EvaluationError(AnnealogError):
    """A spin assignment is missing a spin referenced by the Hamiltonian."""


class GuardError(AnnealogError):
    """A desk-scale guard was exceeded (too many spins for the requested solver)."""


class SynthesisError(AnnealogError):
    """Cell synthesis found no feasible Hamiltonian within the grid/ancilla budget."""

    def __init__(self, message: str, ancillas_tried: int = 0):
        super().__init__(message)
        self.ancillas_tried = ancillas_tried


class NetlistError(AnnealogError):
    """Bad netlist structure: unbound port, unknown cell, alias to a missing net."""


class QmasmSyntaxError(AnnealogError):
    """Malformed line in the QMASM-like text format."""

    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


class CircuitError(AnnealogError):
    """Bad word-level circuit: width mismatch, multiple drivers, cycle."""


class PrologSyntaxError(AnnealogError):
    """Lexical or syntactic error in Prolog source, with position."""

    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{line}:{column}: {message}")
        self.line = line
        self.column = column


class UnsupportedFeatureError(PrologSyntaxError):
    """A construct outside the supported Prolog subset."""


class RecursionCycleError(AnnealogError):
    """The predicate call graph contains a cycle."""

    def __init__(self, message: str, cycle: tuple = ()):
        super().__init__(message)
        self.cycle = cycle


class TypeInferenceError(AnnealogError):
    """Conflicting or missing type evidence for a variable."""


class CompileError(AnnealogError):
    """Query/predicate compilation failure (arity mismatch, unknown predicate...)."""


class EmbeddingError(AnnealogError):
    """No minor embedding found within the retry budget."""

    def __init__(self, message: str, best_embedded: int = 0):
        super().__init__(message)
        self.best_embedded = best_embedded


class HardwareFormatError(AnnealogError):
    """Malformed hardware description file."""
