"""Tokenizer and recursive-descent parser for the Prolog subset.

Out-of-subset constructs (lists, cut, negation, disjunction, floats,
strings, compound terms) are rejected with a diagnostic naming the
construct rather than a generic syntax error.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..errors import PrologSyntaxError, UnsupportedFeatureError
from .ast import Arith, Atom, Call, Clause, Int, Program, Relation, TypeAssert, Var

_UNSUPPORTED = {
    "[": "lists",
    "]": "lists",
    "!": "cut (!)",
    ";": "disjunction (;)",
    "\\+": "negation as failure (\\+)",
    "\"": "strings",
    "'": "quoted atoms",
    "|": "lists",
    "-": "subtraction",
    "/": "division",
    "is": "is/2 (arithmetic is relational here; use =)",
}


@dataclass
class Token:
    kind: str  # atom var int punct op end
    text: str
    line: int
    col: int


def tokenize(text: str):
    tokens = []
    line, col = 1, 1
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch == "\n":
            line += 1
            col = 1
            i += 1
            continue
        if ch in " \t\r":
            i += 1
            col += 1
            continue
        if ch == "%":
            while i < n and text[i] != "\n":
                i += 1
            continue
        start_line, start_col = line, col

        def bad(feature):
            raise UnsupportedFeatureError(
                f"unsupported feature: {feature}", start_line, start_col)

        if ch == "\\" and text[i:i + 2] == "\\+":
            bad(_UNSUPPORTED["\\+"])
        if ch in _UNSUPPORTED and ch not in "-/":
            bad(_UNSUPPORTED[ch])
        if ch.isdigit():
            j = i
            while j < n and text[j].isdigit():
                j += 1
            if j < n and text[j] == "." and j + 1 < n and text[j + 1].isdigit():
                bad("floating-point numbers")
            tokens.append(Token("int", text[i:j], line, col))
            col += j - i
            i = j
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            word = text[i:j]
            if word == "is":
                bad(_UNSUPPORTED["is"])
            kind = "var" if (ch == "_" or ch.isupper()) else "atom"
            tokens.append(Token(kind, word, line, col))
            col += j - i
            i = j
            continue
        if text[i:i + 2] in (":-", "=<", ">="):
            tokens.append(Token("op", text[i:i + 2], line, col))
            i += 2
            col += 2
            continue
        if ch in "()," or ch == ".":
            tokens.append(Token("punct", ch, line, col))
            i += 1
            col += 1
            continue
        if ch in "=<>+*":
            tokens.append(Token("op", ch, line, col))
            i += 1
            col += 1
            continue
        if ch in "-/":
            bad(_UNSUPPORTED[ch])
        raise PrologSyntaxError(f"unexpected character {ch!r}", line, col)
    tokens.append(Token("end", "", line, col))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = tokenize(text)
        self.pos = 0

    def peek(self, ahead=0) -> Token:
        return self.tokens[min(self.pos + ahead, len(self.tokens) - 1)]

    def next(self) -> Token:
        tok = self.tokens[self.pos]
        if tok.kind != "end":
            self.pos += 1
        return tok

    def fail(self, message, tok=None):
        tok = tok or self.peek()
        raise PrologSyntaxError(message, tok.line, tok.col)

    def expect(self, kind, text=None) -> Token:
        tok = self.peek()
        if tok.kind != kind or (text is not None and tok.text != text):
            want = text or kind
            got = tok.text or "end of input"
            self.fail(f"expected {want!r}, found {got!r}")
        return self.next()

    # -- terms

    def parse_primary(self):
        tok = self.peek()
        if tok.kind == "var":
            self.next()
            return Var(tok.text)
        if tok.kind == "int":
            self.next()
            return Int(int(tok.text))
        if tok.kind == "atom":
            if self.peek(1).text == "(":
                self.fail("unsupported feature: first-class compound terms "
                          f"(atom {tok.text!r} with arguments in term position)")
            self.next()
            return Atom(tok.text)
        if tok.text == "(":
            self.next()
            term = self.parse_arith()
            self.expect("punct", ")")
            return term
        self.fail(f"expected a term, found {tok.text!r}")

    def parse_product(self):
        left = self.parse_primary()
        while self.peek().text == "*":
            self.next()
            right = self.parse_primary()
            left = self._arith("*", left, right)
        return left

    def parse_arith(self):
        left = self.parse_product()
        while self.peek().text == "+":
            self.next()
            right = self.parse_product()
            left = self._arith("+", left, right)
        return left

    def _arith(self, op, left, right):
        for side in (left, right):
            if isinstance(side, Atom):
                self.fail(f"atom {side.name!r} cannot appear in arithmetic")
        return Arith(op, left, right)

    # -- goals

    def parse_goal(self):
        tok = self.peek()
        if tok.kind == "atom" and self.peek(1).text == "(":
            name = self.next().text
            self.expect("punct", "(")
            args = [self.parse_arith()]
            while self.peek().text == ",":
                self.next()
                args.append(self.parse_arith())
            self.expect("punct", ")")
            if name in ("integer", "atom") and len(args) == 1:
                if not isinstance(args[0], Var):
                    self.fail(f"{name}/1 expects a variable")
                return TypeAssert(name, args[0])
            return Call(name, tuple(args))
        if tok.kind == "atom" and self.peek(1).text in (",", "."):
            if tok.text == "fail":
                self.fail("unsupported feature: fail/0")
            self.fail(f"unsupported feature: 0-arity goal {tok.text!r}")
        lhs = self.parse_arith()
        op_tok = self.peek()
        if op_tok.text not in ("=", "<", ">", "=<", ">="):
            self.fail(f"expected a relational operator, found {op_tok.text!r}")
        self.next()
        rhs = self.parse_arith()
        return Relation(op_tok.text, lhs, rhs)

    def parse_goals(self):
        goals = [self.parse_goal()]
        while self.peek().text == ",":
            self.next()
            goals.append(self.parse_goal())
        return tuple(goals)

    # -- clauses

    def parse_clause(self) -> Clause:
        head_tok = self.peek()
        if head_tok.kind != "atom":
            self.fail(f"expected a clause head, found {head_tok.text!r}")
        name = self.next().text
        self.expect("punct", "(")
        args = [self.parse_head_arg()]
        while self.peek().text == ",":
            self.next()
            args.append(self.parse_head_arg())
        self.expect("punct", ")")
        body: tuple = ()
        if self.peek().text == ":-":
            self.next()
            body = self.parse_goals()
        self.expect("punct", ".")
        return Clause(name, tuple(args), body, line=head_tok.line)

    def parse_head_arg(self):
        term = self.parse_arith()
        if isinstance(term, Arith):
            self.fail("unsupported feature: arithmetic expressions in a clause head")
        return term

    def parse_program(self) -> Program:
        program = Program()
        while self.peek().kind != "end":
            program.add_clause(self.parse_clause())
        return program

    def parse_query(self):
        goals = self.parse_goals()
        if self.peek().text == ".":
            self.next()
        if self.peek().kind != "end":
            self.fail(f"unexpected input after query: {self.peek().text!r}")
        return goals


def parse_program(text: str) -> Program:
    """Parse facts and rules; raises PrologSyntaxError with positions."""
    return _Parser(text).parse_program()


def parse_query(text: str):
    """Parse a query: a conjunction of goals, optional trailing period."""
    return _Parser(text).parse_query()
