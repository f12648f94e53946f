"""Text format for parameterized open-system models.

A model file is line-oriented with four sections::

    # estimate the transition frequency of a spin-flip qubit
    [system]
    dim = 2
    parameter = omega, default = 1.0

    [hamiltonian]
    H = 0.5*omega * Z

    [dissipator]
    rate = 0.5, op = X

    [sweep]            # optional defaults for the CLI
    t0 = 0.0
    t1 = 10.0
    nt = 201
    values = 0.8, 1.0

Coefficients are arithmetic expressions over numbers and the declared
parameter with the functions sin, cos, sqrt, exp.  Operators are Pauli
strings (tensor products of I, X, Y, Z, leftmost factor most significant,
with optional sign and i prefixes such as ``-iXY``) or explicit complex
matrices like ``[[0, -1i], [1i, 0]]``.  The compiler turns the AST into an
OpenSystemModel with symbolic parameter derivatives.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .model import JumpChannel, ModelError, OpenSystemModel

_PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}
_PAULI_WORD = re.compile(r"^i?[IXYZ]+$")
_FUNCTIONS = ("sin", "cos", "sqrt", "exp")

_NUMBER = re.compile(r"\d+(?:\.\d*)?(?:[eE][+-]?\d+)?")
_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")


class ParseError(ValueError):
    """Syntax or semantic error with position and expectation info."""

    def __init__(self, message: str, line: int, col: int, expected: tuple[str, ...] = ()):
        self.line = line
        self.col = col
        self.expected = expected
        loc = f"line {line}, col {col}: {message}"
        if expected:
            loc += " (expected: " + ", ".join(expected) + ")"
        super().__init__(loc)


# --- expression AST ---------------------------------------------------------

@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Param:
    name: str


@dataclass(frozen=True)
class Call:
    func: str
    arg: "Expr"


@dataclass(frozen=True)
class Bin:
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Neg:
    operand: "Expr"


Expr = Union[Num, Param, Call, Bin, Neg]


@dataclass(frozen=True)
class PauliString:
    phase: complex
    word: str


@dataclass(frozen=True)
class MatrixLiteral:
    rows: tuple[tuple[complex, ...], ...]


OpLiteral = Union[PauliString, MatrixLiteral]


@dataclass(frozen=True)
class HTerm:
    coef: Expr
    op: OpLiteral


@dataclass(frozen=True)
class DissipatorDecl:
    rate: Expr
    op: OpLiteral


@dataclass(frozen=True)
class SystemDecl:
    dim: int
    parameter: str
    default: float


@dataclass(frozen=True)
class SweepDecl:
    t0: float = 0.0
    t1: float = 10.0
    nt: int = 101
    values: tuple[float, ...] = ()
    n: int = 1


@dataclass(frozen=True)
class ModelSpec:
    system: SystemDecl
    hamiltonian: tuple[HTerm, ...]
    dissipators: tuple[DissipatorDecl, ...]
    sweep: Optional[SweepDecl] = None


# --- tokenizer --------------------------------------------------------------

@dataclass(frozen=True)
class _Token:
    kind: str  # NUMBER | IDENT | SYM | EOL
    text: str
    line: int
    col: int


def _tokenize_line(text: str, lineno: int) -> list[_Token]:
    out = []
    i = 0
    while i < len(text):
        ch = text[i]
        if ch in " \t":
            i += 1
            continue
        if ch == "#":
            break
        m = _NUMBER.match(text, i)
        if m:
            out.append(_Token("NUMBER", m.group(), lineno, i + 1))
            i = m.end()
            continue
        m = _IDENT.match(text, i)
        if m:
            out.append(_Token("IDENT", m.group(), lineno, i + 1))
            i = m.end()
            continue
        if ch in "=,*+-/()[]:":
            out.append(_Token("SYM", ch, lineno, i + 1))
            i += 1
            continue
        raise ParseError(f"unexpected character {ch!r}", lineno, i + 1)
    out.append(_Token("EOL", "", lineno, len(text) + 1))
    return out


class _LineParser:
    """Recursive-descent parser over one tokenized line."""

    def __init__(self, tokens: list[_Token], parameter: Optional[str]):
        self.toks = tokens
        self.pos = 0
        self.parameter = parameter

    def peek(self, ahead: int = 0) -> _Token:
        return self.toks[min(self.pos + ahead, len(self.toks) - 1)]

    def next(self) -> _Token:
        tok = self.toks[self.pos]
        if tok.kind != "EOL":
            self.pos += 1
        return tok

    def expect(self, kind: str, text: Optional[str] = None, what: Optional[str] = None) -> _Token:
        tok = self.peek()
        if tok.kind != kind or (text is not None and tok.text != text):
            expected = (what or text or kind,)
            found = tok.text or "end of line"
            raise ParseError(f"unexpected {found!r}", tok.line, tok.col, expected)
        return self.next()

    def at_eol(self) -> bool:
        return self.peek().kind == "EOL"

    def expect_eol(self):
        tok = self.peek()
        if tok.kind != "EOL":
            raise ParseError(f"trailing input {tok.text!r}", tok.line, tok.col,
                             ("end of line",))

    # -- expressions --

    def _is_pauli_word(self, tok: _Token) -> bool:
        return (tok.kind == "IDENT" and bool(_PAULI_WORD.match(tok.text))
                and tok.text != self.parameter)

    def _starts_operator(self, tok: _Token) -> bool:
        return self._is_pauli_word(tok) or (tok.kind == "SYM" and tok.text == "[")

    def _operator_ahead(self) -> bool:
        """True when '*' is followed by an operator literal (maybe signed)."""
        ahead = 1
        while self.peek(ahead).kind == "SYM" and self.peek(ahead).text in "+-":
            ahead += 1
        return self._starts_operator(self.peek(ahead))

    def parse_expr(self) -> Expr:
        node = self.parse_term()
        while self.peek().kind == "SYM" and self.peek().text in "+-":
            op = self.next().text
            node = Bin(op, node, self.parse_term())
        return node

    def parse_term(self) -> Expr:
        node = self.parse_factor()
        while self.peek().kind == "SYM" and self.peek().text in "*/":
            # a '*' directly in front of an operator literal belongs to the
            # enclosing Hamiltonian term, not to this coefficient
            if self.peek().text == "*" and self._operator_ahead():
                break
            op = self.next().text
            node = Bin(op, node, self.parse_factor())
        return node

    def parse_factor(self) -> Expr:
        tok = self.peek()
        if tok.kind == "SYM" and tok.text in "+-":
            self.next()
            operand = self.parse_factor()
            return Neg(operand) if tok.text == "-" else operand
        if tok.kind == "NUMBER":
            self.next()
            return Num(float(tok.text))
        if tok.kind == "IDENT":
            if tok.text in _FUNCTIONS:
                self.next()
                self.expect("SYM", "(")
                arg = self.parse_expr()
                self.expect("SYM", ")")
                return Call(tok.text, arg)
            if tok.text == self.parameter:
                self.next()
                return Param(tok.text)
            if self._is_pauli_word(tok):
                raise ParseError(f"operator literal {tok.text!r} cannot appear "
                                 "inside a coefficient", tok.line, tok.col,
                                 ("number", "parameter", "function"))
            known = ("function (sin, cos, sqrt, exp)",
                     f"the declared parameter {self.parameter!r}")
            raise ParseError(f"unknown identifier {tok.text!r}", tok.line, tok.col, known)
        if tok.kind == "SYM" and tok.text == "(":
            self.next()
            node = self.parse_expr()
            self.expect("SYM", ")")
            return node
        raise ParseError(f"unexpected {tok.text or 'end of line'!r}",
                         tok.line, tok.col, ("number", "identifier", "("))

    # -- operator literals --

    def parse_operator(self) -> OpLiteral:
        sign = 1.0
        while self.peek().kind == "SYM" and self.peek().text in "+-":
            if self.next().text == "-":
                sign = -sign
        tok = self.peek()
        if self._is_pauli_word(tok):
            self.next()
            word = tok.text
            phase = complex(sign)
            if word.startswith("i"):
                phase *= 1j
                word = word[1:]
            return PauliString(phase=phase, word=word)
        if tok.kind == "SYM" and tok.text == "[":
            mat = self.parse_matrix()
            if sign < 0:
                mat = MatrixLiteral(rows=tuple(tuple(-z for z in row) for row in mat.rows))
            return mat
        raise ParseError(f"unexpected {tok.text or 'end of line'!r}", tok.line, tok.col,
                         ("Pauli string", "matrix literal"))

    def parse_matrix(self) -> MatrixLiteral:
        self.expect("SYM", "[")
        rows = []
        while True:
            rows.append(self.parse_matrix_row())
            tok = self.peek()
            if tok.kind == "SYM" and tok.text == ",":
                self.next()
                continue
            break
        self.expect("SYM", "]")
        width = len(rows[0])
        if any(len(r) != width for r in rows):
            tok = self.peek()
            raise ParseError("matrix rows have unequal lengths", tok.line, tok.col)
        return MatrixLiteral(rows=tuple(tuple(r) for r in rows))

    def parse_matrix_row(self) -> list[complex]:
        self.expect("SYM", "[")
        entries = [self.parse_complex()]
        while self.peek().kind == "SYM" and self.peek().text == ",":
            self.next()
            entries.append(self.parse_complex())
        self.expect("SYM", "]")
        return entries

    def parse_complex(self) -> complex:
        sign = 1.0
        while self.peek().kind == "SYM" and self.peek().text in "+-":
            if self.next().text == "-":
                sign = -sign
        first, first_imag = self._complex_part()
        value = sign * (1j * first if first_imag else first)
        tok = self.peek()
        if tok.kind == "SYM" and tok.text in "+-" and not first_imag:
            s2 = -1.0 if self.next().text == "-" else 1.0
            second, second_imag = self._complex_part()
            if not second_imag:
                raise ParseError("second part of a complex entry must be imaginary",
                                 tok.line, tok.col, ("<number>i",))
            value = value + sign * s2 * 1j * second
        return value

    def _complex_part(self) -> tuple[float, bool]:
        tok = self.peek()
        if tok.kind == "NUMBER":
            self.next()
            val = float(tok.text)
            nxt = self.peek()
            if nxt.kind == "IDENT" and nxt.text == "i":
                self.next()
                return val, True
            return val, False
        if tok.kind == "IDENT" and tok.text == "i":
            self.next()
            return 1.0, True
        raise ParseError(f"unexpected {tok.text or 'end of line'!r}", tok.line, tok.col,
                         ("number", "i"))

    # -- Hamiltonian / dissipator lines --

    def parse_hamiltonian_sum(self) -> list[HTerm]:
        terms = [self.parse_hterm(first=True)]
        while self.peek().kind == "SYM" and self.peek().text in "+-":
            sign = self.next().text
            term = self.parse_hterm(first=False)
            if sign == "-":
                term = HTerm(coef=Neg(term.coef), op=term.op)
            terms.append(term)
        self.expect_eol()
        return terms

    def parse_hterm(self, first: bool) -> HTerm:
        negate = False
        while first and self.peek().kind == "SYM" and self.peek().text in "+-":
            if self.next().text == "-":
                negate = not negate
        if self._starts_operator(self.peek()):
            coef: Expr = Num(1.0)
            op = self.parse_operator()
        else:
            coef = self.parse_expr()
            self.expect("SYM", "*", what="'*' before the operator literal")
            op = self.parse_operator()
        if negate:
            coef = Neg(coef)
        return HTerm(coef=coef, op=op)


# --- file-level parser ------------------------------------------------------

def parse_model(text: str) -> ModelSpec:
    """Parse model source into an AST, or raise ParseError with position."""
    system: Optional[SystemDecl] = None
    sys_fields: dict = {}
    hterms: list[HTerm] = []
    dissipators: list[DissipatorDecl] = []
    sweep_fields: dict = {}
    seen_sweep = False
    section = None
    section_positions: dict[str, int] = {}

    for lineno, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.strip()
        if not stripped or stripped.startswith("#"):
            continue
        header = re.fullmatch(r"\[(\w+)\]", stripped)
        if header:
            section = header.group(1)
            if section not in ("system", "hamiltonian", "dissipator", "sweep"):
                raise ParseError(f"unknown section [{section}]", lineno,
                                 raw.index("[") + 1,
                                 ("[system]", "[hamiltonian]", "[dissipator]", "[sweep]"))
            if section in section_positions:
                raise ParseError(f"duplicate section [{section}]", lineno, 1)
            section_positions[section] = lineno
            if section == "sweep":
                seen_sweep = True
            continue
        if section is None:
            raise ParseError("content before the first section header", lineno, 1,
                             ("[system]",))
        tokens = _tokenize_line(raw, lineno)
        param = sys_fields.get("parameter")
        lp = _LineParser(tokens, param)
        if section == "system":
            _parse_system_line(lp, sys_fields)
        elif section == "hamiltonian":
            if "parameter" not in sys_fields:
                raise ParseError("the [system] section must declare the parameter "
                                 "before [hamiltonian]", lineno, 1)
            tok = lp.peek()
            if tok.kind == "IDENT" and tok.text == "H" and lp.peek(1).text == "=":
                lp.next()
                lp.next()
            hterms.extend(lp.parse_hamiltonian_sum())
        elif section == "dissipator":
            if "parameter" not in sys_fields:
                raise ParseError("the [system] section must declare the parameter "
                                 "before [dissipator]", lineno, 1)
            dissipators.append(_parse_dissipator_line(lp))
        elif section == "sweep":
            _parse_sweep_line(lp, sweep_fields)

    if "dim" not in sys_fields or "parameter" not in sys_fields:
        raise ParseError("the [system] section must set dim and parameter",
                         section_positions.get("system", 1), 1)
    system = SystemDecl(dim=sys_fields["dim"], parameter=sys_fields["parameter"],
                        default=sys_fields.get("default", 1.0))
    if not hterms:
        raise ParseError("no Hamiltonian terms declared",
                         section_positions.get("hamiltonian", 1), 1)
    sweep = SweepDecl(**sweep_fields) if seen_sweep else None
    spec = ModelSpec(system=system, hamiltonian=tuple(hterms),
                     dissipators=tuple(dissipators), sweep=sweep)
    _check_dimensions(spec, section_positions)
    return spec


def _parse_system_line(lp: _LineParser, fields: dict) -> None:
    key = lp.expect("IDENT", what="dim or parameter")
    lp.expect("SYM", "=")
    if key.text == "dim":
        tok = lp.expect("NUMBER", what="integer dimension")
        dim = float(tok.text)
        if dim != int(dim) or int(dim) < 2:
            raise ParseError("dim must be an integer >= 2", tok.line, tok.col)
        fields["dim"] = int(dim)
    elif key.text == "parameter":
        tok = lp.expect("IDENT", what="parameter name")
        if _PAULI_WORD.match(tok.text) or tok.text in _FUNCTIONS or tok.text == "i":
            raise ParseError(f"parameter name {tok.text!r} collides with an operator "
                             "or function name", tok.line, tok.col)
        fields["parameter"] = tok.text
        if not lp.at_eol():
            lp.expect("SYM", ",")
            kw = lp.expect("IDENT", what="default")
            if kw.text != "default":
                raise ParseError(f"unknown system option {kw.text!r}", kw.line, kw.col,
                                 ("default",))
            lp.expect("SYM", "=")
            fields["default"] = _parse_signed_number(lp)
    else:
        raise ParseError(f"unknown system key {key.text!r}", key.line, key.col,
                         ("dim", "parameter"))
    lp.expect_eol()


def _parse_signed_number(lp: _LineParser) -> float:
    sign = 1.0
    while lp.peek().kind == "SYM" and lp.peek().text in "+-":
        if lp.next().text == "-":
            sign = -sign
    tok = lp.expect("NUMBER", what="number")
    return sign * float(tok.text)


def _parse_dissipator_line(lp: _LineParser) -> DissipatorDecl:
    tok = lp.peek()
    if tok.kind == "IDENT" and tok.text == "dissipator" and lp.peek(1).text == ":":
        lp.next()
        lp.next()
    key = lp.expect("IDENT", what="rate")
    if key.text != "rate":
        raise ParseError(f"dissipator lines start with rate, got {key.text!r}",
                         key.line, key.col, ("rate",))
    lp.expect("SYM", "=")
    rate = lp.parse_expr()
    lp.expect("SYM", ",")
    key = lp.expect("IDENT", what="op")
    if key.text != "op":
        raise ParseError(f"expected op, got {key.text!r}", key.line, key.col, ("op",))
    lp.expect("SYM", "=")
    op = lp.parse_operator()
    lp.expect_eol()
    return DissipatorDecl(rate=rate, op=op)


def _parse_sweep_line(lp: _LineParser, fields: dict) -> None:
    key = lp.expect("IDENT", what="t0, t1, nt, values or n")
    lp.expect("SYM", "=")
    if key.text in ("t0", "t1"):
        fields[key.text] = _parse_signed_number(lp)
    elif key.text in ("nt", "n"):
        tok = lp.expect("NUMBER", what="integer")
        fields[key.text] = int(float(tok.text))
    elif key.text == "values":
        vals = [_parse_signed_number(lp)]
        while lp.peek().kind == "SYM" and lp.peek().text == ",":
            lp.next()
            vals.append(_parse_signed_number(lp))
        fields["values"] = tuple(vals)
    else:
        raise ParseError(f"unknown sweep key {key.text!r}", key.line, key.col,
                         ("t0", "t1", "nt", "values", "n"))
    lp.expect_eol()


def _op_dim(op: OpLiteral) -> int:
    if isinstance(op, PauliString):
        return 2 ** len(op.word)
    return len(op.rows)


def _check_dimensions(spec: ModelSpec, positions: dict) -> None:
    m = spec.system.dim
    for term in spec.hamiltonian:
        if _op_dim(term.op) != m:
            raise ParseError(
                f"operator dimension {_op_dim(term.op)} does not match dim {m}",
                positions.get("hamiltonian", 1), 1)
    for d in spec.dissipators:
        if _op_dim(d.op) != m:
            raise ParseError(
                f"jump operator dimension {_op_dim(d.op)} does not match dim {m}",
                positions.get("dissipator", 1), 1)
    for row in (r for t in spec.hamiltonian if isinstance(t.op, MatrixLiteral)
                for r in t.op.rows):
        if len(row) != m:
            raise ParseError("matrix literal is not square",
                             positions.get("hamiltonian", 1), 1)


# --- evaluation, differentiation, printing ----------------------------------

def eval_expr(expr: Expr, theta: float) -> float:
    if isinstance(expr, Num):
        return expr.value
    if isinstance(expr, Param):
        return float(theta)
    if isinstance(expr, Neg):
        return -eval_expr(expr.operand, theta)
    if isinstance(expr, Call):
        arg = eval_expr(expr.arg, theta)
        return {"sin": math.sin, "cos": math.cos,
                "sqrt": math.sqrt, "exp": math.exp}[expr.func](arg)
    if isinstance(expr, Bin):
        a, b = eval_expr(expr.left, theta), eval_expr(expr.right, theta)
        if expr.op == "+":
            return a + b
        if expr.op == "-":
            return a - b
        if expr.op == "*":
            return a * b
        return a / b
    raise TypeError(f"not an expression node: {expr!r}")


def _mk_mul(a: Expr, b: Expr) -> Expr:
    if isinstance(a, Num):
        if a.value == 0.0:
            return Num(0.0)
        if a.value == 1.0:
            return b
    if isinstance(b, Num):
        if b.value == 0.0:
            return Num(0.0)
        if b.value == 1.0:
            return a
    if isinstance(a, Num) and isinstance(b, Num):
        return Num(a.value * b.value)
    return Bin("*", a, b)


def _mk_add(a: Expr, b: Expr) -> Expr:
    if isinstance(a, Num) and a.value == 0.0:
        return b
    if isinstance(b, Num) and b.value == 0.0:
        return a
    if isinstance(a, Num) and isinstance(b, Num):
        return Num(a.value + b.value)
    return Bin("+", a, b)


def diff_expr(expr: Expr) -> Expr:
    """Symbolic derivative with respect to the (single) model parameter."""
    if isinstance(expr, Num):
        return Num(0.0)
    if isinstance(expr, Param):
        return Num(1.0)
    if isinstance(expr, Neg):
        inner = diff_expr(expr.operand)
        return Num(0.0) if isinstance(inner, Num) and inner.value == 0.0 else Neg(inner)
    if isinstance(expr, Call):
        du = diff_expr(expr.arg)
        u = expr.arg
        if expr.func == "sin":
            outer: Expr = Call("cos", u)
        elif expr.func == "cos":
            outer = Neg(Call("sin", u))
        elif expr.func == "exp":
            outer = Call("exp", u)
        elif expr.func == "sqrt":
            outer = Bin("/", Num(0.5), Call("sqrt", u))
        else:
            raise ValueError(f"unknown function {expr.func}")
        return _mk_mul(outer, du)
    if isinstance(expr, Bin):
        da, db = diff_expr(expr.left), diff_expr(expr.right)
        if expr.op == "+":
            return _mk_add(da, db)
        if expr.op == "-":
            return _mk_add(da, _mk_mul(Num(-1.0), db))
        if expr.op == "*":
            return _mk_add(_mk_mul(da, expr.right), _mk_mul(expr.left, db))
        # quotient rule: (a/b)' = a'/b - a b'/b^2
        term1 = Bin("/", da, expr.right)
        term2 = Bin("/", _mk_mul(expr.left, db), _mk_mul(expr.right, expr.right))
        return _mk_add(term1, _mk_mul(Num(-1.0), term2))
    raise TypeError(f"not an expression node: {expr!r}")


def _fmt_num(x: float) -> str:
    if x == int(x) and abs(x) < 1e15:
        return str(int(x))
    return repr(x)


def _fmt_complex(z: complex) -> str:
    re_, im_ = z.real, z.imag
    if im_ == 0.0:
        return _fmt_num(re_)
    if re_ == 0.0:
        return f"{_fmt_num(im_)}i"
    op = "+" if im_ >= 0 else "-"
    return f"{_fmt_num(re_)} {op} {_fmt_num(abs(im_))}i"


def print_expr(expr: Expr, parent_prec: int = 0) -> str:
    if isinstance(expr, Num):
        return _fmt_num(expr.value) if expr.value >= 0 else f"(-{_fmt_num(-expr.value)})"
    if isinstance(expr, Param):
        return expr.name
    if isinstance(expr, Call):
        return f"{expr.func}({print_expr(expr.arg)})"
    if isinstance(expr, Neg):
        inner = print_expr(expr.operand, 2)
        return f"-{inner}"
    if isinstance(expr, Bin):
        prec = 1 if expr.op in "+-" else 2
        left = print_expr(expr.left, prec)
        right = print_expr(expr.right, prec + 1)
        body = f"{left} {expr.op} {right}" if prec == 1 else f"{left}{expr.op}{right}"
        return f"({body})" if prec < parent_prec else body
    raise TypeError(f"not an expression node: {expr!r}")


def print_operator(op: OpLiteral) -> str:
    if isinstance(op, PauliString):
        prefix = {1 + 0j: "", 1j: "i", -1 + 0j: "-", -1j: "-i"}[op.phase]
        return prefix + op.word
    rows = ", ".join("[" + ", ".join(_fmt_complex(z) for z in row) + "]"
                     for row in op.rows)
    return f"[{rows}]"


def pretty(spec: ModelSpec) -> str:
    """Canonical re-emission of a model AST (parse(pretty(x)) == x)."""
    lines = ["[system]",
             f"dim = {spec.system.dim}",
             f"parameter = {spec.system.parameter}, default = {_fmt_num(spec.system.default)}",
             "",
             "[hamiltonian]"]
    for term in spec.hamiltonian:
        lines.append(f"H = {print_expr(term.coef)} * {print_operator(term.op)}")
    if spec.dissipators:
        lines.append("")
        lines.append("[dissipator]")
        for d in spec.dissipators:
            lines.append(f"rate = {print_expr(d.rate)}, op = {print_operator(d.op)}")
    if spec.sweep is not None:
        sw = spec.sweep
        lines.extend(["", "[sweep]",
                      f"t0 = {_fmt_num(sw.t0)}",
                      f"t1 = {_fmt_num(sw.t1)}",
                      f"nt = {sw.nt}"])
        if sw.values:
            lines.append("values = " + ", ".join(_fmt_num(v) for v in sw.values))
        if sw.n != 1:
            lines.append(f"n = {sw.n}")
    return "\n".join(lines) + "\n"


# --- compiler ---------------------------------------------------------------

def operator_matrix(op: OpLiteral) -> np.ndarray:
    if isinstance(op, PauliString):
        mat = np.array([[op.phase]], dtype=complex)
        for ch in op.word:
            mat = np.kron(mat, _PAULI[ch])
        return mat
    return np.array(op.rows, dtype=complex)


def compile_model(spec: ModelSpec) -> OpenSystemModel:
    """Close the AST over theta and build an OpenSystemModel.

    Hermiticity of H and non-negativity of the rates are validated at the
    declared default parameter value.
    """
    terms = [(t.coef, diff_expr(t.coef), operator_matrix(t.op)) for t in spec.hamiltonian]

    def hamiltonian_at(theta: float) -> np.ndarray:
        return sum((eval_expr(c, theta) * mat for c, _, mat in terms),
                   np.zeros((spec.system.dim,) * 2, dtype=complex))

    def d_hamiltonian_at(theta: float) -> np.ndarray:
        return sum((eval_expr(dc, theta) * mat for _, dc, mat in terms),
                   np.zeros((spec.system.dim,) * 2, dtype=complex))

    theta0 = spec.system.default
    h0 = hamiltonian_at(theta0)
    dev = float(np.max(np.abs(h0 - h0.conj().T)))
    if dev > 1e-12 * max(1.0, float(np.max(np.abs(h0)))):
        raise ModelError(
            f"Hamiltonian is not Hermitian at the default parameter (deviation {dev:.2e})")

    jumps = []
    for d in spec.dissipators:
        rate, drate = d.rate, diff_expr(d.rate)
        if eval_expr(rate, theta0) < 0:
            raise ModelError(f"negative dissipation rate at the default parameter "
                             f"({eval_expr(rate, theta0):g})")
        jumps.append(JumpChannel(
            operator=operator_matrix(d.op),
            rate_at=(lambda th, e=rate: eval_expr(e, th)),
            drate_at=(lambda th, e=drate: eval_expr(e, th)),
        ))

    return OpenSystemModel(dim=spec.system.dim,
                           hamiltonian_at=hamiltonian_at,
                           d_hamiltonian_at=d_hamiltonian_at,
                           jumps=tuple(jumps))


def load_model(path: str) -> tuple[ModelSpec, OpenSystemModel]:
    """Parse and compile a model file."""
    with open(path, "r", encoding="utf-8") as fh:
        spec = parse_model(fh.read())
    return spec, compile_model(spec)
