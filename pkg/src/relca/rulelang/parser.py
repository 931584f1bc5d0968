"""Lexer and recursive-descent parser for ``.rule`` text.

Line structure matters: inside a ``{ ... }`` block, statements on separate
lines act in parallel.  A line break is ignored inside brackets and right
after a token that cannot end a statement (``;``, ``||``, ``{``, ``,``,
``!``, an operator, ...).
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from ..core import CAError
from . import ast as A


class RuleError(CAError):
    code = "rule-error"

    def __init__(self, message, code=None):
        super().__init__(message)
        if code:
            self.code = code


class RuleSyntaxError(RuleError):
    code = "rule-syntax"

    def __init__(self, message, line=0, col=0):
        super().__init__(f"line {line}, column {col}: {message}")
        self.line, self.col = line, col


KEYWORDS = {
    "capacity", "field", "param", "extern", "rule", "subrule", "cond", "pfor", "for", "in",
    "to", "repeat", "let", "Write", "skip", "if", "else", "and", "or", "not", "mod", "amod",
    "forall", "exists",
}

_TOKEN = re.compile(r"""
    (?P<ws>[ \t\r]+) | (?P<comment>\#[^\n]*) | (?P<nl>\n)
  | (?P<str>"(?:[^"\\\n]|\\.)*")
  | (?P<assign>:=(?:_\d+)?)
  | (?P<op>\?!|\|\||//|\.\.|==|!=|<=|>=|[-+*^<>=(){}\[\],;:?!])
  | (?P<int>\d+)
  | (?P<name>[A-Za-z_][A-Za-z0-9_]*(?:\.[A-Za-z_][A-Za-z0-9_]*)*)
""", re.VERBOSE)

# A newline right after one of these cannot end a statement.
_CONTINUE = {";", "||", "{", "(", "[", ",", "=", ":=", "!", "?!", "+", "-", "*", "//", "==",
             "!=", "<", "<=", ">", ">=", "mod", "amod", "and", "or", "not", "if", "else", "^",
             ":", "in", "to", "..", "?"}


@dataclass
class Tok:
    kind: str     # "int", "str", "name", "kw", "op", "assign", "nl", "eof"
    text: str
    line: int
    col: int


def tokenize(text: str) -> list[Tok]:
    toks: list[Tok] = []
    depth = 0
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise RuleSyntaxError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        s = m.group()
        col = pos - line_start + 1
        pos = m.end()
        if kind in ("ws", "comment"):
            continue
        if kind == "nl":
            prev = toks[-1] if toks else None
            if depth == 0 and prev is not None and prev.kind != "nl" and \
                    not (prev.kind in ("op", "kw", "assign") and
                         (prev.text in _CONTINUE or prev.kind == "assign")):
                toks.append(Tok("nl", "\n", line, col))
            line += 1
            line_start = pos
            continue
        if kind == "name" and s in KEYWORDS:
            kind = "kw"
        if kind == "op" and s in "([":
            depth += 1
        elif kind == "op" and s in ")]":
            depth = max(0, depth - 1)
        toks.append(Tok(kind, s, line, col))
    toks.append(Tok("eof", "", line, pos - line_start + 1))
    return toks


def _unescape(s: str) -> str:
    return re.sub(r"\\(.)", lambda m: {"n": "\n", "t": "\t"}.get(m.group(1), m.group(1)), s[1:-1])


def _escape(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n").replace(
        "\t", "\\t") + '"'


class Parser:
    def __init__(self, text: str):
        self.text = text
        self.toks = tokenize(text)
        self.i = 0

    # -- token helpers ----------------------------------------------------
    @property
    def tok(self) -> Tok:
        return self.toks[self.i]

    def error(self, msg, tok=None):
        t = tok or self.tok
        return RuleSyntaxError(msg, t.line, t.col)

    def at(self, *texts) -> bool:
        t = self.tok
        return t.kind in ("op", "kw") and t.text in texts

    def accept(self, *texts):
        if self.at(*texts):
            t = self.tok
            self.i += 1
            return t
        return None

    def expect(self, text):
        if not self.at(text):
            shown = self.tok.text if self.tok.kind != "eof" else "end of input"
            shown = "newline" if self.tok.kind == "nl" else shown
            raise self.error(f"expected {text!r}, found {shown!r}")
        return self.accept(text)

    def name(self) -> str:
        if self.tok.kind != "name":
            raise self.error(f"expected a name, found {self.tok.text!r}")
        t = self.tok
        self.i += 1
        return t.text

    def integer(self) -> int:
        neg = bool(self.accept("-"))
        if self.tok.kind != "int":
            raise self.error("expected an integer")
        v = int(self.tok.text)
        self.i += 1
        return -v if neg else v

    def skip_nl(self):
        while self.tok.kind == "nl":
            self.i += 1

    def end_of_item(self):
        if self.tok.kind == "nl":
            self.skip_nl()
        elif not (self.at("}") or self.tok.kind == "eof"):
            raise self.error(f"unexpected {self.tok.text!r}")

    # -- program ----------------------------------------------------------
    def program(self) -> A.Program:
        capacity = None
        fields, params, externs, subrules, rules = [], [], [], [], []
        self.skip_nl()
        while self.tok.kind != "eof":
            t = self.tok
            if self.accept("capacity"):
                if capacity is not None:
                    raise self.error("capacity declared twice", t)
                capacity = self.integer()
            elif self.accept("field"):
                nm = self.name()
                self.expect("=")
                fields.append(A.FieldDecl(nm, self.index_list(nm)))
            elif self.accept("param"):
                nm = self.name()
                self.expect("=")
                if self.tok.kind == "str":
                    params.append(A.ParamDecl(nm, _unescape(self.tok.text)))
                    self.i += 1
                else:
                    params.append(A.ParamDecl(nm, self.integer()))
            elif self.accept("extern"):
                externs.append(self.name())
                while self.accept(","):
                    externs.append(self.name())
            elif self.accept("rule"):
                nm = self.name()
                rules.append(A.Rule(nm, self.block()))
            elif self.accept("subrule"):
                nm = self.name()
                self.expect("(")
                ps = []
                if not self.at(")"):
                    ps.append(self.name())
                    while self.accept(","):
                        ps.append(self.name())
                self.expect(")")
                subrules.append(A.Subrule(nm, tuple(ps), self.block()))
            else:
                raise self.error(f"expected a declaration, found {t.text!r}")
            self.end_of_item()
        if capacity is None:
            raise self.error("missing 'capacity' declaration")
        return A.Program(capacity, tuple(fields), tuple(params), tuple(externs),
                         tuple(subrules), tuple(rules))

    def index_list(self, field_name) -> tuple:
        start = self.expect("[")
        out = []
        while True:
            lo = self.integer()
            hi = lo
            if self.accept(".."):
                hi = self.integer()
            if lo < 0 or hi < lo:
                raise self.error(f"malformed interval [{lo}..{hi}] for field {field_name}", start)
            out.extend(range(lo, hi + 1))
            if not self.accept(","):
                break
        self.expect("]")
        if len(set(out)) != len(out):
            raise self.error(f"field {field_name} repeats a bit index", start)
        return tuple(sorted(out))

    # -- statements -------------------------------------------------------
    def block(self) -> A.Node:
        self.expect("{")
        self.skip_nl()
        items = self.block_items()
        self.expect("}")
        return items

    def block_items(self) -> A.Node:
        items = []
        while not self.at("}"):
            if self.tok.kind == "eof":
                raise self.error("unbalanced '{': block not closed")
            if self.at("let"):
                items.append(self.let())
                break
            items.append(self.seq())
            self.end_of_item()
        if not items:
            return A.Skip()
        return items[0] if len(items) == 1 else A.Par(tuple(items))

    def let(self) -> A.Let:
        self.expect("let")
        nm = self.name()
        ps = []
        if self.accept("("):
            ps.append(self.name())
            while self.accept(","):
                ps.append(self.name())
            self.expect(")")
        self.expect("=")
        e = self.expr()
        self.end_of_item()
        return A.Let(nm, tuple(ps), e, self.block_items())

    def seq(self) -> A.Node:
        items = [self.par()]
        while self.accept(";"):
            items.append(self.par())
        return items[0] if len(items) == 1 else A.Seq(tuple(items))

    def par(self) -> A.Node:
        items = [self.simple()]
        while self.accept("||"):
            items.append(self.simple())
        return items[0] if len(items) == 1 else A.Par(tuple(items))

    def simple(self) -> A.Node:
        t = self.tok
        if self.at("{"):
            return self.block()
        if self.accept("skip"):
            return A.Skip()
        if self.accept("cond"):
            return self.cond()
        if self.accept("pfor"):
            var = self.name()
            self.expect("in")
            return A.PFor(var, self.int_set(), self.simple())
        if self.accept("for"):
            var = self.name()
            self.expect("=")
            lo = self.expr()
            self.expect("to")
            hi = self.expr()
            return A.For(var, lo, hi, self.simple())
        if self.accept("repeat"):
            n = self.arith()
            return A.Repeat(n, self.simple())
        if self.accept("Write"):
            self.expect("(")
            src = self.expr()
            self.expect(",")
            fname = self.name()
            self.expect("[")
            lo = self.expr()
            hi = self.expr() if self.accept("..") else lo
            self.expect("]")
            self.expect(")")
            return A.Write(src, fname, lo, hi)
        if self.at("let"):
            raise self.error("'let' must start its own line in a block")
        if t.kind == "name":
            nm = self.name()
            if self.tok.kind == "assign":
                a = self.tok.text
                self.i += 1
                delay = int(a[3:]) if len(a) > 2 else None
                return A.Assign(nm, self.expr(), delay)
            if self.accept("("):
                args = self.args()
                return A.Call(nm, args)
            raise self.error(f"expected ':=' or '(' after {nm!r}")
        raise self.error(f"expected a statement, found {t.text or 'end of input'!r}")

    def cond(self) -> A.Cond:
        self.expect("{")
        self.skip_nl()
        branches, default = [], None
        while not self.at("}"):
            if self.tok.kind == "eof":
                raise self.error("unbalanced 'cond {': missing '}'")
            if default is not None:
                raise self.error("the default '?!' must be the last branch")
            if self.accept("?!"):
                default = self.seq()
            elif self.accept("?"):
                c = self.expr()
                self.skip_nl()
                self.expect("!")
                branches.append((c, self.seq()))
            else:
                raise self.error(f"expected '?', '?!' or '}}' in cond, found {self.tok.text!r}")
            self.end_of_item()
        self.expect("}")
        return A.Cond(tuple(branches), default)

    def int_set(self) -> tuple:
        self.expect("{")
        vals = [self.integer()]
        while self.accept(","):
            vals.append(self.integer())
        self.expect("}")
        return tuple(vals)

    def args(self) -> tuple:
        out = []
        if not self.at(")"):
            out.append(self.expr())
            while self.accept(","):
                out.append(self.expr())
        self.expect(")")
        return tuple(out)

    # -- expressions ------------------------------------------------------
    def expr(self) -> A.Node:
        if self.at("forall", "exists"):
            kind = self.tok.text
            self.i += 1
            var = self.name()
            self.expect("in")
            vals = self.int_set()
            self.expect(":")
            return A.Quant(kind, var, vals, self.expr())
        e = self.orexp()
        if self.accept("if"):
            c = self.orexp()
            self.expect("else")
            return A.IfExp(e, c, self.expr())
        return e

    def orexp(self):
        e = self.andexp()
        while self.accept("or"):
            e = A.Binop("or", e, self.andexp())
        return e

    def andexp(self):
        e = self.notexp()
        while self.accept("and"):
            e = A.Binop("and", e, self.notexp())
        return e

    def notexp(self):
        if self.accept("not"):
            return A.Unop("not", self.notexp())
        return self.compare()

    def compare(self):
        first = self.arith()
        ops, operands = [], [first]
        while self.at("==", "!=", "<", "<=", ">", ">="):
            ops.append(self.tok.text)
            self.i += 1
            operands.append(self.arith())
        return first if not ops else A.Compare(tuple(ops), tuple(operands))

    def arith(self):
        e = self.term()
        while self.at("+", "-"):
            op = self.tok.text
            self.i += 1
            e = A.Binop(op, e, self.term())
        return e

    def term(self):
        e = self.unary()
        while self.at("*", "//", "mod", "amod"):
            op = self.tok.text
            self.i += 1
            e = A.Binop(op, e, self.unary())
        return e

    def unary(self):
        if self.accept("-"):
            return A.Unop("-", self.unary())
        return self.postfix()

    def postfix(self):
        t = self.tok
        e = self.atom()
        if self.accept("^"):
            if not isinstance(e, A.Var):
                raise self.error("'^' applies to a field name", t)
            if self.at("-") and self.toks[self.i + 1].kind == "int":
                self.i += 1
                off = A.Num(-int(self.tok.text))
                self.i += 1
            else:
                off = self.atom()
            return A.Nb(e.name, off)
        return e

    def atom(self):
        t = self.tok
        if t.kind == "int":
            self.i += 1
            return A.Num(int(t.text))
        if t.kind == "str":
            self.i += 1
            return A.Str(_unescape(t.text))
        if t.kind == "name":
            self.i += 1
            if self.accept("("):
                return A.Apply(t.text, self.args())
            return A.Var(t.text)
        if self.accept("("):
            e = self.expr()
            self.expect(")")
            return e
        raise self.error(f"expected an expression, found {t.text or 'end of input'!r}")


def parse_ast(text: str) -> A.Program:
    return Parser(text).program()
