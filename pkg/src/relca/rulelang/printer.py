"""Pretty printer whose output parses back to the same tree."""

from __future__ import annotations

from . import ast as A
from .parser import _escape

_BIN_PREC = {"or": 1, "and": 2, "+": 5, "-": 5, "*": 6, "//": 6, "mod": 6, "amod": 6}


def _prec(e) -> int:
    if isinstance(e, (A.IfExp, A.Quant)):
        return 0
    if isinstance(e, A.Binop):
        return _BIN_PREC[e.op]
    if isinstance(e, A.Unop):
        return 3 if e.op == "not" else 7
    if isinstance(e, A.Compare):
        return 4
    if isinstance(e, A.Nb):
        return 8
    if isinstance(e, A.Num) and e.value < 0:
        return 7
    return 9


def expr(e, min_prec: int = 0) -> str:
    s = _expr(e)
    return f"({s})" if _prec(e) < min_prec else s


def _expr(e) -> str:
    if isinstance(e, A.Num):
        return str(e.value)
    if isinstance(e, A.Str):
        return _escape(e.value)
    if isinstance(e, A.Var):
        return e.name
    if isinstance(e, A.Nb):
        off = e.offset
        if isinstance(off, A.Num):
            return f"{e.field}^{off.value}"
        return f"{e.field}^{expr(off, 9)}"
    if isinstance(e, A.Unop):
        if e.op == "not":
            return "not " + expr(e.operand, 3)
        return "-" + expr(e.operand, 7)
    if isinstance(e, A.Binop):
        p = _BIN_PREC[e.op]
        return f"{expr(e.left, p)} {e.op} {expr(e.right, p + 1)}"
    if isinstance(e, A.Compare):
        parts = [expr(e.operands[0], 5)]
        for op, x in zip(e.ops, e.operands[1:]):
            parts += [op, expr(x, 5)]
        return " ".join(parts)
    if isinstance(e, A.IfExp):
        return f"{expr(e.then, 1)} if {expr(e.cond, 1)} else {expr(e.other, 0)}"
    if isinstance(e, A.Quant):
        vals = ", ".join(map(str, e.values))
        return f"{e.kind} {e.var} in {{{vals}}}: {expr(e.body, 0)}"
    if isinstance(e, A.Apply):
        return f"{e.name}({', '.join(expr(a) for a in e.args)})"
    raise TypeError(f"not an expression: {e!r}")


def _block(s, ind: str) -> str:
    inner = ind + "  "
    return "{\n" + "\n".join(inner + line for line in _lines(s, inner)) + "\n" + ind + "}"


def _lines(s, ind: str) -> list[str]:
    """The lines of a block whose contents are ``s``."""
    if isinstance(s, A.Let):
        head = f"let {s.name}" + (f"({', '.join(s.params)})" if s.params else "")
        head += f" = {expr(s.expr)}"
        return [head] + ([] if isinstance(s.body, A.Skip) else _lines(s.body, ind))
    if isinstance(s, A.Par):
        out = []
        for k, item in enumerate(s.items):
            last = k == len(s.items) - 1
            if isinstance(item, A.Let) and last:
                out.extend(_lines(item, ind))
            elif isinstance(item, (A.Let, A.Par)):
                out.append(_block(item, ind))
            else:
                out.append(stmt(item, ind))
        return out
    return [stmt(s, ind)]


def _simple(s, ind: str) -> str:
    if isinstance(s, (A.Par, A.Seq, A.Let)):
        return _block(s, ind)
    return stmt(s, ind)


def stmt(s, ind: str = "") -> str:
    if isinstance(s, A.Assign):
        op = ":=" if s.delay is None else f":=_{s.delay}"
        return f"{s.field} {op} {expr(s.expr)}"
    if isinstance(s, A.Skip):
        return "skip"
    if isinstance(s, A.Call):
        return f"{s.name}({', '.join(expr(a) for a in s.args)})"
    if isinstance(s, A.Write):
        loc = expr(s.lo) if s.lo == s.hi else f"{expr(s.lo)}..{expr(s.hi)}"
        return f"Write({expr(s.source)}, {s.field}[{loc}])"
    if isinstance(s, A.Cond):
        inner = ind + "  "
        lines = ["cond {"]
        for c, act in s.branches:
            lines.append(f"{inner}? {expr(c)}")
            lines.append(f"{inner}! {stmt(act, inner)}")
        if s.default is not None:
            lines.append(f"{inner}?! {stmt(s.default, inner)}")
        return "\n".join(lines) + "\n" + ind + "}"
    if isinstance(s, A.PFor):
        return f"pfor {s.var} in {{{', '.join(map(str, s.values))}}} {_simple(s.body, ind)}"
    if isinstance(s, A.For):
        return f"for {s.var} = {expr(s.lo)} to {expr(s.hi)} {_simple(s.body, ind)}"
    if isinstance(s, A.Repeat):
        return f"repeat {expr(s.count, 5)} {_simple(s.body, ind)}"
    if isinstance(s, A.Par):
        parts = [_block(x, ind) if isinstance(x, (A.Par, A.Seq, A.Let)) else stmt(x, ind)
                 for x in s.items]
        return " || ".join(parts)
    if isinstance(s, A.Seq):
        parts = [_block(x, ind) if isinstance(x, (A.Seq, A.Let)) else stmt(x, ind)
                 for x in s.items]
        return "; ".join(parts)
    if isinstance(s, A.Let):
        return _block(s, ind)
    raise TypeError(f"not a statement: {s!r}")


def _indices(ix) -> str:
    runs, start = [], None
    for k, i in enumerate(ix):
        if start is None:
            start = i
        if k + 1 == len(ix) or ix[k + 1] != i + 1:
            runs.append(f"{start}" if start == i else f"{start}..{i}")
            start = None
    return ", ".join(runs)


def program(p: A.Program) -> str:
    out = [f"capacity {p.capacity}"]
    out += [f"field {f.name} = [{_indices(f.indices)}]" for f in p.fields]
    for prm in p.params:
        v = _escape(prm.value) if isinstance(prm.value, str) else str(prm.value)
        out.append(f"param {prm.name} = {v}")
    if p.externs:
        out.append("extern " + ", ".join(p.externs))
    for sr in p.subrules:
        out.append("")
        out.append(f"subrule {sr.name}({', '.join(sr.params)}) {_block(sr.body, '')}")
    for r in p.rules:
        out.append("")
        out.append(f"rule {r.name} {_block(r.body, '')}")
    return "\n".join(out) + "\n"
