"""Static checks and host-level interpretation of rule programs.

Timing model
------------
Every statement has a duration ``D`` in steps: atomic statements take one
step, ``a || b`` takes ``max``, ``a; b`` takes the sum, ``repeat n s`` and
``for`` take ``count * D(body)``.  A statement is run at a local time
``tau``; at the top of a rule ``tau`` is the cell's ``Age``.  Only a
sequence (or ``repeat``/``for``) looks at ``tau``: it runs item ``i`` when
``t_i <= tau < t_(i+1)`` with ``t_i`` the cumulative durations of the items
before it, passing ``tau - t_i`` down.  ``desugar`` spells this out as
``cond`` statements with ``Age`` guards.

Writes of one step are collected in program order (the last one wins) and
all reads see the state before the step.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping

from ..core import VAC, CapacityOverflow, FieldMap, TransitionFunction
from . import ast as A
from .parser import RuleError, parse_ast
from .printer import program as print_program

BUILTINS = {"bit", "isvac", "min", "max", "abs"}


def amod(x: int, m: int) -> int:
    """Representative of ``x`` modulo ``m`` in ``(-m/2, m/2]``."""
    if m == 0:
        raise RuleError("amod by zero", "div-zero")
    r = x % m
    return r - m if 2 * r > m else r


@dataclass(frozen=True)
class Macro:
    params: tuple
    expr: A.Node
    env: Mapping


@dataclass
class RuleProgram:
    """A parsed and checked program with its field map and parameter table."""

    ast: A.Program
    text: str
    fieldmap: FieldMap
    params: dict
    delayed: tuple = ()
    p2: int = 1
    subrules: dict = field(default_factory=dict)

    @property
    def capacity(self) -> int:
        return self.ast.capacity

    @property
    def rules(self):
        return self.ast.rules


def parse(text: str) -> RuleProgram:
    """Parse and statically check ``.rule`` text."""
    ast = parse_ast(text)
    return check(ast, text)


def check(ast: A.Program, text: str | None = None) -> RuleProgram:
    text = print_program(ast) if text is None else text
    if not 1 <= ast.capacity <= 64:
        raise CapacityOverflow(f"capacity {ast.capacity} outside [1, 64]")
    try:
        fm = FieldMap({f.name: f.indices for f in ast.fields}, ast.capacity)
    except ValueError as exc:
        raise RuleError(str(exc), "interval") from None
    if len({f.name for f in ast.fields}) != len(ast.fields):
        raise RuleError("field declared twice", "interval")
    params = {"Param_0": text}
    for k, p in enumerate(ast.params, start=1):
        params[p.name] = p.value
        params[f"Param_{k}"] = p.value
    delayed = tuple(n[4:] for n in fm.names() if n.startswith("Cur."))
    for d in delayed:
        for part in ("Fut.", "Wait."):
            if part + d not in fm:
                raise RuleError(f"delayed field {d} needs {part}{d}", "undeclared")
    p2 = 1
    if delayed:
        p2 = params.get("p2", min((1 << fm.width("Wait." + d)) - 1 for d in delayed))
    prog = RuleProgram(ast, text, fm, params, delayed, int(p2),
                       {s.name: s for s in ast.subrules})
    _Checker(prog).run()
    return prog


class _Checker:
    def __init__(self, prog: RuleProgram):
        self.p = prog
        self.fields = set(prog.fieldmap.names()) | set(prog.delayed)
        self.externs = set(prog.ast.externs)

    def run(self):
        for sr in self.p.ast.subrules:
            self.stmt(sr.body, set(sr.params), set())
        self._no_recursion()
        for r in self.p.ast.rules:
            self.stmt(r.body, set(), set())
            duration(self.p, r.body)
            if self._gated(r.body) and "Age" not in self.p.fieldmap:
                raise RuleError(f"rule {r.name} sequences statements but no Age field is "
                                "declared", "undeclared")

    def _gated(self, s) -> bool:
        for n in s.walk():
            if isinstance(n, (A.Seq, A.Repeat, A.For)):
                return True
            if isinstance(n, A.Call) and n.name in self.p.subrules:
                if self._gated(self.p.subrules[n.name].body):
                    return True
        return False

    def _no_recursion(self):
        state = {}

        def visit(name, stack):
            if state.get(name) == 1:
                raise RuleError(f"subrule {name} calls itself", "recursion")
            if state.get(name) == 2:
                return
            state[name] = 1
            for n in self.p.subrules[name].body.walk():
                if isinstance(n, A.Call) and n.name in self.p.subrules:
                    visit(n.name, stack)
            state[name] = 2

        for name in self.p.subrules:
            visit(name, [])

    def field_target(self, name):
        if name not in self.fields:
            raise RuleError(f"assignment to undeclared field {name}", "undeclared")

    def stmt(self, s, vars_, macros):
        if isinstance(s, A.Assign):
            self.field_target(s.field)
            if s.delay is not None:
                if s.field not in self.p.delayed:
                    raise RuleError(f"delayed assignment to {s.field}, which has no Cur/Fut/Wait "
                                    "subfields", "undeclared")
                if not 1 <= s.delay <= self.p.p2:
                    raise RuleError(f"delay {s.delay} outside [1, {self.p.p2}]", "delay-range")
            self.expr(s.expr, vars_, macros)
        elif isinstance(s, A.Cond):
            for c, act in s.branches:
                self.expr(c, vars_, macros)
                self.stmt(act, vars_, macros)
            if s.default is not None:
                self.stmt(s.default, vars_, macros)
        elif isinstance(s, (A.Par, A.Seq)):
            for x in s.items:
                self.stmt(x, vars_, macros)
        elif isinstance(s, A.PFor):
            self.stmt(s.body, vars_ | {s.var}, macros)
        elif isinstance(s, A.For):
            self.expr(s.lo, vars_, macros)
            self.expr(s.hi, vars_, macros)
            self.stmt(s.body, vars_ | {s.var}, macros)
        elif isinstance(s, A.Repeat):
            self.expr(s.count, vars_, macros)
            self.stmt(s.body, vars_, macros)
        elif isinstance(s, A.Let):
            if s.params:
                self.expr(s.expr, vars_ | set(s.params), macros)
                self.stmt(s.body, vars_, macros | {s.name})
            else:
                self.expr(s.expr, vars_, macros)
                self.stmt(s.body, vars_ | {s.name}, macros)
        elif isinstance(s, A.Write):
            self.field_target(s.field)
            if "Addr" not in self.p.fieldmap:
                raise RuleError("Write needs an Addr field", "undeclared")
            for e in (s.source, s.lo, s.hi):
                self.expr(e, vars_, macros)
        elif isinstance(s, A.Call):
            sr = self.p.subrules.get(s.name)
            if sr is None:
                raise RuleError(f"call of undeclared subrule {s.name}", "undeclared")
            if len(sr.params) != len(s.args):
                raise RuleError(f"subrule {s.name} takes {len(sr.params)} arguments", "arity")
            for a in s.args:
                self.expr(a, vars_, macros)
        elif isinstance(s, A.Skip):
            pass
        else:
            raise TypeError(s)

    def expr(self, e, vars_, macros):
        if isinstance(e, A.Var):
            if e.name not in vars_ and e.name not in self.p.params and e.name not in self.fields:
                raise RuleError(f"undeclared name {e.name}", "undeclared")
        elif isinstance(e, A.Nb):
            if e.field not in self.fields:
                raise RuleError(f"undeclared field {e.field}", "undeclared")
        elif isinstance(e, A.Apply):
            if e.name not in macros and e.name not in BUILTINS and e.name not in self.externs:
                raise RuleError(f"unknown function {e.name}", "undeclared")
        elif isinstance(e, A.Quant):
            self.expr(e.body, vars_ | {e.var}, macros)
            return
        for c in e.children():
            self.expr(c, vars_, macros)


# -- durations -------------------------------------------------------------

def const_value(prog: RuleProgram, e) -> int:
    """Evaluate an expression that may only use literals and parameters."""
    ctx = _Ctx(prog, (0, 0, 0), {}, const=True)
    v = ctx.eval(e, {})
    if not isinstance(v, int):
        raise RuleError("loop bound must be an integer", "value-range")
    return v


def duration(prog: RuleProgram, s) -> int:
    if isinstance(s, (A.Assign, A.Write, A.Skip)):
        return 1
    if isinstance(s, A.Cond):
        acts = [a for _, a in s.branches] + ([s.default] if s.default is not None else [])
        return max((duration(prog, a) for a in acts), default=1)
    if isinstance(s, A.Par):
        return max(duration(prog, x) for x in s.items)
    if isinstance(s, A.Seq):
        return sum(duration(prog, x) for x in s.items)
    if isinstance(s, A.PFor):
        return duration(prog, s.body)
    if isinstance(s, A.Let):
        return duration(prog, s.body)
    if isinstance(s, A.Repeat):
        return max(0, const_value(prog, s.count)) * duration(prog, s.body)
    if isinstance(s, A.For):
        n = const_value(prog, s.hi) - const_value(prog, s.lo) + 1
        return max(0, n) * duration(prog, s.body)
    if isinstance(s, A.Call):
        return duration(prog, prog.subrules[s.name].body)
    raise TypeError(s)


# -- evaluation ------------------------------------------------------------

class _Ctx:
    def __init__(self, prog: RuleProgram, triple, externs, const=False):
        self.p = prog
        self.triple = triple
        self.externs = externs
        self.const = const
        self.fm = prog.fieldmap
        self.writes: list[tuple[str, int, int | None]] = []

    def read(self, name: str, j: int):
        if self.const:
            raise RuleError("loop bounds may not read fields", "value-range")
        if j not in (-1, 0, 1):
            raise RuleError(f"neighbor offset {j} outside {{-1, 0, 1}}", "value-range")
        s = self.triple[j + 1]
        if s is VAC:
            raise RuleError(f"read of field {name} of a vacant neighbor {j}", "vac-read")
        if name not in self.fm and name in self.p.delayed:
            name = "Cur." + name
        return self.fm.get(s, name)

    def eval(self, e, env):
        if isinstance(e, A.Num):
            return e.value
        if isinstance(e, A.Str):
            return e.value
        if isinstance(e, A.Var):
            if e.name in env:
                return env[e.name]
            if e.name in self.p.params:
                return self.p.params[e.name]
            return self.read(e.name, 0)
        if isinstance(e, A.Nb):
            return self.read(e.field, self.eval(e.offset, env))
        if isinstance(e, A.Unop):
            v = self.eval(e.operand, env)
            return (not v) if e.op == "not" else -v
        if isinstance(e, A.Binop):
            op = e.op
            if op == "and":
                return self.eval(e.left, env) and self.eval(e.right, env)
            if op == "or":
                return self.eval(e.left, env) or self.eval(e.right, env)
            a, b = self.eval(e.left, env), self.eval(e.right, env)
            if op == "+":
                return a + b
            if op == "-":
                return a - b
            if op == "*":
                return a * b
            if b == 0:
                raise RuleError(f"{op} by zero", "div-zero")
            if op == "//":
                return a // b
            if op == "mod":
                return a % b
            return amod(a, b)
        if isinstance(e, A.Compare):
            left = self.eval(e.operands[0], env)
            for op, x in zip(e.ops, e.operands[1:]):
                right = self.eval(x, env)
                ok = {"==": left == right, "!=": left != right, "<": left < right,
                      "<=": left <= right, ">": left > right, ">=": left >= right}[op]
                if not ok:
                    return False
                left = right
            return True
        if isinstance(e, A.IfExp):
            return self.eval(e.then, env) if self.eval(e.cond, env) else self.eval(e.other, env)
        if isinstance(e, A.Quant):
            test = all if e.kind == "forall" else any
            return test(self.eval(e.body, {**env, e.var: v}) for v in e.values)
        if isinstance(e, A.Apply):
            return self.apply(e, env)
        raise TypeError(e)

    def apply(self, e, env):
        f = env.get(e.name)
        if isinstance(f, Macro):
            args = [self.eval(a, env) for a in e.args]
            if len(args) != len(f.params):
                raise RuleError(f"{e.name} takes {len(f.params)} arguments", "arity")
            return self.eval(f.expr, {**f.env, **dict(zip(f.params, args))})
        if e.name == "isvac":
            (j,) = [self.eval(a, env) for a in e.args]
            return self.triple[j + 1] is VAC
        args = [self.eval(a, env) for a in e.args]
        if e.name == "bit":
            return (args[0] >> args[1]) & 1
        if e.name in ("min", "max", "abs"):
            return {"min": min, "max": max, "abs": abs}[e.name](*args)
        fn = self.externs.get(e.name)
        if fn is None:
            raise RuleError(f"extern {e.name} is not bound", "undeclared")
        return fn(*args)

    # statements
    def run(self, s, env, tau):
        if isinstance(s, A.Assign):
            self.writes.append((s.field, self.eval(s.expr, env), s.delay))
        elif isinstance(s, A.Skip):
            pass
        elif isinstance(s, A.Cond):
            for c, act in s.branches:
                if self.eval(c, env):
                    self.run(act, env, tau)
                    return
            if s.default is not None:
                self.run(s.default, env, tau)
        elif isinstance(s, A.Par):
            for x in s.items:
                self.run(x, env, tau)
        elif isinstance(s, A.Seq):
            t = 0
            for x in s.items:
                d = duration(self.p, x)
                if t <= tau < t + d:
                    self.run(x, env, tau - t)
                    return
                t += d
        elif isinstance(s, A.PFor):
            for v in s.values:
                self.run(s.body, {**env, s.var: v}, tau)
        elif isinstance(s, A.Repeat):
            d = duration(self.p, s.body)
            n = const_value(self.p, s.count)
            if d and 0 <= tau < n * d:
                self.run(s.body, env, tau % d)
        elif isinstance(s, A.For):
            d = duration(self.p, s.body)
            lo, hi = const_value(self.p, s.lo), const_value(self.p, s.hi)
            if d and 0 <= tau < (hi - lo + 1) * d:
                self.run(s.body, {**env, s.var: lo + tau // d}, tau % d)
        elif isinstance(s, A.Let):
            if s.params:
                val = Macro(s.params, s.expr, env)
                self.run(s.body, {**env, s.name: val}, tau)
            else:
                self.run(s.body, {**env, s.name: self.eval(s.expr, env)}, tau)
        elif isinstance(s, A.Write):
            self.write(s, env)
        elif isinstance(s, A.Call):
            sr = self.p.subrules[s.name]
            args = [self.eval(a, env) for a in s.args]
            self.run(sr.body, dict(zip(sr.params, args)), tau)
        else:
            raise TypeError(s)

    def write(self, s, env):
        addr = self.read("Addr", 0)
        lo, hi = self.eval(s.lo, env), self.eval(s.hi, env)
        if not 0 <= lo <= hi:
            raise RuleError(f"malformed location [{lo}..{hi}]", "interval")
        if not lo <= addr <= hi:
            return
        k = addr - lo
        src = self.eval(s.source, env)
        if isinstance(src, str):
            if k >= len(src):
                return
            ch = src[k]
            value = int(ch) if set(src) <= {"0", "1"} else ord(ch)
        else:
            value = (int(src) >> k) & 1
        self.writes.append((s.field, value, None))


def delayed_assign_step(state: int, fm: FieldMap, delayed, writes: Mapping[str, tuple],
                        p2: int) -> int:
    """Advance the Cur/Fut/Wait triples of the delayed fields by one step.

    ``writes`` maps a delayed field name to ``(value, p)`` for ``F :=_p value``.
    ``Wait`` is set to ``p`` on a write and otherwise decreases by one down
    to 0.  Whenever the new ``Wait`` is 1, ``Cur`` takes the value of the
    new ``Fut``; that is the only way ``Cur`` changes.
    """
    for name in delayed:
        cur, fut, wait = "Cur." + name, "Fut." + name, "Wait." + name
        w = fm.get(state, wait)
        if name in writes:
            v, p = writes[name]
            if not 1 <= p <= p2:
                raise RuleError(f"delay {p} outside [1, {p2}]", "delay-range")
            state = _set(fm, state, fut, v)
            w = p
        else:
            w = max(w - 1, 0)
        state = fm.set(state, wait, w)
        if w == 1:
            state = fm.set(state, cur, fm.get(state, fut))
    return state


def _set(fm: FieldMap, state: int, name: str, v) -> int:
    if isinstance(v, bool):
        v = int(v)
    if not isinstance(v, int) or v < 0 or v >> fm.width(name):
        raise RuleError(f"value {v!r} does not fit field {name} (width {fm.width(name)})",
                        "value-range")
    return fm.set(state, name, v)


def interpret(prog: RuleProgram, left, mid, right, externs: Mapping[str, Callable] | None = None):
    """One step of the program at a cell whose neighborhood is ``(left, mid, right)``.

    A vacant cell stays vacant.
    """
    if mid is VAC:
        return VAC
    ctx = _Ctx(prog, (left, mid, right), dict(externs or {}))
    tau = prog.fieldmap.get(mid, "Age") if "Age" in prog.fieldmap else 0
    for r in prog.rules:
        ctx.run(r.body, {}, tau)
    state = mid
    pending = {}
    for name, v, p in ctx.writes:
        if name in prog.delayed:
            pending[name] = (v, 1 if p is None else p)
        else:
            state = _set(prog.fieldmap, state, name, v)
    if prog.delayed:
        state = delayed_assign_step(state, prog.fieldmap, prog.delayed, pending, prog.p2)
    return state


def compile_to_transition(prog: RuleProgram, externs: Mapping[str, Callable] | None = None,
                          name: str | None = None, states=None) -> TransitionFunction:
    externs = dict(externs or {})
    missing = [e for e in prog.ast.externs if e not in externs]
    if missing:
        raise RuleError(f"unbound extern(s): {', '.join(missing)}", "undeclared")

    def fn(a, b, c):
        return interpret(prog, a, b, c, externs)

    rname = name or (prog.rules[0].name if prog.rules else "identity")
    return TransitionFunction(fn, prog.capacity, kind="program", name=rname, vac_ok=True,
                              fieldmap=prog.fieldmap, source=prog.text, states=states)


# -- desugaring ------------------------------------------------------------

def _age_guard(lo: int, hi: int) -> A.Node:
    return A.Compare(("<=", "<"), (A.Num(lo), A.Var("Age"), A.Num(hi)))


def desugar(prog: RuleProgram, s, offset: int = 0):
    """Replace sequencing (``;``, ``repeat``, ``for``, subrule calls) with Age-guarded conds.

    Item ``i`` of a sequence starting at local time ``offset`` is guarded by
    ``t_i <= Age < t_(i+1)`` with ``t_i = offset + sum of earlier durations``.
    """
    if isinstance(s, A.Seq):
        branches, t = [], offset
        for x in s.items:
            d = duration(prog, x)
            branches.append((_age_guard(t, t + d), desugar(prog, x, t)))
            t += d
        return A.Cond(tuple(branches))
    if isinstance(s, A.Repeat):
        n = const_value(prog, s.count)
        return desugar(prog, A.Seq((s.body,) * n), offset) if n > 0 else A.Skip()
    if isinstance(s, A.For):
        lo, hi = const_value(prog, s.lo), const_value(prog, s.hi)
        items = tuple(A.Let(s.var, (), A.Num(v), s.body) for v in range(lo, hi + 1))
        return desugar(prog, A.Seq(items), offset) if items else A.Skip()
    if isinstance(s, A.Call):
        sr = prog.subrules[s.name]
        body = sr.body
        for p, a in reversed(list(zip(sr.params, s.args))):
            body = A.Let(p, (), a, body)
        return desugar(prog, body, offset)
    if isinstance(s, A.Cond):
        return A.Cond(tuple((c, desugar(prog, a, offset)) for c, a in s.branches),
                      None if s.default is None else desugar(prog, s.default, offset))
    if isinstance(s, A.Par):
        return A.Par(tuple(desugar(prog, x, offset) for x in s.items))
    if isinstance(s, A.PFor):
        return A.PFor(s.var, s.values, desugar(prog, s.body, offset))
    if isinstance(s, A.Let):
        return A.Let(s.name, s.params, s.expr, desugar(prog, s.body, offset))
    return s


def desugar_program(prog: RuleProgram) -> RuleProgram:
    rules = tuple(A.Rule(r.name, desugar(prog, r.body)) for r in prog.ast.rules)
    ast = A.Program(prog.ast.capacity, prog.ast.fields, prog.ast.params, prog.ast.externs,
                    (), rules)
    return check(ast, prog.text)
