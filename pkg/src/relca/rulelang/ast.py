"""Syntax tree of rule programs.

Nodes are frozen dataclasses holding tuples, so two trees compare equal
exactly when they have the same shape and leaves.  There is no node for
parentheses or for a ``{ ... }`` block: a block is represented by what it
contains.
"""

from __future__ import annotations

from dataclasses import dataclass, fields


class Node:
    __slots__ = ()

    def children(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, Node):
                yield v
            elif isinstance(v, tuple):
                for x in v:
                    if isinstance(x, Node):
                        yield x
                    elif isinstance(x, tuple):
                        yield from (y for y in x if isinstance(y, Node))

    def walk(self):
        yield self
        for c in self.children():
            yield from c.walk()


# -- expressions -----------------------------------------------------------

@dataclass(frozen=True)
class Num(Node):
    value: int


@dataclass(frozen=True)
class Str(Node):
    value: str


@dataclass(frozen=True)
class Var(Node):
    """A name: a bound variable, a parameter, or a field of the cell itself."""
    name: str


@dataclass(frozen=True)
class Nb(Node):
    """``F^j``: field ``F`` of the neighbor at offset ``j``."""
    field: str
    offset: Node


@dataclass(frozen=True)
class Unop(Node):
    op: str          # "-" or "not"
    operand: Node


@dataclass(frozen=True)
class Binop(Node):
    op: str          # + - * // mod amod and or
    left: Node
    right: Node


@dataclass(frozen=True)
class Compare(Node):
    """A comparison chain ``a < b <= c``."""
    ops: tuple
    operands: tuple


@dataclass(frozen=True)
class IfExp(Node):
    then: Node
    cond: Node
    other: Node


@dataclass(frozen=True)
class Quant(Node):
    kind: str        # "forall" | "exists"
    var: str
    values: tuple
    body: Node


@dataclass(frozen=True)
class Apply(Node):
    """A function application: a ``let`` macro, a builtin or an extern."""
    name: str
    args: tuple


# -- statements ------------------------------------------------------------

@dataclass(frozen=True)
class Assign(Node):
    field: str
    expr: Node
    delay: int | None = None


@dataclass(frozen=True)
class Cond(Node):
    branches: tuple           # ((condition, action), ...)
    default: Node | None = None


@dataclass(frozen=True)
class Par(Node):
    items: tuple


@dataclass(frozen=True)
class Seq(Node):
    items: tuple


@dataclass(frozen=True)
class PFor(Node):
    var: str
    values: tuple
    body: Node


@dataclass(frozen=True)
class For(Node):
    var: str
    lo: Node
    hi: Node
    body: Node


@dataclass(frozen=True)
class Repeat(Node):
    count: Node
    body: Node


@dataclass(frozen=True)
class Let(Node):
    name: str
    params: tuple
    expr: Node
    body: Node


@dataclass(frozen=True)
class Write(Node):
    source: Node
    field: str
    lo: Node
    hi: Node


@dataclass(frozen=True)
class Call(Node):
    name: str
    args: tuple


@dataclass(frozen=True)
class Skip(Node):
    pass


# -- declarations ----------------------------------------------------------

@dataclass(frozen=True)
class FieldDecl(Node):
    name: str
    indices: tuple


@dataclass(frozen=True)
class ParamDecl(Node):
    name: str
    value: object     # int or str


@dataclass(frozen=True)
class Rule(Node):
    name: str
    body: Node


@dataclass(frozen=True)
class Subrule(Node):
    name: str
    params: tuple
    body: Node


@dataclass(frozen=True)
class Program(Node):
    capacity: int
    fields: tuple = ()
    params: tuple = ()
    externs: tuple = ()
    subrules: tuple = ()
    rules: tuple = ()


def dump(node, indent: int = 0) -> str:
    """Indented, one-node-per-line rendering (the ``rulecheck`` output)."""
    pad = "  " * indent
    name = type(node).__name__
    if isinstance(node, (Num, Str)):
        return f"{pad}{name} {node.value!r}"
    if isinstance(node, Var):
        return f"{pad}Var {node.name}"
    scalars, kids = [], []
    for f in fields(node):
        v = getattr(node, f.name)
        if isinstance(v, Node):
            kids.append((f.name, [v]))
        elif isinstance(v, tuple) and v and all(isinstance(x, Node) for x in v):
            kids.append((f.name, list(v)))
        elif isinstance(v, tuple) and v and all(isinstance(x, tuple) for x in v):
            kids.append((f.name, [y for x in v for y in x]))
        elif v is not None and v != ():
            scalars.append(f"{f.name}={v!r}")
    lines = [f"{pad}{name}" + (" " + " ".join(scalars) if scalars else "")]
    for label, nodes in kids:
        lines.append(f"{pad}  .{label}")
        lines.extend(dump(n, indent + 2) for n in nodes)
    return "\n".join(lines)
