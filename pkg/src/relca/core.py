"""States, fields and one-dimensional cellular automaton dynamics.

A cell state is a plain Python integer in ``[0, 2**capacity)``.  The
vacant state is the out-of-band value ``VAC`` (``None``), so it can never
collide with a bit pattern.  Configurations are tuples of states indexed
modulo their length (periodic boundary).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

VAC = None

MAX_CAPACITY = 64
TABLE_BITS = 12  # explicit tables are capped at 2**12 triple entries


class CAError(Exception):
    """Base class for contract violations raised by this package."""

    code = "ca-error"


class UndefinedTransition(CAError):
    code = "undefined-transition"

    def __init__(self, triple, reason="no value for triple"):
        self.triple = tuple(triple)
        super().__init__(f"{reason}: {self.triple!r}")


class CapacityOverflow(CAError):
    code = "capacity-overflow"


class NotNormalized(CAError):
    code = "non-normalized-row"


class WindowError(CAError):
    code = "window-out-of-range"


def is_vac(s) -> bool:
    return s is None


# ---------------------------------------------------------------------------
# Alphabet and fields


@dataclass(frozen=True)
class Alphabet:
    capacity: int
    has_vacant: bool = False

    def __post_init__(self):
        if not 1 <= self.capacity <= MAX_CAPACITY:
            raise CapacityOverflow(f"capacity {self.capacity} outside [1, {MAX_CAPACITY}]")

    @property
    def size(self) -> int:
        return 1 << self.capacity

    def contains(self, s) -> bool:
        if s is None:
            return self.has_vacant
        return isinstance(s, (int, np.integer)) and 0 <= int(s) < self.size

    def states(self) -> range:
        return range(self.size)


class FieldMap:
    """Named bit-index subsets of a state.

    ``entries`` maps a field name to its bit indices.  Indices are sorted,
    and the value of a field is read with the lowest index as the least
    significant bit, so ``get(s, F)`` is the bit string ``s.F`` read as a
    binary number.
    """

    def __init__(self, entries: Mapping[str, Iterable[int]], capacity: int):
        self.capacity = int(capacity)
        self.entries: dict[str, tuple[int, ...]] = {}
        for name, idx in entries.items():
            idx = tuple(int(i) for i in idx)
            if any(b <= a for a, b in zip(idx, idx[1:])):
                raise ValueError(f"field {name}: indices must strictly increase")
            if idx and (idx[0] < 0 or idx[-1] >= self.capacity):
                raise ValueError(f"field {name}: index outside [0, {self.capacity})")
            self.entries[name] = idx
        self._masks = {n: sum(1 << i for i in ix) for n, ix in self.entries.items()}

    @classmethod
    def from_layout(cls, layout: Sequence[tuple[str, int]], capacity: int | None = None):
        """Allocate consecutive bit ranges, in order, for ``(name, width)`` pairs."""
        entries, pos = {}, 0
        for name, width in layout:
            entries[name] = range(pos, pos + width)
            pos += width
        return cls(entries, capacity if capacity is not None else max(pos, 1))

    def __contains__(self, name) -> bool:
        return name in self.entries

    def __repr__(self):
        return f"FieldMap({self.entries!r}, capacity={self.capacity})"

    def __eq__(self, other):
        return isinstance(other, FieldMap) and self.entries == other.entries \
            and self.capacity == other.capacity

    def names(self):
        return list(self.entries)

    def width(self, name: str) -> int:
        return len(self.entries[name])

    def indices(self, name: str) -> tuple[int, ...]:
        return self.entries[name]

    def mask(self, name: str) -> int:
        return self._masks[name]

    def _contiguous(self, name):
        ix = self.entries[name]
        return bool(ix) and ix[-1] - ix[0] + 1 == len(ix)

    def get(self, s: int, name: str) -> int:
        ix = self.entries[name]
        if self._contiguous(name):
            return (s >> ix[0]) & ((1 << len(ix)) - 1)
        v = 0
        for k, i in enumerate(ix):
            v |= ((s >> i) & 1) << k
        return v

    def set(self, s: int, name: str, value: int) -> int:
        ix = self.entries[name]
        value = int(value)
        if value < 0 or value >> len(ix):
            raise ValueError(f"value {value} does not fit field {name} of width {len(ix)}")
        s &= ~self._masks[name]
        for k, i in enumerate(ix):
            s |= ((value >> k) & 1) << i
        return s

    def pack(self, **values) -> int:
        s = 0
        for name, v in values.items():
            s = self.set(s, name, v)
        return s

    def unpack(self, s: int) -> dict[str, int]:
        return {n: self.get(s, n) for n in self.entries}

    def union(self, *names: str) -> tuple[int, ...]:
        return tuple(sorted(set().union(*(self.entries[n] for n in names))))

    def get_bits(self, s: int, indices: Sequence[int]) -> int:
        v = 0
        for k, i in enumerate(indices):
            v |= ((s >> i) & 1) << k
        return v

    def set_bits(self, s: int, indices: Sequence[int], value: int) -> int:
        for k, i in enumerate(indices):
            s = (s & ~(1 << i)) | (((value >> k) & 1) << i)
        return s


# ---------------------------------------------------------------------------
# Transition functions


class TransitionFunction:
    """A map ``S^3 -> S`` with one of three backings.

    ``kind`` is ``"table"`` (explicit array over packed triples),
    ``"program"`` (a compiled rule program) or ``"builtin"`` (a Python
    callable).  ``states`` lists the states the function is meant to be
    used on; it defaults to the whole alphabet.
    """

    def __init__(self, fn: Callable | None, capacity: int, *, kind="builtin", name=None,
                 table=None, vac_ok=False, states=None, fieldmap: FieldMap | None = None,
                 source=None):
        if not 1 <= capacity <= MAX_CAPACITY:
            raise CapacityOverflow(f"capacity {capacity} outside [1, {MAX_CAPACITY}]")
        self.capacity = capacity
        self.kind = kind
        self.name = name or kind
        self.vac_ok = vac_ok
        self.fieldmap = fieldmap
        self.source = source
        self._fn = fn
        self._table = None if table is None else np.asarray(table, dtype=np.int64)
        self._states = None if states is None else tuple(states)

    @classmethod
    def from_table(cls, table, capacity: int, name="table"):
        if 3 * capacity > TABLE_BITS:
            raise CapacityOverflow(
                f"table backing needs 3*capacity <= {TABLE_BITS}; use a program or builtin")
        table = np.asarray(table, dtype=np.int64)
        if table.shape != (1 << (3 * capacity),):
            raise ValueError(f"table must have {1 << (3 * capacity)} entries")
        if table.min() < 0 or table.max() >= (1 << capacity):
            raise ValueError("table value outside the alphabet")
        return cls(None, capacity, kind="table", name=name, table=table)

    @property
    def alphabet(self) -> Alphabet:
        return Alphabet(self.capacity, self.vac_ok)

    def states(self):
        if self._states is not None:
            return self._states
        if self.capacity > 20:
            raise CapacityOverflow("refusing to enumerate more than 2**20 states")
        return tuple(range(1 << self.capacity))

    def triple_index(self, a, b, c) -> int:
        k = self.capacity
        return (a << (2 * k)) | (b << k) | c

    def __call__(self, a, b, c):
        if a is None or b is None or c is None:
            if not self.vac_ok:
                raise UndefinedTransition((a, b, c), "transition undefined on Vac")
        if self._table is not None:
            try:
                return int(self._table[self.triple_index(a, b, c)])
            except (IndexError, TypeError):
                raise UndefinedTransition((a, b, c), "table miss") from None
        return self._fn(a, b, c)

    def table(self) -> np.ndarray:
        """Dense table over packed triples (built lazily, guarded by size)."""
        if self._table is None:
            if 3 * self.capacity > TABLE_BITS:
                raise CapacityOverflow("table view limited to 3*capacity <= 12 bits")
            k = self.capacity
            n = 1 << k
            t = np.zeros(n ** 3, dtype=np.int64)
            valid = set(self.states())
            for a in range(n):
                for b in range(n):
                    for c in range(n):
                        if a in valid and b in valid and c in valid:
                            t[(a << 2 * k) | (b << k) | c] = self._fn(a, b, c)
            self._table = t
        return self._table

    def vectorized(self, left, mid, right) -> np.ndarray:
        """Apply the function elementwise to integer arrays."""
        left, mid, right = (np.asarray(x, dtype=np.int64) for x in (left, mid, right))
        if self._table is not None or 3 * self.capacity <= TABLE_BITS:
            k = self.capacity
            return self.table()[(left << (2 * k)) | (mid << k) | right]
        out = np.empty(np.broadcast(left, mid, right).shape, dtype=np.int64)
        for idx in np.ndindex(out.shape):
            out[idx] = self._fn(int(left[idx]), int(mid[idx]), int(right[idx]))
        return out

    def __repr__(self):
        return f"TransitionFunction({self.name!r}, kind={self.kind}, capacity={self.capacity})"


def _bitwise(capacity, f, name):
    return TransitionFunction(f, capacity, kind="builtin", name=name)


def builtin(name: str, capacity: int = 1) -> TransitionFunction:
    """Return one of the named rules used throughout the tests and the CLI."""
    mask = (1 << capacity) - 1
    if name == "identity":
        return _bitwise(capacity, lambda a, b, c: b, name)
    if name == "left-shift":
        return _bitwise(capacity, lambda a, b, c: c, name)
    if name == "right-shift":
        return _bitwise(capacity, lambda a, b, c: a, name)
    if name == "xor":
        return _bitwise(capacity, lambda a, b, c: (a ^ c) & mask, name)
    if name == "majority":
        return _bitwise(capacity, lambda a, b, c: (a & b) | (a & c) | (b & c), name)
    raise KeyError(f"unknown builtin rule {name!r}")


def random_rule(capacity: int, rng: np.random.Generator, name="random") -> TransitionFunction:
    table = rng.integers(0, 1 << capacity, size=1 << (3 * capacity))
    return TransitionFunction.from_table(table, capacity, name=name)


# ---------------------------------------------------------------------------
# Trajectories


@dataclass
class Trajectory:
    alphabet: Alphabet
    ring_size: int
    frames: list = field(default_factory=list)
    switch_times: list | None = None
    rng_seed: int | None = None

    def append(self, cfg):
        cfg = tuple(cfg)
        if len(cfg) != self.ring_size:
            raise ValueError("frame size differs from ring size")
        self.frames.append(cfg)

    def __len__(self):
        return len(self.frames)

    def __getitem__(self, t):
        return self.frames[t]

    def at(self, x: int, t: int):
        return self.frames[t][x % self.ring_size]


def rotate(cfg: Sequence, k: int) -> tuple:
    """Cyclic shift: ``rotate(cfg, k)[x] == cfg[x - k]``."""
    m = len(cfg)
    return tuple(cfg[(x - k) % m] for x in range(m))


def step_deterministic(cfg: Sequence, tr: TransitionFunction) -> tuple:
    m = len(cfg)
    return tuple(tr(cfg[(x - 1) % m], cfg[x], cfg[(x + 1) % m]) for x in range(m))


def evolve(cfg: Sequence, tr: TransitionFunction, T: int) -> Trajectory:
    if T < 0:
        raise ValueError("T must be non-negative")
    traj = Trajectory(tr.alphabet, len(cfg))
    traj.append(cfg)
    cur = tuple(cfg)
    for _ in range(T):
        cur = step_deterministic(cur, tr)
        traj.append(cur)
    return traj


def evolve_array(cfg, tr: TransitionFunction, T: int) -> np.ndarray:
    """Vectorized ``evolve`` for table-sized rules; returns a (T+1, m) array."""
    out = np.empty((T + 1, len(cfg)), dtype=np.int64)
    out[0] = cfg
    for t in range(T):
        row = out[t]
        out[t + 1] = tr.vectorized(np.roll(row, 1), row, np.roll(row, -1))
    return out


# ---------------------------------------------------------------------------
# Probabilistic CA


class TransitionMatrix:
    """Dense matrix ``P[triple_index, s]`` over an alphabet of ``n`` states.

    Triples are indexed as ``(a*n + b)*n + c``.
    """

    def __init__(self, probs, n_states: int, tol: float = 1e-12):
        probs = np.asarray(probs, dtype=float)
        if probs.shape != (n_states ** 3, n_states):
            raise ValueError(f"expected shape {(n_states ** 3, n_states)}, got {probs.shape}")
        if (probs < 0).any():
            raise NotNormalized("negative probability")
        sums = probs.sum(axis=1)
        bad = np.nonzero(np.abs(sums - 1.0) > tol)[0]
        if bad.size:
            raise NotNormalized(f"row {int(bad[0])} sums to {sums[bad[0]]!r}")
        self.n = n_states
        self.probs = probs
        self._cum = np.cumsum(probs, axis=1)
        self._cum[:, -1] = 1.0

    @classmethod
    def from_function(cls, fn, n_states: int):
        n = n_states
        rows = np.zeros((n ** 3, n))
        for a in range(n):
            for b in range(n):
                for c in range(n):
                    rows[(a * n + b) * n + c] = fn(a, b, c)
        return cls(rows, n)

    @classmethod
    def deterministic(cls, tr: TransitionFunction):
        n = 1 << tr.capacity
        rows = np.zeros((n ** 3, n))
        for a in range(n):
            for b in range(n):
                for c in range(n):
                    rows[(a * n + b) * n + c, tr(a, b, c)] = 1.0
        return cls(rows, n)

    @classmethod
    def coin(cls, p: float = 0.5):
        """Two states, fresh coin every step: state 1 with probability ``p``."""
        return cls(np.tile([1 - p, p], (8, 1)), 2)

    @property
    def noisy(self) -> bool:
        return bool((self.probs > 0).all())

    def prob(self, s, triple) -> float:
        a, b, c = triple
        return float(self.probs[(a * self.n + b) * self.n + c, s])

    def sample(self, left, mid, right, u) -> np.ndarray:
        """Inverse-CDF sampling for arrays of triples with uniforms ``u``."""
        n = self.n
        idx = (np.asarray(left) * n + np.asarray(mid)) * n + np.asarray(right)
        cum = self._cum[idx]
        return (u[..., None] >= cum).sum(axis=-1).clip(0, n - 1)


def step_probabilistic(cfg: Sequence, P: TransitionMatrix, rng: np.random.Generator) -> tuple:
    row = np.asarray(cfg, dtype=np.int64)
    u = rng.random(row.shape[0])
    out = P.sample(np.roll(row, 1), row, np.roll(row, -1), u)
    return tuple(int(v) for v in out)


# ---------------------------------------------------------------------------
# Aggregation


def split_block(s: int, Q: int, capacity: int) -> list[int]:
    mask = (1 << capacity) - 1
    return [(s >> (i * capacity)) & mask for i in range(Q)]


def join_block(parts: Sequence[int], capacity: int) -> int:
    s = 0
    for i, p in enumerate(parts):
        s |= p << (i * capacity)
    return s


def aggregate_transition(tr: TransitionFunction, Q: int) -> TransitionFunction:
    """The rule ``tr^Q`` acting on blocks of ``Q`` symbols.

    The three argument blocks are concatenated; ``tr`` is applied to every
    window of three symbols, ``Q`` times, and the string, which loses two
    symbols per round, ends up being exactly the middle block.
    """
    if Q < 1:
        raise ValueError("Q must be at least 1")
    if Q == 1:
        return tr
    c = tr.capacity
    if Q * c > MAX_CAPACITY:
        raise CapacityOverflow(
            f"aggregated capacity {Q * c} exceeds {MAX_CAPACITY}; advisory: lower Q or use a "
            "narrower alphabet")

    def agg(a, b, d):
        s = split_block(a, Q, c) + split_block(b, Q, c) + split_block(d, Q, c)
        for _ in range(Q):
            s = [tr(s[i], s[i + 1], s[i + 2]) for i in range(len(s) - 2)]
        return join_block(s, c)

    return TransitionFunction(agg, Q * c, kind="builtin", name=f"{tr.name}^{Q}")


# ---------------------------------------------------------------------------
# Separable transition functions


def separable_fields(w: int, capacity: int, outbuf=None, pointer=None) -> FieldMap:
    """Standard layout: Inbuf = [0, w-1], Outbuf and Pointer next unless given."""
    outbuf = range(w, 2 * w) if outbuf is None else outbuf
    pointer = range(2 * w, 3 * w) if pointer is None else pointer
    fm = FieldMap({"Inbuf": range(w), "Outbuf": outbuf, "Pointer": pointer}, capacity)
    buf = fm.union("Inbuf", "Outbuf")
    memory = tuple(i for i in range(capacity) if i not in set(fm.indices("Inbuf")))
    return FieldMap({**fm.entries, "Buf": buf, "Memory": memory}, capacity)


def apply_separable(kernel: Callable[[int], int], r_left, r0: int, r_right, w: int,
                    fm: FieldMap) -> int:
    """Evaluate a transition function given by its bandwidth-``w`` kernel.

    The kernel receives a ``7w``-bit integer: the left neighbour's Buf, then
    ``r0``'s Buf followed by the ``w`` bits at ``r0.Pointer``, then the right
    neighbour's Buf (a vacant neighbour contributes zeros).  It returns
    ``5w`` bits ``p``; ``p[0,3w-1]`` becomes Buf ∪ Pointer and ``p[3w,4w-1]``
    is written at offset ``n = p[4w,5w-1]``.
    """
    cap = fm.capacity
    buf = fm.indices("Buf")
    a = fm.get(r0, "Pointer")
    if a + w > cap:
        raise WindowError(f"pointer window [{a}, {a + w - 1}] outside capacity {cap}")
    win = range(a, a + w)
    lb = 0 if r_left is None else fm.get_bits(r_left, buf)
    rb = 0 if r_right is None else fm.get_bits(r_right, buf)
    mid = fm.get_bits(r0, buf) | (fm.get_bits(r0, win) << (2 * w))
    p = kernel(lb | (mid << (2 * w)) | (rb << (5 * w)))
    if p < 0 or p >> (5 * w):
        raise ValueError("kernel output must have 5w bits")
    mask = (1 << w) - 1
    out = fm.set_bits(r0, fm.union("Buf", "Pointer"), p & ((1 << (3 * w)) - 1))
    n = (p >> (4 * w)) & mask
    if n + w > cap:
        raise WindowError(f"target window [{n}, {n + w - 1}] outside capacity {cap}")
    return fm.set_bits(out, range(n, n + w), (p >> (3 * w)) & mask)


def legal(kernel, u: int, v: int, w: int, fm: FieldMap) -> int:
    """1 iff ``v.Memory`` equals the Memory part of ``tr(Vac, u, Vac)``."""
    ref = apply_separable(kernel, None, u, None, w, fm)
    return int(fm.get(v, "Memory") == fm.get(ref, "Memory"))
