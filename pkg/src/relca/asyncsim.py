"""Totally asynchronous updating, the marching-soldiers lift and variable-period runs."""

from __future__ import annotations

import csv
import heapq
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .core import CAError, FieldMap, TransitionFunction
from .rulelang.interp import amod


class AsyncError(CAError):
    code = "async-error"


# ---------------------------------------------------------------------------
# The marching-soldiers lift


class MarchingLift(TransitionFunction):
    """``tr1`` built from ``tr2``: fields Cur (tr2's state), Prev, and Age mod ``U``."""

    def __init__(self, tr2: TransitionFunction, U: int):
        if U < 3:
            raise AsyncError("the Age field needs U >= 3")
        c = tr2.capacity
        a = max(1, math.ceil(math.log2(U)))
        fm = FieldMap.from_layout([("Cur", c), ("Prev", c), ("Age", a)])
        self.tr2, self.U, self.c = tr2, U, c
        states = [s for s in range(1 << fm.capacity) if fm.get(s, "Age") < U]
        super().__init__(self._scalar, fm.capacity, kind="builtin", name=f"march({tr2.name})",
                         fieldmap=fm, states=states)

    def _split(self, s):
        c = self.c
        m = (1 << c) - 1
        return s & m, (s >> c) & m, s >> (2 * c)

    def pack(self, cur, prev=0, age=0):
        return cur | (prev << self.c) | (age << (2 * self.c))

    def _scalar(self, left, mid, right):
        (cl, pl, al), (c0, _, a0), (cr, pr, ar) = map(self._split, (left, mid, right))
        if amod(al - a0, self.U) < 0 or amod(ar - a0, self.U) < 0:
            return mid
        rl = cl if al == a0 else pl
        rr = cr if ar == a0 else pr
        return self.pack(self.tr2(rl, c0, rr), c0, (a0 + 1) % self.U)

    def vectorized(self, left, mid, right):
        left, mid, right = (np.asarray(x, dtype=np.int64) for x in (left, mid, right))
        (cl, pl, al), (c0, _, a0), (cr, pr, ar) = map(self._split, (left, mid, right))
        U = self.U
        dl = (al - a0) % U
        dr = (ar - a0) % U
        lag = (2 * dl > U) | (2 * dr > U)
        rl = np.where(al == a0, cl, pl)
        rr = np.where(ar == a0, cr, pr)
        new = self.pack(self.tr2.vectorized(rl, c0, rr), c0, (a0 + 1) % U)
        return np.where(lag, mid, new)


def lift_marching(tr2: TransitionFunction, U: int = 3) -> MarchingLift:
    return MarchingLift(tr2, U)


def lift_config(lift: MarchingLift, xi2) -> np.ndarray:
    """The lifted start: ``Cur = xi2``, ``Prev = Age = 0``."""
    return np.asarray(xi2, dtype=np.int64)


def cur_of(lift: MarchingLift, eta) -> np.ndarray:
    return np.asarray(eta, dtype=np.int64) & ((1 << lift.c) - 1)


# ---------------------------------------------------------------------------
# Asynchronous application


def _apply(tr: TransitionFunction, cfg: np.ndarray) -> np.ndarray:
    """``tr`` at every site of a batch of ring configurations (last axis = ring)."""
    return np.asarray(tr.vectorized(np.roll(cfg, 1, -1), cfg, np.roll(cfg, -1, -1)),
                      dtype=np.int64)


def update_sites(tr, cfg: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """``tr(xi, E)`` where ``E`` is given by a boolean mask (broadcast over a batch)."""
    return np.where(mask, _apply(tr, cfg), cfg)


@dataclass
class CommutativityVerdict:
    commutative: bool
    witness: tuple | None = None    # (xi, x, y)
    checked: int = 0
    exhaustive: bool = False


def is_commutative(tr: TransitionFunction, ring: int = 5, mode: str = "exhaustive",
                   samples: int = 10000, seed: int = 0, budget: int = 1 << 21,
                   states=None) -> CommutativityVerdict:
    """Check ``tr(xi,{x},{y}) == tr(xi,{y},{x})`` for free sites ``x != y``.

    Non-adjacent sites never see each other's update, so only neighboring
    pairs are examined.  ``exhaustive`` mode enumerates every configuration
    over ``states`` (default: the states the function is meant for) and is
    refused when there are more than ``budget`` of them.
    """
    states = np.asarray(tr.states() if states is None else states, dtype=np.int64)
    n = len(states)
    if mode == "exhaustive":
        total = n ** ring
        if total > budget:
            raise AsyncError(f"{n}^{ring} = {total} configurations exceed the exhaustive budget")
        idx = np.indices((n,) * ring).reshape(ring, -1).T
        cfgs = states[idx]
    elif mode == "sampled":
        rng = np.random.default_rng(seed)
        cfgs = states[rng.integers(0, n, size=(samples, ring))]
    else:
        raise AsyncError(f"unknown mode {mode!r}")
    after = _apply(tr, cfgs)
    free = after != cfgs
    pairs = {(x, (x + 1) % ring) for x in range(ring) if (x + 1) % ring != x}
    for x, y in sorted(pairs):
        both = free[:, x] & free[:, y]
        if not both.any():
            continue
        sub = cfgs[both]
        mx = np.zeros(ring, bool)
        mx[x] = True
        my = np.zeros(ring, bool)
        my[y] = True
        a = update_sites(tr, update_sites(tr, sub, mx), my)
        b = update_sites(tr, update_sites(tr, sub, my), mx)
        bad = np.nonzero((a != b).any(axis=1))[0]
        if len(bad):
            return CommutativityVerdict(False, (tuple(int(v) for v in sub[bad[0]]), x, y),
                                        len(cfgs), mode == "exhaustive")
    return CommutativityVerdict(True, None, len(cfgs), mode == "exhaustive")


# ---------------------------------------------------------------------------
# Schedules and runs


def schedule_all(ring: int, T: int, batch: int = 1) -> np.ndarray:
    return np.ones((T, batch, ring), bool)


def schedule_random(ring: int, T: int, p: float, rng: np.random.Generator,
                    batch: int = 1) -> np.ndarray:
    return rng.random((T, batch, ring)) < p


def schedule_from_lists(ring: int, sets) -> np.ndarray:
    out = np.zeros((len(sets), 1, ring), bool)
    for t, s in enumerate(sets):
        for x in s:
            if not 0 <= x < ring:
                raise AsyncError(f"site {x} outside the ring of size {ring}")
            out[t, 0, x] = True
    return out


@dataclass
class AsyncRun:
    frames: np.ndarray      # (T+1, batch, ring)
    tau: np.ndarray         # (T+1, batch, ring)


def run_aca(tr: TransitionFunction, xi, schedule: np.ndarray) -> AsyncRun:
    """Apply ``tr`` at the scheduled sites; ``tau`` counts the actual state changes."""
    schedule = np.asarray(schedule, bool)
    T, batch, ring = schedule.shape
    cur = np.broadcast_to(np.asarray(xi, dtype=np.int64), (batch, ring)).copy()
    frames = np.empty((T + 1, batch, ring), np.int64)
    tau = np.zeros((T + 1, batch, ring), np.int64)
    frames[0] = cur
    for t in range(T):
        nxt = update_sites(tr, cur, schedule[t])
        tau[t + 1] = tau[t] + (nxt != cur)
        frames[t + 1] = cur = nxt
    return AsyncRun(frames, tau)


def reference_history(tr: TransitionFunction, xi, T: int):
    """``zeta(x, u)`` from the synchronous run; ``-1`` marks values never reached."""
    run = run_aca(tr, xi, schedule_all(len(xi), T))
    f, tau = run.frames[:, 0], run.tau[:, 0]
    ring = len(xi)
    zeta = np.full((T + 1, ring), -1, np.int64)
    for x in range(ring):
        zeta[tau[:, x], x] = f[:, x]   # tau is nondecreasing; first arrival and later equal
    return zeta


@dataclass
class HistoryVerdict:
    holds: bool
    counterexample: dict | None = None
    checked_schedules: int = 0


def check_invariant_histories(tr: TransitionFunction, xi, schedules: np.ndarray) -> HistoryVerdict:
    """Check ``eta(x,t) == zeta(x, tau(x,t))`` for every schedule in the batch."""
    T, batch, ring = schedules.shape
    zeta = reference_history(tr, xi, T)
    run = run_aca(tr, xi, schedules)
    ref = zeta[run.tau, np.arange(ring)]
    bad = ref != run.frames
    if bad.any():
        t, b, x = map(int, np.argwhere(bad)[0])
        return HistoryVerdict(False, dict(schedule=b, x=x, t=t, eta=int(run.frames[t, b, x]),
                                          tau=int(run.tau[t, b, x]),
                                          zeta=int(ref[t, b, x])), batch)
    return HistoryVerdict(True, None, batch)


def schedules_csv(schedule: np.ndarray, which: int = 0) -> str:
    """CSV with columns ``t, sites`` (space-separated site list)."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", "sites"])
    for t in range(schedule.shape[0]):
        w.writerow([t, " ".join(str(int(x)) for x in np.nonzero(schedule[t, which])[0])])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# Variable-period runs


@dataclass
class VariablePeriodRun:
    decoded: np.ndarray             # eta2[s, x] for s <= complete_steps
    complete_steps: int             # largest s reached by every cell
    switch_times: list = field(default_factory=list)   # per cell: times of effective switches
    partial: bool = False
    events: int = 0


def run_variable_period(lift: MarchingLift, xi2, T_lo: float, T_hi: float, horizon: float,
                        rng: np.random.Generator, steps: int | None = None,
                        sampler: str = "uniform") -> VariablePeriodRun:
    """Event-driven run: every cell switches at the end of each dwell period.

    Dwell periods are drawn uniformly from ``[T_lo, T_hi]`` (or exponential
    with mean ``(T_lo+T_hi)/2``).  A switch reads the neighbors' current
    states.  Simultaneous switches are processed in order of cell index.
    The decoded trajectory is ``eta2(x, s) = eta1(x, sigma(x, s)).Cur`` where
    ``sigma(x, s)`` is the time of the ``s``-th effective switch of ``x``.
    """
    if not 0 < T_lo <= T_hi:
        raise AsyncError("need 0 < T_lo <= T_hi")
    ring = len(xi2)
    state = [int(v) for v in lift_config(lift, xi2)]
    hist = [[lift.pack(int(v))] for v in xi2]
    times = [[0.0] for _ in range(ring)]

    def dwell():
        if sampler == "uniform":
            return T_lo if T_lo == T_hi else float(rng.uniform(T_lo, T_hi))
        if sampler == "exponential":
            return float(rng.exponential((T_lo + T_hi) / 2))
        raise AsyncError(f"unknown sampler {sampler!r}")

    heap = [(dwell(), x) for x in range(ring)]
    heapq.heapify(heap)
    events = 0
    while heap:
        t, x = heapq.heappop(heap)
        if t > horizon:
            break
        if steps is not None and min(len(h) for h in hist) > steps:
            break
        events += 1
        new = lift(state[(x - 1) % ring], state[x], state[(x + 1) % ring])
        if new != state[x]:
            state[x] = new
            hist[x].append(new)
            times[x].append(t)
        heapq.heappush(heap, (t + dwell(), x))
    S = min(len(h) for h in hist) - 1
    if steps is not None:
        S = min(S, steps)
    partial = steps is not None and S < steps
    dec = np.array([[hist[x][s] for x in range(ring)] for s in range(S + 1)], np.int64)
    return VariablePeriodRun(cur_of(lift, dec), S, times, partial, events)


def run_ca(tr2: TransitionFunction, xi2, steps: int) -> np.ndarray:
    """Direct synchronous run of ``tr2`` (the oracle for decoded runs)."""
    out = np.empty((steps + 1, len(xi2)), np.int64)
    out[0] = xi2
    for s in range(steps):
        out[s + 1] = _apply(tr2, out[s])
    return out
