"""Perturbations, damage bookkeeping and memory / mixing estimators.

A perturbed step first computes the rule's value at every cell and then,
independently per cell, replaces it with probability ``epsilon`` by a value
chosen by the adversary.  Only product-form adversaries are provided.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .core import CAError, FieldMap, Trajectory, TransitionFunction, TransitionMatrix
from .rng import generator, trial_generators
from .toom import toom_step

ADVERSARIES = ("uniform-wrong", "bitflip-random", "stuck-at", "callback")


class FaultModelError(CAError):
    code = "fault-model"


@dataclass(frozen=True)
class FaultModel:
    epsilon: float
    adversary: str = "uniform-wrong"
    stuck: int | None = None
    callback: Callable | None = None
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.epsilon <= 1.0:
            raise FaultModelError(f"epsilon {self.epsilon} outside [0, 1]")
        if self.adversary not in ADVERSARIES:
            raise FaultModelError(f"unknown adversary {self.adversary!r}")
        if self.adversary == "stuck-at" and self.stuck is None:
            raise FaultModelError("stuck-at needs a state")
        if self.adversary == "callback" and self.callback is None:
            raise FaultModelError("callback adversary needs a function")

    def check_alphabet(self, capacity: int):
        if self.adversary == "stuck-at" and not 0 <= self.stuck < (1 << capacity):
            raise FaultModelError(f"stuck-at state {self.stuck} not in the alphabet")


def adversary_values(fm: FaultModel, correct: np.ndarray, capacity: int,
                     rng: np.random.Generator, sites=None) -> np.ndarray:
    """Replacement values for the faulty cells whose rule values are ``correct``."""
    correct = np.asarray(correct, dtype=np.int64)
    n = 1 << capacity
    if fm.adversary == "uniform-wrong":
        if n == 2:
            return 1 - correct
        v = rng.integers(0, n - 1, size=correct.shape)
        return v + (v >= correct)
    if fm.adversary == "bitflip-random":
        return correct ^ (np.int64(1) << rng.integers(0, capacity, size=correct.shape))
    if fm.adversary == "stuck-at":
        return np.full(correct.shape, fm.stuck, dtype=np.int64)
    sites = range(correct.size) if sites is None else sites
    return np.array([fm.callback(int(x), int(c), rng) for x, c in zip(sites, correct.ravel())],
                    dtype=np.int64).reshape(correct.shape)


def perturb(values: np.ndarray, fm: FaultModel, capacity: int, rng: np.random.Generator):
    """Apply the fault model to an array of rule outputs; returns (new, fault mask)."""
    values = np.asarray(values, dtype=np.int64)
    hit = rng.random(values.shape) < fm.epsilon
    out = values.copy()
    if hit.any():
        idx = np.nonzero(hit.ravel())[0]
        out.ravel()[idx] = adversary_values(fm, values.ravel()[idx], capacity, rng, sites=idx)
    return out, out != values


def perturbed_step(cfg: Sequence, tr: TransitionFunction, fm: FaultModel,
                   rng: np.random.Generator) -> tuple[tuple, list[int]]:
    """One step of the ε-perturbation; returns the new configuration and the deviating sites."""
    fm.check_alphabet(tr.capacity)
    m = len(cfg)
    exact = np.array([tr(cfg[(x - 1) % m], cfg[x], cfg[(x + 1) % m]) for x in range(m)],
                     dtype=np.int64)
    new, mask = perturb(exact, fm, tr.capacity, rng)
    return tuple(int(v) for v in new), [int(x) for x in np.nonzero(mask)[0]]


def perturbed_run(cfg, tr, fm: FaultModel, T: int, rng=None):
    """Run ``T`` perturbed steps; returns the trajectory and the set of fault points."""
    rng = generator(fm.seed, 0) if rng is None else rng
    traj = Trajectory(tr.alphabet, len(cfg), rng_seed=fm.seed)
    traj.append(cfg)
    faults = set()
    cur = tuple(cfg)
    for t in range(1, T + 1):
        cur, sites = perturbed_step(cur, tr, fm, rng)
        traj.append(cur)
        faults.update((x, t) for x in sites)
    return traj, faults


@dataclass(frozen=True)
class DamageSet:
    points: frozenset
    ring_size: int
    horizon: int

    def __post_init__(self):
        for x, t in self.points:
            if not (0 <= x < self.ring_size and 0 <= t <= self.horizon):
                raise ValueError(f"damage point {(x, t)} outside the trajectory")

    def __contains__(self, p):
        return p in self.points

    def __len__(self):
        return len(self.points)


def damage_of(traj: Trajectory, tr: TransitionFunction) -> DamageSet:
    """Points where a frame disagrees with the rule applied to the previous frame."""
    pts = set()
    m = traj.ring_size
    for t in range(1, len(traj)):
        prev, cur = traj.frames[t - 1], traj.frames[t]
        for x in range(m):
            if cur[x] != tr(prev[(x - 1) % m], prev[x], prev[(x + 1) % m]):
                pts.add((x, t))
    return DamageSet(frozenset(pts), m, len(traj) - 1)


def hoeffding_radius(trials: int, delta: float = 0.01) -> float:
    return math.sqrt(math.log(2.0 / delta) / (2.0 * trials))


# ---------------------------------------------------------------------------
# Restoration


@dataclass
class RestorationReport:
    estimate: float
    anchors: int
    radius: float
    window: tuple


def restoration_estimate(fm: FaultModel, tr: TransitionFunction, window: tuple[int, int],
                         trials: int = 100, seed: int | None = None,
                         delta: float = 0.01) -> RestorationReport:
    """Estimate P(damage meets (x,t)+V | no damage in the earlier part of (x,t)+2V).

    ``window = (B_span, T_span)``: V covers ``B_span`` cells centred on the
    anchor and the ``T_span`` steps starting at the anchor time.  The
    doubled window 2V has twice both spans around the same centre; its part
    strictly before the anchor time is the conditioning event.  Every site
    of each run is used as an anchor.
    """
    b_span, t_span = window
    if b_span < 1 or t_span < 1:
        raise CAError("degenerate window")
    if trials < 100:
        raise CAError("restoration_estimate needs at least 100 trials")
    seed = fm.seed if seed is None else seed
    m = max(8, 4 * b_span)
    t0 = t_span  # earlier half of 2V spans [t0 - t_span, t0)
    T = t0 + t_span
    lo = -(b_span // 2)
    hits = good = 0
    for trial, rng in enumerate(trial_generators(seed, trials)):
        cfg = np.zeros(m, dtype=np.int64)
        dmg = np.zeros((T + 1, m), dtype=bool)
        for t in range(1, T + 1):
            exact = tr.vectorized(np.roll(cfg, 1), cfg, np.roll(cfg, -1))
            cfg, mask = perturb(exact, fm, tr.capacity, rng)
            dmg[t] = mask
        for x in range(m):
            cols = [(x + lo + d) % m for d in range(b_span)]
            cols2 = [(x + 2 * lo + d) % m for d in range(2 * b_span)]
            earlier = dmg[t0 - t_span:t0][:, cols2].any()
            if earlier:
                continue
            good += 1
            hits += bool(dmg[t0:t0 + t_span][:, cols].any())
    est = hits / good if good else float("nan")
    return RestorationReport(est, good, hoeffding_radius(max(good, 1), delta), (b_span, t_span))


# ---------------------------------------------------------------------------
# Retention


@dataclass
class RetentionReport:
    field: str
    start: int
    probes: list            # [(site, t)]
    p_hat: np.ndarray       # p̂ of the start value at each probe
    trials: int
    radius: float
    delta: float


@dataclass
class RetentionResult:
    reports: tuple
    threshold: float
    retains: bool

    @property
    def min_p(self) -> float:
        return float(min(r.p_hat.min() for r in self.reports))


def probe_grid(m: int, T: int, k: int = 5, two_d: bool = False):
    sites = [(i * m) // k for i in range(k)]
    times = [max(1, round((i + 1) * T / k)) for i in range(k)]
    if two_d:
        sites = [(s, s) for s in sites]
    return [(s, t) for t in times for s in sites]


def _field_values(states: np.ndarray, fmap: FieldMap | None, name: str) -> np.ndarray:
    if fmap is None or name in ("All", None):
        return states
    out = np.zeros_like(states)
    for k, i in enumerate(fmap.indices(name)):
        out |= ((states >> i) & 1) << k
    return out


def retention_experiment(dynamics, fm: FaultModel, field_name: str, xi0, xi1, T: int,
                         trials: int, seed: int | None = None, fmap: FieldMap | None = None,
                         delta: float = 0.01, k: int = 5) -> RetentionResult:
    """Does the perturbed dynamics remember the initial value of a field?

    ``dynamics`` is a ``TransitionFunction`` (ring of ``len(xi0)`` cells) or
    the string ``"toom"`` (torus; ``xi0``/``xi1`` are then square arrays).
    Each start is run for ``trials`` independent perturbed trials, and the
    fraction of trials showing the start's field value is recorded at a
    5 x 5 grid of (site, time) probes.
    """
    seed = fm.seed if seed is None else seed
    toom = isinstance(dynamics, str)
    if toom and dynamics != "toom":
        raise ValueError(f"unknown dynamics {dynamics!r}")
    capacity = 1 if toom else dynamics.capacity
    fm.check_alphabet(capacity)
    reports = []
    radius = hoeffding_radius(trials, delta)
    for start, xi in ((0, xi0), (1, xi1)):
        xi = np.asarray(xi, dtype=np.int64)
        m = xi.shape[0]
        probes = probe_grid(m, T, k, two_d=toom)
        by_time: dict[int, list] = {}
        for i, (s, t) in enumerate(probes):
            by_time.setdefault(t, []).append((i, s))
        counts = np.zeros(len(probes))
        rngs = trial_generators(seed, trials, stream=start)
        state = np.broadcast_to(xi, (trials,) + xi.shape).copy()
        for t in range(1, T + 1):
            if toom:
                exact = toom_step(state).astype(np.int64)
            else:
                exact = dynamics.vectorized(np.roll(state, 1, axis=-1), state,
                                            np.roll(state, -1, axis=-1))
            for j, rng in enumerate(rngs):
                state[j], _ = perturb(exact[j], fm, capacity, rng)
            if t in by_time:
                vals = _field_values(state, fmap, field_name)
                for i, s in by_time[t]:
                    col = vals[(slice(None),) + (tuple(s) if toom else (s,))]
                    counts[i] = np.count_nonzero(col == start)
        reports.append(RetentionReport(field_name, start, probes, counts / trials, trials,
                                       radius, delta))
    threshold = 2.0 / 3.0 + radius
    retains = all(r.p_hat.min() > threshold for r in reports)
    return RetentionResult(tuple(reports), threshold, retains)


# ---------------------------------------------------------------------------
# Relaxation time


@dataclass
class RelaxationReport:
    r_hat: int | None       # None means "r̂ > horizon"
    curve: np.ndarray       # d̂(t) for t = 0..horizon (possibly truncated at r̂)
    samples: int
    window: int
    delta: float
    p0_hat: np.ndarray = field(default=None)
    p1_hat: np.ndarray = field(default=None)

    def describe(self) -> str:
        return f"r_hat={self.r_hat}" if self.r_hat is not None else \
            f"r_hat > {len(self.curve) - 1}"


def _window_codes(state: np.ndarray, n: int, n_states: int) -> np.ndarray:
    code = np.zeros_like(state)
    for d in range(-n, n + 1):
        code = code * n_states + np.roll(state, -d, axis=-1)
    return code.ravel()


def variation_distance(a: np.ndarray, b: np.ndarray, support: int) -> float:
    pa = np.bincount(a, minlength=support) / a.size
    pb = np.bincount(b, minlength=support) / b.size
    return float(np.abs(pa - pb).sum())


def relaxation_estimate(dynamics, m: int, n: int, delta: float, horizon: int, trials: int = 200,
                        seed: int = 0, fm: FaultModel | None = None,
                        stop_early: bool = True) -> RelaxationReport:
    """Estimate the relaxation time ``r_m(n, delta)`` on a ring of ``m`` cells.

    ``dynamics`` is a ``TransitionMatrix`` or a ``TransitionFunction``
    (perturbed by ``fm`` if given).  The two starts are all-0 and all-1.
    Window distributions over ``2n+1`` consecutive cells are pooled over
    all ring positions and trials (translation invariance), and ``d̂`` is
    their plug-in L1 distance.
    """
    if n > (m - 1) / 2:
        raise ValueError("window n must satisfy n <= (m-1)/2")
    if 2 * n + 1 > 3:
        raise ValueError("windows are capped at 3 cells")
    if isinstance(dynamics, TransitionMatrix):
        n_states, capacity = dynamics.n, None
    else:
        capacity = dynamics.capacity
        n_states = 1 << capacity
    support = n_states ** (2 * n + 1)
    states = [np.zeros((trials, m), dtype=np.int64), np.ones((trials, m), dtype=np.int64)]
    rngs = [trial_generators(seed, trials, stream=s) for s in (0, 1)]
    curve, p0, p1 = [2.0 if n_states > 1 else 0.0], [1.0], [1.0]
    r_hat = None
    for t in range(1, horizon + 1):
        for s in (0, 1):
            st = states[s]
            left, right = np.roll(st, 1, axis=1), np.roll(st, -1, axis=1)
            for j, rng in enumerate(rngs[s]):
                if capacity is None:
                    st[j] = dynamics.sample(left[j], st[j], right[j], rng.random(m))
                else:
                    exact = dynamics.vectorized(left[j], st[j], right[j])
                    st[j] = exact if fm is None else perturb(exact, fm, capacity, rng)[0]
        d = variation_distance(_window_codes(states[0], n, n_states),
                               _window_codes(states[1], n, n_states), support)
        curve.append(d)
        p0.append(float(np.mean(states[0] == 0)))
        p1.append(float(np.mean(states[1] == 1)))
        if d < delta and r_hat is None:
            r_hat = t
            if stop_early:
                break
    return RelaxationReport(r_hat, np.array(curve), trials * m, n, delta, np.array(p0),
                            np.array(p1))


# ---------------------------------------------------------------------------
# CSV output

CSV_COLUMNS = ("experiment", "seed", "t", "site", "p0_hat", "p1_hat", "d_hat")


def _fmt(v):
    if v is None or v == "":
        return ""
    if isinstance(v, float):
        return f"{v:.6f}"
    return str(v)


def metrics_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in rows:
        w.writerow([_fmt(r.get(c)) for c in CSV_COLUMNS])
    return buf.getvalue()


def retention_rows(result: RetentionResult, experiment: str, seed: int):
    r0, r1 = result.reports
    rows = []
    for i, (site, t) in sorted(enumerate(r0.probes), key=lambda p: (p[1][1], str(p[1][0]))):
        site_s = "x".join(map(str, site)) if isinstance(site, tuple) else str(site)
        rows.append({"experiment": experiment, "seed": seed, "t": t, "site": site_s,
                     "p0_hat": float(r0.p_hat[i]), "p1_hat": float(r1.p_hat[i]), "d_hat": ""})
    return rows


def relaxation_rows(rep: RelaxationReport, experiment: str, seed: int):
    return [{"experiment": experiment, "seed": seed, "t": t, "site": "pooled",
             "p0_hat": float(rep.p0_hat[t]), "p1_hat": float(rep.p1_hat[t]),
             "d_hat": float(d)} for t, d in enumerate(rep.curve)]
