"""Colony block simulation: a host CA whose colonies of ``Q`` cells simulate one cell each.

The host is simulated in vectorized form: every host field is an integer
array of shape ``(batch, ncol * Q)``, so many independent runs (different
simulated rules or different fault schedules) advance together.

Schedule of the basic variant (``U = 2Q + 3``; ``a`` is the Age)::

    a = 0            post Info on Mail[1.1] and Mail[-1.1]; Cpt.Input.0 := Info
    a = 1 .. 2Q      move mail; land matching mail into Cpt.Input.l / Cpt.Input.r
    a = 2Q + 1       Eval: Cpt.Output := tr2(left, own, right)   (native, colony-wide)
    a = U - 1        Update: Info := Cpt.Output

The single-fault-tolerant variant keeps three copies of the simulated state
in thirds of the Info track (copy ``j`` of bit ``i`` at cell ``j*T + i``,
``T = Q // 3``) and runs a Refresh stage and three Retrieve+Eval phases,
each ``2Q + 2`` steps, then copies Hold into Info (``U = 8Q + 9``):

    Refresh   post Info on Mail[0.1] and Mail[-0.1]; land the two other copies
              of the own bit; Info := majority of the three
    phase j   post Info on Mail[1.1] and Mail[-1.1]; land the neighbors' full
              Info tracks; Eval votes each argument over its three copies and
              writes the result into third j of Hold
    a = U-1   Info := Hold

Before acting, an ftol cell repairs its Addr and Age from the values its
neighbors imply.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .core import VAC, CAError, FieldMap, TransitionFunction

MAIL_IND = (-1.1, -0.1, 0.1, 1.1)
_K = {k: n for n, k in enumerate(MAIL_IND)}
NORMAL, UNDEF = 1, 0
_NB_CODE = {0: 0, 1: 1, -1: 2}      # Fromnb stored in two bits; 3 never matches
CPT_FIELDS = ("Cpt.Input.l", "Cpt.Input.0", "Cpt.Input.r", "Cpt.Output")


class ColonyError(CAError):
    code = "colony-bound"


def _bits(n: int) -> int:
    return max(1, math.ceil(math.log2(n)))


# ---------------------------------------------------------------------------
# Layout


@dataclass(frozen=True)
class ColonyLayout:
    Q: int
    U: int
    b: int                      # bits of a simulated state
    variant: str = "basic"      # "basic" | "ftol"

    @property
    def T(self) -> int:
        return self.Q // 3

    @staticmethod
    def min_U(Q: int, variant: str = "basic") -> int:
        return 2 * Q + 3 if variant == "basic" else 4 * (2 * Q + 2) + 1

    @staticmethod
    def min_Q(b: int, variant: str = "basic") -> int:
        return b if variant == "basic" else 3 * b

    def violations(self) -> list[str]:
        out = []
        if self.variant not in ("basic", "ftol"):
            out.append(f"unknown variant {self.variant!r}")
            return out
        if self.Q < 2:
            out.append("Colony Size Lower Bound: Q >= 2")
        if self.Q < self.min_Q(self.b, self.variant):
            need = "b" if self.variant == "basic" else "3b"
            out.append(f"Colony Size Lower Bound: Q >= {need} = {self.min_Q(self.b, self.variant)}"
                       f" fails for Q = {self.Q}")
        if self.U < self.min_U(self.Q, self.variant):
            out.append(f"Work Period Lower Bound: U >= {self.min_U(self.Q, self.variant)} fails "
                       f"for U = {self.U}")
        if self.capacity > 62:
            out.append(f"Cell Capacity: {self.capacity} bits exceed the 62-bit packing")
        return out

    def check(self):
        bad = self.violations()
        if bad:
            raise ColonyError("; ".join(bad))
        return self

    @property
    def widths(self) -> list[tuple[str, int]]:
        a = _bits(self.Q)
        out = [("Addr", a), ("Age", _bits(self.U)), ("Info", 1)]
        for k in MAIL_IND:
            out += [(f"Mail[{k}].Fromaddr", a), (f"Mail[{k}].Fromnb", 2),
                    (f"Mail[{k}].Info", 1), (f"Mail[{k}].Status", 1)]
        out += [(f, 1) for f in CPT_FIELDS]
        if self.variant == "ftol":
            out.append(("Hold", 1))
        return out

    @property
    def capacity(self) -> int:
        return sum(w for _, w in self.widths)

    @property
    def fieldmap(self) -> FieldMap:
        return FieldMap.from_layout(self.widths)

    # step numbers of the schedule
    def phase_base(self, j: int) -> int:
        return (2 * self.Q + 2) * (j + 1)

    @property
    def eval_ages(self) -> list[int]:
        if self.variant == "basic":
            return [2 * self.Q + 1]
        return [self.phase_base(j) + 2 * self.Q + 1 for j in range(3)]


# ---------------------------------------------------------------------------
# Host state


@dataclass
class HostState:
    """All host fields of a batch of rings, as arrays of shape ``(batch, M)``."""

    f: dict
    mail: dict          # "fa", "nb", "info", "st" -> arrays of shape (4, batch, M)

    def copy(self) -> "HostState":
        return HostState({k: v.copy() for k, v in self.f.items()},
                         {k: v.copy() for k, v in self.mail.items()})

    @property
    def shape(self):
        return self.f["Addr"].shape

    def pack(self, lay: ColonyLayout) -> np.ndarray:
        """Packed host states (int64), for dumps, digests and ``decode_state``."""
        fm = lay.fieldmap
        out = np.zeros(self.shape, np.int64)
        for name, _ in lay.widths:
            if name.startswith("Mail["):
                k = float(name[5:name.index("]")])
                sub = name.split(".")[-1]
                key = {"Fromaddr": "fa", "Fromnb": "nb", "Info": "info", "Status": "st"}[sub]
                v = self.mail[key][_K[k]]
            else:
                v = self.f[name]
            out |= v.astype(np.int64) << fm.indices(name)[0]
        return out

    @classmethod
    def unpack(cls, lay: ColonyLayout, packed) -> "HostState":
        fm = lay.fieldmap
        packed = np.asarray(packed, np.int64)
        f, mail = {}, {k: np.zeros((4,) + packed.shape, np.int64) for k in ("fa", "nb", "info",
                                                                          "st")}
        for name, w in lay.widths:
            v = (packed >> fm.indices(name)[0]) & ((1 << w) - 1)
            if name.startswith("Mail["):
                k = float(name[5:name.index("]")])
                sub = name.split(".")[-1]
                mail[{"Fromaddr": "fa", "Fromnb": "nb", "Info": "info", "Status": "st"}[sub]][
                    _K[k]] = v
            else:
                f[name] = v
        return cls(f, mail)


def encode(lay: ColonyLayout, values) -> HostState:
    """``phi_*``: each simulated state becomes a colony.

    Info carries the state's bits (three times in the ftol variant), Cpt,
    Hold and the mail tracks are all 1s, Age is 0 and cell ``i`` of each
    colony gets ``Addr = i``.
    """
    values = np.atleast_2d(np.asarray(values, np.int64))
    B, ncol = values.shape
    Q = lay.Q
    M = ncol * Q
    addr = np.tile(np.arange(Q), ncol)[None, :].repeat(B, 0)
    info = np.zeros((B, ncol, Q), np.int64)
    copies = 1 if lay.variant == "basic" else 3
    for j in range(copies):
        for i in range(lay.b):
            info[:, :, j * lay.T + i] = (values >> i) & 1
    f = {"Addr": addr, "Age": np.zeros((B, M), np.int64), "Info": info.reshape(B, M)}
    for name in CPT_FIELDS:
        f[name] = np.ones((B, M), np.int64)
    if lay.variant == "ftol":
        f["Hold"] = np.ones((B, M), np.int64)
    mail = {"fa": np.full((4, B, M), (1 << _bits(Q)) - 1, np.int64),
            "nb": np.full((4, B, M), 3, np.int64),
            "info": np.ones((4, B, M), np.int64), "st": np.ones((4, B, M), np.int64)}
    return HostState(f, mail)


def _vote_bits(track: np.ndarray, lay: ColonyLayout) -> np.ndarray:
    """Bitwise majority of the three copies on a ``(..., Q)`` track -> ints."""
    T, b = lay.T, lay.b
    c = [track[..., j * T:j * T + b] for j in range(3)]
    maj = (c[0] + c[1] + c[2]) >= 2
    return (maj.astype(np.int64) << np.arange(b)).sum(-1)


def _read_bits(track: np.ndarray, b: int) -> np.ndarray:
    return (track[..., :b].astype(np.int64) << np.arange(b)).sum(-1)


def decode(lay: ColonyLayout, st: HostState, strict: bool | None = None) -> np.ndarray:
    """``Phi^*`` on every colony: array ``(batch, ncol)`` with -1 for Vac."""
    B, M = st.shape
    ncol = M // lay.Q
    addr = st.f["Addr"].reshape(B, ncol, lay.Q)
    info = st.f["Info"].reshape(B, ncol, lay.Q)
    ramp = addr == np.arange(lay.Q)
    if lay.variant == "basic":
        ok = ramp.all(-1)
        val = _read_bits(info, lay.b)
    else:
        ok = 3 * ramp.sum(-1) > 2 * lay.Q
        val = _vote_bits(info, lay)
    return np.where(ok, val, -1)


def decode_state(lay: ColonyLayout, snapshot):
    """Decode one colony given as ``Q`` packed host states; ``VAC`` on rejection."""
    snap = np.asarray(snapshot, np.int64)
    if snap.shape != (lay.Q,):
        raise ColonyError(f"a colony snapshot has {lay.Q} cells")
    v = int(decode(lay, HostState.unpack(lay, snap[None, :]))[0, 0])
    return VAC if v < 0 else v


# ---------------------------------------------------------------------------
# Mail mechanics


def _roll(x, s):
    return np.roll(x, s, axis=-1)


def move_mail(mail: dict, addr: np.ndarray, Q: int) -> dict:
    """Move every track one cell in its direction; endcells hand over to the peer track.

    At a colony's cell 0, Mail[0.1] receives the left colony's Mail[1.1] and
    Mail[1.1] becomes Undef; leftward tracks mirror this at cell ``Q - 1``.
    """
    first = addr == 0
    last = addr == Q - 1
    out = {}
    for key, arr in mail.items():
        undef = 0
        new = np.empty_like(arr)
        new[_K[0.1]] = np.where(first, _roll(arr[_K[1.1]], 1), _roll(arr[_K[0.1]], 1))
        new[_K[1.1]] = np.where(first, undef, _roll(arr[_K[1.1]], 1))
        new[_K[-0.1]] = np.where(last, _roll(arr[_K[-1.1]], -1), _roll(arr[_K[-0.1]], -1))
        new[_K[-1.1]] = np.where(last, undef, _roll(arr[_K[-1.1]], -1))
        out[key] = new
    return out


def post(mail: dict, k: float, where: np.ndarray, fromaddr, fromnb: int, info) -> None:
    n = _K[k]
    mail["fa"][n] = np.where(where, fromaddr, mail["fa"][n])
    mail["nb"][n] = np.where(where, _NB_CODE[fromnb], mail["nb"][n])
    mail["info"][n] = np.where(where, info, mail["info"][n])
    mail["st"][n] = np.where(where, NORMAL, mail["st"][n])


def arriving(mail: dict, l: float, fromnb: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(Normal-and-tag-matching mask, Fromaddr, Info) of track ``l``."""
    n = _K[l]
    ok = (mail["st"][n] == NORMAL) & (mail["nb"][n] == _NB_CODE[fromnb])
    return ok, mail["fa"][n], mail["info"][n]


# ---------------------------------------------------------------------------
# The simulator


def _tables(tr2, b: int, batch: int) -> np.ndarray:
    trs = tr2 if isinstance(tr2, (list, tuple)) else [tr2] * batch
    if len(trs) != batch:
        raise ColonyError("one simulated rule per batch entry")
    out = []
    for tr in trs:
        if tr.capacity != b:
            raise ColonyError(f"simulated rule has capacity {tr.capacity}, layout expects {b}")
        out.append(tr.table())
    return np.stack(out)


@dataclass
class ColonySimulator:
    layout: ColonyLayout
    tr2: object                       # a TransitionFunction or one per batch entry
    variant: str = "basic"
    log: list | None = None           # instrumentation: post/land events

    def step(self, st: HostState, tables: np.ndarray) -> HostState:
        lay = self.layout
        Q, U = lay.Q, lay.U
        f = st.f
        B, M = st.shape
        ncol = M // Q
        if lay.variant == "ftol":
            addr, age = repair(f["Addr"], f["Age"], Q, U)
        else:
            addr, age = f["Addr"], f["Age"]
        nf = {k: v.copy() for k, v in f.items()}
        mail = move_mail(st.mail, addr, Q)
        if lay.variant == "basic":
            self._basic(st, nf, mail, addr, age, tables, B, ncol)
        else:
            self._ftol(st, nf, mail, addr, age, tables, B, ncol)
        nf["Addr"] = addr
        nf["Age"] = (age + 1) % U
        return HostState(nf, mail)

    # -- shared pieces ---------------------------------------------------
    def _land_neighbors(self, st, nf, addr, active):
        """Land the neighbors' Info copies that carry this cell's address."""
        for l, i, dst in ((0.1, -1, "Cpt.Input.l"), (-0.1, 1, "Cpt.Input.r")):
            ok, fa, inf = arriving(st.mail, l, i)
            hit = active & ok & (fa == addr)
            nf[dst] = np.where(hit, inf, nf[dst])
            if self.log is not None and hit.any():
                for bb, x in zip(*np.nonzero(hit)):
                    self.log.append(("land", int(bb), int(x), l, int(fa[bb, x]), i,
                                     int(inf[bb, x])))

    def _post_neighbors(self, mail, addr, info, active):
        post(mail, 1.1, active, addr, -1, info)
        post(mail, -1.1, active, addr, 1, info)
        if self.log is not None and active.any():
            for bb, x in zip(*np.nonzero(active)):
                for k, i in ((1.1, -1), (-1.1, 1)):
                    self.log.append(("post", int(bb), int(x), k, int(addr[bb, x]), i,
                                     int(info[bb, x])))

    def _eval(self, tables, left, own, right):
        n = 1 << self.layout.b
        idx = (left * n + own) * n + right
        return np.take_along_axis(tables, idx.reshape(idx.shape[0], -1), 1).reshape(idx.shape)

    # -- basic -----------------------------------------------------------
    def _basic(self, st, nf, mail, addr, age, tables, B, ncol):
        lay = self.layout
        Q = lay.Q
        posting = age == 0
        self._post_neighbors(mail, addr, st.f["Info"], posting)
        nf["Cpt.Input.0"] = np.where(posting, st.f["Info"], nf["Cpt.Input.0"])
        self._land_neighbors(st, nf, addr, (age >= 1) & (age <= 2 * Q))
        ev = age == 2 * Q + 1
        if ev.any():
            r = lambda name: _read_bits(st.f[name].reshape(B, ncol, Q), lay.b)  # noqa: E731
            res = self._eval(tables, r("Cpt.Input.l"), r("Cpt.Input.0"), r("Cpt.Input.r"))
            bits = ((res[..., None] >> addr.reshape(B, ncol, Q)) & 1) * \
                (addr.reshape(B, ncol, Q) < lay.b)
            nf["Cpt.Output"] = np.where(ev, bits.reshape(B, -1), nf["Cpt.Output"])
        upd = age == lay.U - 1
        nf["Info"] = np.where(upd, st.f["Cpt.Output"], nf["Info"])

    # -- single-fault tolerant ------------------------------------------
    def _ftol(self, st, nf, mail, addr, age, tables, B, ncol):
        lay = self.layout
        Q, T = lay.Q, lay.T
        info = st.f["Info"]
        # Refresh stage
        posting = age == 0
        post(mail, 0.1, posting, addr, 0, info)
        post(mail, -0.1, posting, addr, 0, info)
        recv = (age >= 1) & (age <= 2 * Q) & (addr < 3 * T)
        third = addr // T
        lo_other = np.where(third == 0, 1, 0)
        for l in (0.1, -0.1):
            ok, fa, inf = arriving(st.mail, l, 0)
            hit = recv & ok & (fa < 3 * T) & (fa != addr) & (fa % T == addr % T)
            to_a = hit & (fa // T == lo_other)
            to_b = hit & (fa // T != lo_other)
            nf["Cpt.Input.l"] = np.where(to_a, inf, nf["Cpt.Input.l"])
            nf["Cpt.Input.r"] = np.where(to_b, inf, nf["Cpt.Input.r"])
        vote = age == 2 * Q + 1
        maj = (info + st.f["Cpt.Input.l"] + st.f["Cpt.Input.r"]) >= 2
        nf["Info"] = np.where(vote & (addr < 3 * T), maj.astype(np.int64), nf["Info"])
        # Three Retrieve + Eval phases
        for j in range(3):
            base = lay.phase_base(j)
            self._post_neighbors(mail, addr, info, age == base)
            self._land_neighbors(st, nf, addr, (age >= base + 1) & (age <= base + 2 * Q))
            ev = age == base + 2 * Q + 1
            if ev.any():
                sh = (B, ncol, Q)
                res = self._eval(tables, _vote_bits(st.f["Cpt.Input.l"].reshape(sh), lay),
                                 _vote_bits(info.reshape(sh), lay),
                                 _vote_bits(st.f["Cpt.Input.r"].reshape(sh), lay))
                a = addr.reshape(sh)
                pos = a - j * T
                inside = (pos >= 0) & (pos < T)
                bits = ((res[..., None] >> np.clip(pos, 0, None)) & 1) * inside * (pos < lay.b)
                w = ev & inside.reshape(B, -1)
                nf["Hold"] = np.where(w, bits.reshape(B, -1), nf["Hold"])
        upd = age == lay.U - 1
        nf["Info"] = np.where(upd, st.f["Hold"], nf["Info"])


def repair(addr: np.ndarray, age: np.ndarray, Q: int, U: int):
    """Addr/Age as restored from the neighbors before a cell acts.

    A value is kept if it agrees with what at least one neighbor implies;
    otherwise the cell adopts the left neighbor's implied value when both
    neighbors agree, and the right neighbor's implied value if they do not.
    """

    def fix(own, from_left, from_right):
        keep = (own == from_left) | (own == from_right)
        return np.where(keep, own, np.where(from_left == from_right, from_left, from_right))

    a = fix(addr, (_roll(addr, 1) + 1) % Q, (_roll(addr, -1) - 1) % Q)
    g = fix(age, _roll(age, 1), _roll(age, -1))
    return a, g


def build(layout: ColonyLayout, tr2, variant: str | None = None) -> ColonySimulator:
    variant = variant or layout.variant
    if variant != layout.variant:
        layout = ColonyLayout(layout.Q, layout.U, layout.b, variant)
    layout.check()
    return ColonySimulator(layout, tr2, variant)


# ---------------------------------------------------------------------------
# Runs


@dataclass
class Fault:
    period: int
    colony: int
    cell: int
    field: str
    value: int
    step: int          # applied to the state at time period*U + step, 1 <= step <= U
    batch: int = 0


FAULT_FIELDS = ("Info", "Addr", "Age") + CPT_FIELDS + ("Hold",)
FAULT_CSV_COLUMNS = ("period", "colony", "cell", "field", "value", "step")


@dataclass
class BlockRun:
    decoded: np.ndarray                 # (periods + 1, batch, ncol), -1 = Vac
    final: HostState
    thirds_bad: list = field(default_factory=list)   # per period: (batch, ncol, 3) bool
    frames: list = field(default_factory=list)


def run(sim: ColonySimulator, values, periods: int, faults=(), keep_frames: bool = False
        ) -> BlockRun:
    """Run ``periods`` work periods from ``encode(values)``; decode at every period boundary.

    A fault with ``value < 0`` flips the hit bit instead of setting it.
    """
    lay = sim.layout
    st = encode(lay, values)
    B, M = st.shape
    tables = _tables(sim.tr2, lay.b, B)
    by_time: dict[int, list[Fault]] = {}
    for flt in faults:
        if not 1 <= flt.step <= lay.U:
            raise ColonyError("fault step must lie in [1, U]")
        by_time.setdefault(flt.period * lay.U + flt.step, []).append(flt)
    decoded = [decode(lay, st)]
    thirds, frames = [], []
    for t in range(1, periods * lay.U + 1):
        st = sim.step(st, tables)
        for flt in by_time.get(t, ()):
            x = flt.colony * lay.Q + flt.cell
            arr = st.f[flt.field]
            arr[flt.batch, x] = 1 - arr[flt.batch, x] if flt.value < 0 else flt.value
        if lay.variant == "ftol" and t % lay.U == lay.U - 1:
            thirds.append(_thirds_state(lay, st, "Hold"))
        if keep_frames:
            frames.append(st.pack(lay))
        if t % lay.U == 0:
            decoded.append(decode(lay, st))
    return BlockRun(np.stack(decoded), st, thirds, frames)


def _thirds_state(lay: ColonyLayout, st: HostState, name: str) -> np.ndarray:
    """The three thirds of a track as ints, shape ``(batch, ncol, 3)``."""
    B, M = st.shape
    tr = st.f[name].reshape(B, M // lay.Q, lay.Q)
    return np.stack([_read_bits(tr[..., j * lay.T:], lay.b) for j in range(3)], -1)


def ca_oracle(tr2, values, periods: int) -> np.ndarray:
    """Direct run of the simulated CA, shape ``(periods + 1, batch, ncol)``."""
    values = np.atleast_2d(np.asarray(values, np.int64))
    B = values.shape[0]
    tables = _tables(tr2, (tr2[0] if isinstance(tr2, (list, tuple)) else tr2).capacity, B)
    n = int(round(tables.shape[1] ** (1 / 3)))
    out = [values]
    cur = values
    for _ in range(periods):
        idx = (np.roll(cur, 1, -1) * n + cur) * n + np.roll(cur, -1, -1)
        cur = np.take_along_axis(tables, idx, 1)
        out.append(cur)
    return np.stack(out)


# ---------------------------------------------------------------------------
# Fault schedules and the single-fault trial


def random_fault(lay: ColonyLayout, period: int, colony: int, rng: np.random.Generator,
                 fields=("Info", "Addr", "Age", "Cpt"), batch: int = 0) -> Fault:
    """One adversarial fault: a random step, cell and target, value always wrong.

    The target ``Cpt`` stands for one of the Cpt subfields or Hold.
    """
    kind = fields[int(rng.integers(len(fields)))]
    cell = int(rng.integers(lay.Q))
    step = int(rng.integers(1, lay.U + 1))
    if kind == "Cpt":
        names = CPT_FIELDS + (("Hold",) if lay.variant == "ftol" else ())
        kind = names[int(rng.integers(len(names)))]
    if kind == "Addr":
        width = _bits(lay.Q)
    elif kind == "Age":
        width = _bits(lay.U)
    else:
        width = 1
    # The value is chosen relative to the fault-free state at that moment,
    # which is cell-independent for Addr and Age.
    if kind == "Addr":
        value = (cell + 1 + int(rng.integers((1 << width) - 1))) % (1 << width)
    elif kind == "Age":
        value = (step % lay.U + 1 + int(rng.integers((1 << width) - 1))) % (1 << width)
    else:
        value = -1     # flip, resolved when applied
    return Fault(period, colony, cell, kind, value, step, batch)


def one_fault_per_period(lay: ColonyLayout, periods: int, ncol: int, rng: np.random.Generator,
                         fields=("Info", "Addr", "Age", "Cpt"), batch: int = 0) -> list[Fault]:
    return [random_fault(lay, p, c, rng, fields, batch) for p in range(periods)
            for c in range(ncol)]


def faults_csv(faults, with_trial: bool = False) -> str:
    """Columns period, colony, cell, field, value, step (value -1 = flip), plus trial."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(FAULT_CSV_COLUMNS + (("trial",) if with_trial else ()))
    for f in faults:
        row = [f.period, f.colony, f.cell, f.field, f.value, f.step]
        w.writerow(row + ([f.batch] if with_trial else []))
    return buf.getvalue()


def read_faults_csv(text: str, batch: int = 0) -> list[Fault]:
    rows = list(csv.DictReader(io.StringIO(text)))
    out = []
    for r in rows:
        if r["field"] not in FAULT_FIELDS:
            raise ColonyError(f"unknown fault field {r['field']!r}")
        out.append(Fault(int(r["period"]), int(r["colony"]), int(r["cell"]), r["field"],
                         int(r["value"]), int(r["step"]), int(r.get("trial") or batch)))
    return out


@dataclass
class FtolVerdict:
    passed: bool
    first_divergence: tuple | None          # (batch, colony, period)
    corrupted_thirds: np.ndarray            # (periods, batch, ncol) count of bad Hold thirds
    in_model: np.ndarray                    # (batch,) at most one fault per colony and period
    decoded: np.ndarray
    reference: np.ndarray


def run_ftol_trial(sim: ColonySimulator, values, periods: int, faults) -> FtolVerdict:
    """Compare a faulty run with the fault-free one, period by period."""
    lay = sim.layout
    if lay.variant != "ftol":
        raise ColonyError("run_ftol_trial needs the ftol variant")
    values = np.atleast_2d(np.asarray(values, np.int64))
    B, ncol = values.shape
    ref = run(sim, values, periods)
    got = run(sim, values, periods, faults)
    counts = np.zeros((B, ncol, periods), np.int64)
    for flt in faults:
        if 0 <= flt.period < periods:
            counts[flt.batch, flt.colony, flt.period] += 1
    in_model = (counts <= 1).all(axis=(1, 2))
    ref_next = ref.decoded[1:]                       # (periods, B, ncol)
    bad_thirds = np.stack([(th != ref_next[p][..., None]).sum(-1)
                           for p, th in enumerate(got.thirds_bad)]) if got.thirds_bad else \
        np.zeros((0, B, ncol), np.int64)
    diff = got.decoded != ref.decoded
    first = None
    if diff.any():
        p, b, c = map(int, np.argwhere(diff)[0])
        first = (b, c, p)
    return FtolVerdict(not diff.any(), first, bad_thirds, in_model, got.decoded, ref.decoded)


# ---------------------------------------------------------------------------
# Copy as a stand-alone behavior


@dataclass
class CopyResult:
    target: np.ndarray           # the F2 track after 2Q steps, shape (ncol * Q,)
    log: list                    # ("post"|"land", step, cell, track, Fromaddr, Fromnb, Info)
    steps: int


def copy_between_colonies(i: int, source: np.ndarray, a1: int, a2: int, n: int, Q: int,
                          ncol: int = 3, target: np.ndarray | None = None) -> CopyResult:
    """Every colony runs ``Copy(i, F1[a1..a1+n-1], F2[a2..a2+n-1])`` for ``2Q`` steps.

    ``i`` is the direction of the sending colony as seen by the receiver
    (-1: the left neighbor colony).  The sender posts on
    ``Mail[k]`` with ``k = -1.1 i`` (``0.1 sign(a2 - a1)`` when ``i = 0``),
    tagging the mail with its address and with ``Fromnb = i``; a receiver
    at address ``Addr`` lands the mail on ``Mail[0.1 sign(k)]`` whose tags
    satisfy ``Addr - a2 = Fromaddr - a1`` and ``Fromnb = i``.
    """
    M = ncol * Q
    F1 = np.asarray(source, np.int64).reshape(1, M)
    F2 = np.zeros((1, M), np.int64) if target is None else \
        np.asarray(target, np.int64).reshape(1, M).copy()
    log: list = []
    if n <= 0:
        return CopyResult(F2[0], log, 0)
    if not (0 <= a1 and a1 + n <= Q and 0 <= a2 and a2 + n <= Q):
        raise ColonyError("location outside the colony")
    addr = np.tile(np.arange(Q), ncol)[None, :]
    if i == 0 and a1 == a2:
        sel = (addr >= a1) & (addr < a1 + n)
        F2 = np.where(sel, F1, F2)
        return CopyResult(F2[0], log, 1)
    k = -1.1 * i if i != 0 else 0.1 * np.sign(a2 - a1)
    k = round(float(k), 1)
    l = round(0.1 * np.sign(k), 1)
    mail = {"fa": np.zeros((4, 1, M), np.int64), "nb": np.full((4, 1, M), 3, np.int64),
            "info": np.zeros((4, 1, M), np.int64), "st": np.zeros((4, 1, M), np.int64)}
    src = (addr >= a1) & (addr < a1 + n)
    post(mail, k, src, addr, i, F1)
    for x in np.nonzero(src[0])[0]:
        log.append(("post", 0, int(x), k, int(addr[0, x]), i, int(F1[0, x])))
    for step in range(1, 2 * Q + 1):
        ok, fa, inf = arriving(mail, l, i)
        hit = ok & (addr >= a2) & (addr < a2 + n) & (addr - a2 == fa - a1)
        F2 = np.where(hit, inf, F2)
        for x in np.nonzero(hit[0])[0]:
            log.append(("land", step, int(x), l, int(fa[0, x]), i, int(inf[0, x])))
        mail = move_mail(mail, addr, Q)
    return CopyResult(F2[0], log, 2 * Q)
