"""``lab``: run experiments from a key=value config, write CSV/renders and a manifest.

Usage::

    lab <subcommand> [args] [--config FILE] [--key value ...] [--seed N] [--out DIR]

Every subcommand has a fixed set of keys with defaults (``lab <sub> --help-keys``
lists them).  Unknown keys are rejected.  On a contract violation the last
line on stderr is ``lab-error: code=<code> message=<text>`` and the exit
status is 1 (2 for usage and config errors).
"""

from __future__ import annotations

import argparse
import csv
import io
import sys
import time
from fractions import Fraction
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__
from . import colony as C
from .asyncsim import (check_invariant_histories, is_commutative, lift_marching, run_ca,
                       run_variable_period, schedule_random, schedules_csv)
from .coding.frame import brc_amp_preset, frame_check, report_table
from .coding.hier import HierSystem, decode_payload, hier_decode, hier_encode
from .coding.rs import RSCode
from .core import CAError, TransitionMatrix, builtin, random_rule
from .faults import (FaultModel, metrics_csv, relaxation_estimate, relaxation_rows,
                     retention_experiment, retention_rows)
from .io import dump_spacetime, manifest, pgm, write_text
from .rng import generator
from .rulelang import RuleError, dump, parse
from .toom import toom_noisy_step


class LabError(Exception):
    def __init__(self, code: str, message: str, status: int = 1, files=None):
        super().__init__(message)
        self.code, self.status = code, status
        self.files = files      # partial outputs still worth writing


# Defaults double as the type of each key.  Subcommands listed in STOCHASTIC
# refuse to run without a seed.
DEFAULTS = {
    "toom-memory": dict(size=50, eps=0.01, T=10000, trials=20, delta=0.01, frames=4),
    "relax": dict(m=16, n=1, delta=0.1, horizon=100, trials=200, rule="coin", eps=0.0,
                  capacity=1),
    "blocksim": dict(Q=32, U=0, colonies=3, periods=5, rule="random", b=2, init=""),
    "ftol": dict(Q=32, U=0, colonies=3, periods=5, trials=1, rule="random", b=2,
                 faults="random", fields="Info,Addr,Age,Cpt"),
    "async": dict(mode="histories", ring=16, T=100, schedules=1000, p=0.5, U=3,
                  rule="random", T_lo=0.5, T_hi=1.0, steps=50, seeds=100, commute_ring=5),
    "hier": dict(Q="4,4,4", q="2,2,2", a="1,1,1", w1=2, N=0, payload="random"),
    "rs": dict(l=6, N=10, t=3, infile="", trials=2000),
    "frame": dict(c=100, eps="1e-100", K=10, R0="1", example=1),
    "rulecheck": dict(file="", golden=""),
}
STOCHASTIC = {"toom-memory", "relax", "blocksim", "ftol", "async", "hier"}


def _coerce(sub: str, key: str, raw):
    if key not in DEFAULTS[sub]:
        raise LabError("config", f"unknown key {key!r} for {sub}", 2)
    ref = DEFAULTS[sub][key]
    try:
        if isinstance(ref, bool):
            return raw.lower() in ("1", "true", "yes")
        if isinstance(ref, int):
            return int(raw)
        if isinstance(ref, float):
            return float(raw)
    except ValueError:
        raise LabError("config", f"{key}={raw!r} is not a {type(ref).__name__}", 2) from None
    return str(raw)


def read_config(path) -> dict:
    """Flat ``key=value`` lines; ``#`` starts a comment."""
    out = {}
    for n, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise LabError("config", f"{path}:{n}: expected key=value", 2)
        k, v = (s.strip() for s in line.split("=", 1))
        out[k] = v
    return out


def _overrides(extra: list[str]) -> dict:
    out, i = {}, 0
    while i < len(extra):
        tok = extra[i]
        if not tok.startswith("--"):
            raise LabError("config", f"unexpected argument {tok!r}", 2)
        if "=" in tok:
            k, v = tok[2:].split("=", 1)
            i += 1
        else:
            if i + 1 >= len(extra):
                raise LabError("config", f"{tok} needs a value", 2)
            k, v = tok[2:], extra[i + 1]
            i += 2
        out[k] = v
    return out


def build_config(sub: str, file_values: dict, overrides: dict) -> dict:
    cfg = dict(DEFAULTS[sub])
    for src in (file_values, overrides):
        for k, v in src.items():
            if k == "seed":
                continue
            cfg[k] = _coerce(sub, k, v)
    return cfg


# ---------------------------------------------------------------------------
# Helpers


def _rule(name: str, capacity: int, rng):
    if name == "random":
        return random_rule(capacity, rng)
    try:
        return builtin(name, capacity)
    except KeyError as e:
        raise LabError("config", str(e), 2) from None


def _ints(text: str) -> tuple:
    return tuple(int(v) for v in text.split(",") if v.strip())


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


# ---------------------------------------------------------------------------
# Subcommands.  Each returns (files: dict name -> text, summary lines).


def cmd_toom_memory(cfg, seed):
    m, T = cfg["size"], cfg["T"]
    fm = FaultModel(cfg["eps"], "uniform-wrong", seed=seed)
    zeros = np.zeros((m, m), np.int64)
    res = retention_experiment("toom", fm, "All", zeros, zeros + 1, T, cfg["trials"], seed,
                               delta=cfg["delta"])
    files = {"toom_memory.csv": metrics_csv(retention_rows(res, "toom-memory", seed))}
    # Frames of one extra noisy trial from the all-0 start, on its own stream.
    nframes = max(0, cfg["frames"])
    if nframes:
        marks = {max(1, round((i + 1) * T / nframes)) for i in range(nframes)}
        rng = generator(seed, 0, 7)
        g = np.zeros((1, m, m), np.uint8)
        for t in range(1, T + 1):
            g, _ = toom_noisy_step(g, cfg["eps"], [rng])
            if t in marks:
                files[f"toom_t{t:06d}.pgm"] = pgm(g[0].T[::-1], maxval=1)
    summary = [f"retains={res.retains}", f"min_p={res.min_p:.6f}",
               f"threshold={res.threshold:.6f}"]
    return files, summary


def cmd_relax(cfg, seed):
    rng = generator(seed, 0, 3)
    if cfg["rule"] == "coin":
        dyn = TransitionMatrix.coin()
        fm = None
    else:
        dyn = _rule(cfg["rule"], cfg["capacity"], rng)
        fm = FaultModel(cfg["eps"], seed=seed) if cfg["eps"] > 0 else None
    args = dict(n=cfg["n"], delta=cfg["delta"], horizon=cfg["horizon"], trials=cfg["trials"],
                seed=seed, fm=fm)
    rep = relaxation_estimate(dyn, cfg["m"], **args)
    rep2 = relaxation_estimate(dyn, 2 * cfg["m"], **args)
    files = {"relax.csv": metrics_csv(relaxation_rows(rep, "relax", seed))}
    summary = [f"m={cfg['m']} {rep.describe()}", f"m={2 * cfg['m']} {rep2.describe()}"]
    if rep.r_hat is not None and rep2.r_hat is not None:
        summary.append(f"uniform_forgetfulness_direction={rep.r_hat <= rep2.r_hat}")
    return files, summary


def _layout(cfg, variant):
    U = cfg["U"] or C.ColonyLayout.min_U(cfg["Q"], variant)
    lay = C.ColonyLayout(cfg["Q"], U, cfg["b"], variant)
    bad = lay.violations()
    if bad:
        raise LabError("colony-bound", "; ".join(bad))
    return lay


def cmd_blocksim(cfg, seed):
    rng = generator(seed, 0, 0)
    lay = _layout(cfg, "basic")
    tr = _rule(cfg["rule"], cfg["b"], rng)
    if cfg["init"]:
        vals = np.array([_ints(cfg["init"])])
    else:
        vals = rng.integers(0, 1 << cfg["b"], (1, cfg["colonies"]))
    run = C.run(C.build(lay, tr), vals, cfg["periods"])
    ref = C.ca_oracle(tr, vals, cfg["periods"])
    dec = run.decoded[:, 0]
    times = [p * lay.U for p in range(cfg["periods"] + 1)]
    files = {"decoded.txt": dump_spacetime(dec, times),
             "oracle.txt": dump_spacetime(ref[:, 0], times)}
    if not np.array_equal(dec, ref[:, 0]):
        p = int(np.argwhere((dec != ref[:, 0]).any(1))[0][0])
        raise LabError("blocksim-mismatch", f"decoded trajectory leaves CA(tr2) at period {p}",
                       files=files)
    return files, [f"Q={lay.Q} U={lay.U} periods={cfg['periods']} match=True"]


def cmd_ftol(cfg, seed):
    lay = _layout(cfg, "ftol")
    B, ncol, P = cfg["trials"], cfg["colonies"], cfg["periods"]
    trs, vals, faults = [], [], []
    fields = tuple(f for f in cfg["fields"].split(",") if f)
    for b in range(B):
        rng = generator(seed, b, 0)
        trs.append(_rule(cfg["rule"], cfg["b"], rng))
        vals.append(rng.integers(0, 1 << cfg["b"], ncol))
        if cfg["faults"] == "random":
            faults += C.one_fault_per_period(lay, P, ncol, generator(seed, b, 1), fields, b)
    if cfg["faults"] not in ("random", "none"):
        faults = C.read_faults_csv(Path(cfg["faults"]).read_text())
    v = C.run_ftol_trial(C.build(lay, trs), np.array(vals), P, faults)
    rows = []
    for p in range(P):
        for b in range(B):
            for c in range(ncol):
                rows.append([b, p, c, int(v.corrupted_thirds[p, b, c])])
    files = {"faults.csv": C.faults_csv(faults, with_trial=B > 1),
             "report.csv": _csv(["trial", "period", "colony", "bad_thirds"], rows),
             "decoded.txt": dump_spacetime(v.decoded[:, 0],
                                           [p * lay.U for p in range(P + 1)])}
    ok = (v.decoded == v.reference).all(axis=(0, 2))
    summary = [f"U={lay.U} trials={B} passed={int(ok.sum())} out_of_model={int((~v.in_model).sum())}"]
    if not v.passed:
        b, c, p = v.first_divergence
        label = "" if v.in_model[b] else " (out of model)"
        raise LabError("ftol-divergence", f"trial {b} colony {c} diverges at period {p}{label}",
                       files=files)
    return files, summary


def cmd_async(cfg, seed):
    rng = generator(seed, 0, 0)
    tr2 = _rule(cfg["rule"], 1, rng)
    lift = lift_marching(tr2, cfg["U"])
    ring = cfg["ring"]
    files, summary = {}, []
    if cfg["commute_ring"]:
        cv = is_commutative(lift, ring=cfg["commute_ring"])
        summary.append(f"commutative={cv.commutative} checked={cv.checked}")
        if not cv.commutative:
            raise LabError("not-commutative", f"witness {cv.witness}")
    xi2 = rng.integers(0, 2, ring)
    if cfg["mode"] == "histories":
        sch = schedule_random(ring, cfg["T"], cfg["p"], generator(seed, 0, 1), cfg["schedules"])
        hv = check_invariant_histories(lift, xi2, sch)
        files["schedules.csv"] = schedules_csv(sch)
        summary.append(f"invariant_histories={hv.holds} schedules={hv.checked_schedules}")
        if not hv.holds:
            raise LabError("history-violation", str(hv.counterexample))
    elif cfg["mode"] == "varperiod":
        ref = run_ca(tr2, xi2, cfg["steps"])
        good = 0
        for s in range(cfg["seeds"]):
            vp = run_variable_period(lift, xi2, cfg["T_lo"], cfg["T_hi"], horizon=1e9,
                                     rng=generator(seed, s, 2), steps=cfg["steps"])
            if s == 0:
                files["decoded.txt"] = dump_spacetime(vp.decoded)
            good += (not vp.partial) and np.array_equal(vp.decoded, ref)
        files["oracle.txt"] = dump_spacetime(ref)
        summary.append(f"decoded_equals_ca={good}/{cfg['seeds']}")
        if good != cfg["seeds"]:
            raise LabError("varperiod-mismatch", f"only {good} of {cfg['seeds']} seeds decode")
    else:
        raise LabError("config", f"unknown async mode {cfg['mode']!r}", 2)
    return files, summary


def cmd_hier(cfg, seed):
    try:
        sys_ = HierSystem(_ints(cfg["Q"]), _ints(cfg["a"]), _ints(cfg["q"]), cfg["w1"],
                          cfg["N"] or None)
    except ValueError as e:
        raise LabError("hier-property", str(e)) from None
    nvis = len(sys_.visible())
    top = 1 << cfg["w1"]
    if cfg["payload"] == "random":
        rho = generator(seed, 0, 0).integers(0, top, (1, nvis))
    elif cfg["payload"] == "exhaustive":
        rho = np.indices((top,) * nvis).reshape(nvis, -1).T
    else:
        bits = cfg["payload"]
        if len(bits) != nvis * cfg["w1"] or set(bits) - {"0", "1"}:
            raise LabError("config", f"payload needs {nvis * cfg['w1']} bits", 2)
        rho = np.array([[int(bits[i * cfg["w1"]:(i + 1) * cfg["w1"]][::-1], 2)
                         for i in range(nvis)]])
    xi = hier_encode(sys_, rho)
    back = decode_payload(sys_, xi[1])
    levels, ok = hier_decode(sys_, xi[1])
    tele = all(np.array_equal(levels[k], xi[k]) for k in range(1, sys_.K + 1))
    if not (np.array_equal(back, rho) and ok.all() and tele):
        raise LabError("hier-property", "payload does not read back from the level-1 encoding")
    text = "\n".join("".join(str((int(v) >> b) & 1) for v in r for b in range(cfg["w1"]))
                     for r in rho[:16]) + "\n"
    files = {"payload.txt": text, "xi1.txt": dump_spacetime(xi[1][:1])}
    return files, [f"K={sys_.K} visible={nvis} payloads={len(rho)} readback=True"]


def _read_words(path) -> list[list[int]]:
    words = []
    for line in Path(path).read_text().splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            words.append([int(s, 16) for s in line.split()])
    return words


def _fmt_words(words) -> str:
    return "".join(" ".join(format(s, "02x") for s in w) + "\n" for w in words)


def cmd_rs(cfg, seed, action):
    code = RSCode(cfg["l"], cfg["N"], cfg["t"])
    if action in ("encode", "decode"):
        if not cfg["infile"]:
            raise LabError("config", f"rs {action} needs --infile", 2)
        words = _read_words(cfg["infile"])
        if action == "encode":
            return {"encoded.txt": _fmt_words(code.encode(w) for w in words)}, \
                [f"encoded={len(words)}"]
        out, failed = [], 0
        for w in words:
            r = code.decode(w)
            failed += not r.ok
            out.append(r.info if r.ok else [])
        if failed:
            raise LabError("rs-uncorrectable", f"{failed} of {len(words)} words not decodable")
        return {"decoded.txt": _fmt_words(out)}, [f"decoded={len(words)}"]
    if action != "roundtrip":
        raise LabError("config", "rs action must be encode, decode or roundtrip", 2)
    rng = generator(seed, 0, 0)
    rows, bad = [], 0
    for n in range(cfg["trials"]):
        info = [int(v) for v in rng.integers(0, code.ctx.order + 1, code.k)]
        word = code.encode(info)
        e = int(rng.integers(0, code.t + 1))
        pos = rng.choice(code.N, e, replace=False)
        noisy = list(word)
        for p in pos:
            noisy[p] ^= int(rng.integers(1, code.ctx.order + 1))
        r = code.decode(noisy)
        good = r.ok and r.info == info
        bad += not good
        rows.append([n, e, int(good)])
    files = {"roundtrip.csv": _csv(["trial", "errors", "corrected"], rows)}
    if bad:
        raise LabError("rs-roundtrip", f"{bad} of {cfg['trials']} words not corrected")
    return files, [f"roundtrip={cfg['trials']} all_corrected=True"]


def cmd_frame(cfg, seed):
    fp = brc_amp_preset(cfg["c"], Fraction(cfg["eps"]), cfg["K"], Fraction(cfg["R0"]))
    rep = frame_check(fp, example=bool(cfg["example"]))
    lines = [report_table(rep), ""]
    lines += [f"violation: {v}" for v in rep.violations] or ["violations: none"]
    lines.append("exp_error: " + " ".join(f"{k}:{int(h)}" for k, h in rep.exp_error))
    if rep.superex is not None:
        lines.append("superex: " + " ".join(f"{k}:{int(h)}" for k, h in rep.superex))
    cols = list(rep.rows[0]) if rep.rows else []
    files = {"frame.txt": "\n".join(lines) + "\n",
             "frame.csv": _csv(cols, [[r[c] for c in cols] for r in rep.rows])}
    if not rep.ok or not rep.eps_bounds_hold:
        raise LabError("frame-violation",
                       f"{len(rep.violations)} violations; first: "
                       f"{rep.violations[0] if rep.violations else 'eps bound'}",
                       files=files)
    return files, [f"violations=0 K={fp.K}"]


def shipped(name: str) -> str:
    return (resources.files("relca") / "data" / name).read_text()


def cmd_rulecheck(cfg, seed, path=None):
    path = path or cfg["file"]
    if not path:
        raise LabError("config", "rulecheck needs a .rule file", 2)
    text = Path(path).read_text(encoding="utf-8")
    try:
        prog = parse(text)
    except RuleError as e:
        raise LabError(getattr(e, "code", "rule-error"), str(e)) from None
    out = dump(prog.ast)
    golden = cfg["golden"]
    if not golden and Path(path).name == "March.rule":
        ref = shipped("March.ast")
    else:
        ref = Path(golden).read_text() if golden else None
    files = {"ast.txt": out}
    if ref is not None and ref != out:
        raise LabError("golden-mismatch", "AST dump differs from the golden file")
    return files, [f"rules={len(prog.ast.rules)} golden={'match' if ref else 'none'}"]


COMMANDS = {"toom-memory": cmd_toom_memory, "relax": cmd_relax, "blocksim": cmd_blocksim,
            "ftol": cmd_ftol, "async": cmd_async, "hier": cmd_hier, "rs": cmd_rs,
            "frame": cmd_frame, "rulecheck": cmd_rulecheck}


# ---------------------------------------------------------------------------


def run(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    ap = argparse.ArgumentParser(prog="lab", description="Fault-tolerant CA experiment harness",
                                 allow_abbrev=False)
    ap.add_argument("subcommand", choices=sorted(COMMANDS))
    ap.add_argument("args", nargs="*", help="rs: encode|decode|roundtrip; rulecheck: FILE")
    ap.add_argument("--config")
    ap.add_argument("--seed", type=int)
    ap.add_argument("--out", default=None)
    ap.add_argument("--help-keys", action="store_true")
    ns, extra = ap.parse_known_args(argv)
    sub = ns.subcommand
    t0 = time.perf_counter()
    try:
        if ns.help_keys:
            for k, v in DEFAULTS[sub].items():
                print(f"{k}={v}", file=stdout)
            return 0
        file_values = read_config(ns.config) if ns.config else {}
        cfg = build_config(sub, file_values, _overrides(extra))
        seed = ns.seed if ns.seed is not None else file_values.get("seed")
        if seed is None and sub in STOCHASTIC:
            raise LabError("config", f"{sub} is stochastic and needs --seed", 2)
        seed = int(seed) if seed is not None else 0
        fn = COMMANDS[sub]
        if sub == "rs":
            if len(ns.args) != 1:
                raise LabError("config", "usage: lab rs encode|decode|roundtrip", 2)
            files, summary = fn(cfg, seed, ns.args[0])
        elif sub == "rulecheck":
            files, summary = fn(cfg, seed, ns.args[0] if ns.args else None)
        else:
            if ns.args:
                raise LabError("config", f"{sub} takes no positional arguments", 2)
            files, summary = fn(cfg, seed)
    except LabError as e:
        if ns.out and e.files:
            _emit(Path(ns.out), e.files, {}, 0.0)
        print(f"lab-error: code={e.code} message={e}", file=stderr)
        return e.status
    except (CAError, RuleError, ValueError, OSError) as e:
        code = getattr(e, "code", type(e).__name__)
        print(f"lab-error: code={code} message={e}", file=stderr)
        return 1
    wall = time.perf_counter() - t0
    if ns.out:
        cfg_echo = dict(cfg, seed=seed, subcommand=sub)
        _emit(Path(ns.out), files, cfg_echo, wall)
    for line in summary:
        print(line, file=stdout)
    return 0


def _emit(out: Path, files: dict, cfg: dict, wall: float):
    paths = [write_text(out / name, text) for name, text in sorted(files.items())]
    if cfg:
        write_text(out / "manifest.txt", manifest(cfg, paths, __version__, wall))


def main(argv=None):
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
