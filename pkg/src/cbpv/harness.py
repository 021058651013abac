"""Differential drivers pairing adjacent machines, plus a term generator.

Each adjacent pair of levels is checked in lockstep from its load states:
at every step the lower machine's state is unloaded and compared against
the upper one, then both take a step and their halts must classify alike.
``tower_check`` closes the loop across the whole tower, comparing the
block machine's trajectory against structural reduction one step at a
time while also re-checking well-formedness at each visited state.

Divergent programs are never run to completion — every driver checks
commutation up to its fuel and reports success if no square broke.
"""

import random
from dataclasses import dataclass
from enum import Enum

from . import cek, cfg, peak, pek, sos
from .cek import CekState
from .peak import KArg, KSeq, PClosure, PeakState
from .pek import PekState
from .printer import print_term
from .sos import Next, ProducedValue, Stuck, Terminal
from .syntax import (
    App,
    ArithOp,
    Force,
    If0,
    Lam,
    LetRec,
    NumV,
    Op,
    Prd,
    Seq,
    ThunkV,
    VarV,
    alpha_eq,
    as_prog,
)

MODES = ("strict", "modulo_advance")


class LevelPair(Enum):
    SOS_CEK = "sos/cek"
    CEK_PEAK = "cek/peak"
    PEAK_PEK = "peak/pek"
    PEK_CFG = "pek/cfg"


def _show(x):
    try:
        return print_term(x)
    except TypeError:
        return repr(x)


@dataclass(frozen=True)
class Failure:
    step: int
    level: str
    expected: object
    actual: object

    def line(self) -> str:
        return (
            f"{self.level} step {self.step}: "
            f"expected {_show(self.expected)}, got {_show(self.actual)}"
        )


@dataclass(frozen=True)
class Report:
    program: object
    steps_checked: int
    failures: tuple = ()

    @property
    def ok(self) -> bool:
        return not self.failures

    def __bool__(self) -> bool:
        return self.ok

    def lines(self):
        return [f.line() for f in self.failures]


# ---------------------------------------------------------------------------
# canonicalization for comparisons modulo advancing


def _canon_val(prog, v):
    if type(v) is PClosure:
        return PClosure(pek.eta(prog, v.entry), _canon_env(prog, v.env))
    return v


def _canon_env(prog, e):
    return {q: _canon_val(prog, v) for q, v in e.items()}


def _canon_kont(prog, kont):
    out = []
    for f in kont:
        if type(f) is KArg:
            out.append(KArg(_canon_val(prog, f.value)))
        else:
            out.append(KSeq(f.path, _canon_env(prog, f.env), f.rest_args))
    return tuple(out)


def canon_state(prog, rho: PeakState) -> PeakState:
    """Advance to the next instruction and name code by its entry point."""
    rho = peak.advance(prog, rho)
    return PeakState(
        rho.pc, _canon_env(prog, rho.env), rho.args, _canon_kont(prog, rho.kont)
    )


# ---------------------------------------------------------------------------
# halt comparison


def _halts_align(upper, lower, convert, value_eq) -> bool:
    """Same classification; produced values compared after converting the
    lower payload into the upper level's representation."""
    if type(upper) is Stuck and type(lower) is Stuck:
        return upper == lower
    if type(upper) is not Terminal or type(lower) is not Terminal:
        return False
    ka, kb = upper.kind, lower.kind
    if type(ka) is not type(kb):
        return False
    if type(ka) is ProducedValue:
        try:
            return value_eq(ka.value, convert(kb.value))
        except cek.IllFormedState:
            return False
    return ka == kb


def _unloads(fn, *args):
    """Unload a state, or surface the scoping violation it trips over.

    A state the unload function rejects cannot take part in a commutation
    square, so callers turn the message into an ordinary Failure instead
    of letting a broken machine crash the whole run.
    """
    try:
        return fn(*args), None
    except cek.IllFormedState as exc:
        return None, f"state does not unload: {exc}"


def _same(a, b) -> bool:
    return a == b


# ---------------------------------------------------------------------------
# lockstep drivers, one per adjacent pair


def lockstep_check(m, pair: LevelPair, fuel: int = 1000, mode: str = "strict") -> Report:
    if mode not in MODES:
        raise ValueError(f"unknown mode: {mode!r}")
    prog = as_prog(m)
    if pair is LevelPair.SOS_CEK:
        return _check_sos_cek(prog, fuel)
    if pair is LevelPair.CEK_PEAK:
        return _check_cek_peak(prog, fuel)
    if pair is LevelPair.PEAK_PEK:
        return _check_peak_pek(prog, fuel, mode)
    return _check_pek_cfg(prog, fuel)


def _check_sos_cek(prog, fuel) -> Report:
    level = LevelPair.SOS_CEK.value
    t = prog.term
    sigma = cek.load(t)
    steps = 0
    while True:
        u, err = _unloads(cek.unload, sigma)
        if err is not None:
            return Report(prog.term, steps, (Failure(steps, level, t, err),))
        if not alpha_eq(u, t):
            return Report(prog.term, steps, (Failure(steps, level, t, u),))
        rs, rm = sos.step(t), cek.step(sigma)
        going = (type(rs) is Next, type(rm) is CekState)
        if going != (True, True):
            if going[0] != going[1] or not _halts_align(rs, rm, cek.unload_val, alpha_eq):
                return Report(prog.term, steps, (Failure(steps + 1, level, rs, rm),))
            return Report(prog.term, steps + 1)
        if steps == fuel:
            return Report(prog.term, steps)
        steps += 1
        t, sigma = rs.term, rm


def _check_cek_peak(prog, fuel) -> Report:
    level = LevelPair.CEK_PEAK.value
    sigma = cek.load(prog.term)
    rho = peak.load(prog.term)
    steps = 0
    while True:
        u, err = _unloads(peak.unload, prog, rho)
        if err is not None:
            return Report(prog.term, steps, (Failure(steps, level, sigma, err),))
        if u != sigma:
            return Report(prog.term, steps, (Failure(steps, level, sigma, u),))
        rm, rp = cek.step(sigma), peak.step(prog, rho)
        going = (type(rm) is CekState, type(rp) is PeakState)
        if going != (True, True):
            unload_payload = lambda v: peak.unload_v(prog, v)
            if going[0] != going[1] or not _halts_align(rm, rp, unload_payload, _same):
                return Report(prog.term, steps, (Failure(steps + 1, level, rm, rp),))
            return Report(prog.term, steps + 1)
        if steps == fuel:
            return Report(prog.term, steps)
        steps += 1
        sigma, rho = rm, rp


def _check_peak_pek(prog, fuel, mode) -> Report:
    level = LevelPair.PEAK_PEK.value
    rho = peak.load(prog.term)
    s = pek.load(prog)
    if mode == "strict":
        state_eq = value_eq = _same
    else:
        state_eq = lambda a, b: canon_state(prog, a) == canon_state(prog, b)
        value_eq = lambda a, b: _canon_val(prog, a) == _canon_val(prog, b)
    steps = 0
    while True:
        u = pek.unload(prog, s)
        if not state_eq(rho, u):
            return Report(prog.term, steps, (Failure(steps, level, rho, u),))
        ra, rb = peak.step(prog, rho), pek.step(prog, s)
        going = (type(ra) is PeakState, type(rb) is PekState)
        if going != (True, True):
            if going[0] != going[1] or not _halts_align(ra, rb, lambda v: v, value_eq):
                return Report(prog.term, steps, (Failure(steps + 1, level, ra, rb),))
            return Report(prog.term, steps + 1)
        if steps == fuel:
            return Report(prog.term, steps)
        steps += 1
        rho, s = ra, rb


def _check_pek_cfg(prog, fuel) -> Report:
    level = LevelPair.PEK_CFG.value
    g = cfg.compile(prog)
    s = pek.load(prog)
    steps = 0
    while True:
        rp, rg = pek.step(prog, s), cfg.step(g, s)
        if rp != rg:
            return Report(prog.term, steps, (Failure(steps + 1, level, rp, rg),))
        if type(rp) is not PekState:
            return Report(prog.term, steps + 1)
        if steps == fuel:
            return Report(prog.term, steps)
        steps += 1
        s = rp


# ---------------------------------------------------------------------------
# the full-tower square


def tower_check(m, fuel: int = 1000) -> Report:
    level = "sos/cfg"
    prog = as_prog(m)
    g, s = cfg.load(prog)
    steps = 0
    while True:
        wf = pek.wf_check(prog, s)
        if not wf.ok:
            bad = "; ".join(wf.violations)
            return Report(prog.term, steps, (Failure(steps, level, "well-formed state", bad),))
        t, err = _unloads(cfg.unload, g, s)
        if err is not None:
            return Report(prog.term, steps, (Failure(steps, level, "a state that unloads", err),))
        rs, rg = sos.step(t), cfg.step(g, s)
        if type(rg) is PekState:
            if type(rs) is not Next:
                return Report(prog.term, steps, (Failure(steps + 1, level, rs, rg),))
            u, err = _unloads(cfg.unload, g, rg)
            if err is not None:
                return Report(prog.term, steps, (Failure(steps + 1, level, rs.term, err),))
            if not alpha_eq(u, rs.term):
                return Report(prog.term, steps, (Failure(steps + 1, level, rs.term, u),))
            if steps == fuel:
                return Report(prog.term, steps)
            steps += 1
            s = rg
        else:
            convert = lambda v: cek.unload_val(peak.unload_v(prog, v))
            if type(rs) is Next or not _halts_align(rs, rg, convert, alpha_eq):
                return Report(prog.term, steps, (Failure(steps + 1, level, rs, rg),))
            return Report(prog.term, steps + 1)


# ---------------------------------------------------------------------------
# random well-scoped programs

_NAMES = ("a", "b", "f", "g", "x", "y", "z")


def gen_term(seed, size: int, closed: bool = True):
    """A deterministic pseudo-random term; closed=True forbids free variables."""
    rng = random.Random(f"{seed}/{size}/{closed}")
    return _gen_comp(rng, size, (), closed)


def _gen_value(rng, budget, scope, closed):
    kinds = ["num"]
    if scope:
        kinds.append("bound")
    if not closed:
        kinds.append("free")
    if budget > 0:
        kinds += ["thunk", "thunk"]
    kind = rng.choice(kinds)
    if kind == "num":
        return NumV(rng.randint(-9, 99))
    if kind == "bound":
        return VarV(rng.choice(scope))
    if kind == "free":
        return VarV(rng.choice(_NAMES))
    return ThunkV(_gen_comp(rng, budget - 1, scope, closed))


# weighted toward shapes that keep the machines stepping
_COMP_KINDS = (
    "seq", "seq", "seq", "app", "app", "if0", "if0",
    "force", "force", "letrec", "lam", "op", "prd",
)


def _gen_comp(rng, budget, scope, closed):
    if budget <= 0:
        return Prd(NumV(rng.randint(0, 9)))
    b = budget - 1
    split = rng.randint(0, b)
    kind = rng.choice(_COMP_KINDS)
    if kind == "force":
        if rng.random() < 0.8:
            return Force(ThunkV(_gen_comp(rng, b, scope, closed)))
        return Force(_gen_value(rng, b, scope, closed))
    if kind == "prd":
        return Prd(_gen_value(rng, b, scope, closed))
    if kind == "app":
        arg = _gen_value(rng, split, scope, closed)
        if rng.random() < 0.7:
            x = rng.choice(_NAMES)
            return App(arg, Lam(x, _gen_comp(rng, b - split, scope + (x,), closed)))
        return App(arg, _gen_comp(rng, b - split, scope, closed))
    if kind == "lam":
        x = rng.choice(_NAMES)
        return Lam(x, _gen_comp(rng, b, scope + (x,), closed))
    if kind == "seq":
        x = rng.choice(_NAMES)
        return Seq(
            _gen_comp(rng, split, scope, closed),
            x,
            _gen_comp(rng, b - split, scope + (x,), closed),
        )
    if kind == "letrec":
        names = [rng.choice(_NAMES) for _ in range(rng.randint(1, 2))]
        inner = scope + tuple(names)
        shares = [rng.randint(0, b // (len(names) + 1)) for _ in names]
        defs = tuple(
            (n, _gen_comp(rng, share, inner, closed)) for n, share in zip(names, shares)
        )
        return LetRec(defs, _gen_comp(rng, b - sum(shares), inner, closed))
    if kind == "if0":
        return If0(
            _gen_value(rng, 0, scope, closed),
            _gen_comp(rng, split, scope, closed),
            _gen_comp(rng, b - split, scope, closed),
        )
    lhs = _gen_value(rng, 0, scope, closed)
    rhs = _gen_value(rng, 0, scope, closed)
    return Op(lhs, rng.choice(list(ArithOp)), rhs)
