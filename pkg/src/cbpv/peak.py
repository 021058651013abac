"""The PEAK machine: program counter, path-keyed environment, argument stack.

States address subterms of a fixed program by path instead of carrying code.
The environment maps binder paths (Lam and Seq nodes) to machine values;
letrec needs no environment entries at all, because looking up a recursive
name just fabricates a closure whose entry is the definition's path.  The
argument stack delays closure creation for application arguments until a
force converts the pending frames into continuation frames (the δ function).

Unloading rebuilds the CEK view of a state.  Machine transitions only ever
leave the program counter at non-descent positions, so the ascent pass at
the top of ``unload`` is a no-op for states this machine produces; it exists
for the instruction-pointer machines layered on top, whose resting positions
sit at the bottom of a descent chain.
"""

from dataclasses import dataclass
from typing import Union

from . import cek
from .cek import CekState, Closure, NumC, SymVar
from .sos import (
    AwaitingArgument,
    BareArith,
    ProducedValue,
    Stuck,
    StuckReason,
    Terminal,
)
from .syntax import (
    App,
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
    FreeVar,
    LamBind,
    RecBind,
    SeqBind,
    as_prog,
    is_suffix,
    path_text,
    resolve_binder,
)

# ---------------------------------------------------------------------------
# machine values, frames, states


@dataclass(frozen=True)
class NumP:
    n: int


@dataclass(frozen=True)
class PClosure:
    entry: tuple  # Path of a computation subterm
    env: dict


PVal = Union[SymVar, NumP, PClosure]


@dataclass(frozen=True)
class ARG:
    path: tuple  # an App node


@dataclass(frozen=True)
class SEQ:
    path: tuple  # a Seq node


@dataclass(frozen=True)
class KArg:
    value: PVal


@dataclass(frozen=True)
class KSeq:
    path: tuple
    env: dict
    rest_args: tuple


@dataclass(frozen=True)
class PeakState:
    pc: tuple
    env: dict  # Path -> PVal; treated as immutable, updates copy
    args: tuple  # of ARG/SEQ, innermost frame first
    kont: tuple  # of KArg/KSeq, top first


class MissingBinding(Exception):
    """A binder path had no entry in the environment (ill-formed state)."""


# ---------------------------------------------------------------------------
# value resolution


def lookup_var(P, p: tuple, e: dict) -> PVal:
    ref = resolve_binder(P, p)
    t = type(ref)
    if t is FreeVar:
        return SymVar(ref.name)
    if t is RecBind:
        return PClosure((ref.index,) + ref.path, e)
    v = e.get(ref.path)
    if v is None:
        raise MissingBinding(f"no value for binder at {path_text(ref.path)}")
    return v


def gamma(P, p: tuple, e: dict) -> PVal:
    prog = as_prog(P)
    v = prog.at(p)
    t = type(v)
    if t is NumV:
        return NumP(v.n)
    if t is ThunkV:
        return PClosure((0,) + p, e)
    return lookup_var(prog, p, e)


def delta(P, e: dict, args: tuple) -> tuple:
    """Convert pending argument frames up to and including the first SEQ."""
    prog = as_prog(P)
    out = []
    for i, f in enumerate(args):
        if type(f) is ARG:
            out.append(KArg(gamma(prog, (0,) + f.path, e)))
        else:
            out.append(KSeq(f.path, e, tuple(args[i + 1 :])))
            break
    return tuple(out)


# ---------------------------------------------------------------------------
# stepping


def load(m) -> PeakState:
    return PeakState((), {}, (), ())


def advance(P, rho: PeakState) -> PeakState:
    """Descend search edges: Seq left, App body, letrec body."""
    prog = as_prog(P)
    pc, args = rho.pc, rho.args
    node = prog.at(pc)
    while True:
        t = type(node)
        if t is Seq:
            args = (SEQ(pc),) + args
            pc = (0,) + pc
        elif t is App:
            args = (ARG(pc),) + args
            pc = (1,) + pc
        elif t is LetRec:
            pc = (0,) + pc
        else:
            break
        node = prog.at(pc)
    if pc == rho.pc:
        return rho
    return PeakState(pc, rho.env, args, rho.kont)


def step(P, rho: PeakState):
    prog = as_prog(P)
    st = advance(prog, rho)
    try:
        return _fire(prog, st)
    except MissingBinding:
        return Stuck(StuckReason.UnboundPath)


def _fire(prog, st: PeakState):
    node = prog.at(st.pc)
    t = type(node)
    pc, e, args, kont = st.pc, st.env, st.args, st.kont

    if t is Force:
        v = gamma(prog, (0,) + pc, e)
        if type(v) is not PClosure:
            return Stuck(StuckReason.ForceNonThunk)
        return PeakState(v.entry, v.env, (), delta(prog, e, args) + kont)

    if t is If0:
        g = gamma(prog, (0,) + pc, e)
        if type(g) is not NumP:
            return Stuck(StuckReason.GuardNotNumeral)
        return PeakState(((1,) if g.n == 0 else (2,)) + pc, e, args, kont)

    if t is Prd:
        if args:
            f = args[0]
            if type(f) is ARG:
                return Stuck(StuckReason.ApplyNonFunction)
            v = gamma(prog, (0,) + pc, e)
            return PeakState((1,) + f.path, {**e, f.path: v}, args[1:], kont)
        if kont:
            f = kont[0]
            if type(f) is KArg:
                return Stuck(StuckReason.ApplyNonFunction)
            v = gamma(prog, (0,) + pc, e)
            return PeakState((1,) + f.path, {**f.env, f.path: v}, f.rest_args, kont[1:])
        return Terminal(ProducedValue(gamma(prog, (0,) + pc, e)))

    if t is Lam:
        if args:
            f = args[0]
            if type(f) is SEQ:
                return Stuck(StuckReason.SequencedNonProducer)
            v = gamma(prog, (0,) + f.path, e)
            return PeakState((0,) + pc, {**e, pc: v}, args[1:], kont)
        if kont:
            f = kont[0]
            if type(f) is KSeq:
                return Stuck(StuckReason.SequencedNonProducer)
            return PeakState((0,) + pc, {**e, pc: f.value}, (), kont[1:])
        return Terminal(AwaitingArgument())

    if t is Op:
        if args and type(args[0]) is ARG:
            return Stuck(StuckReason.ApplyNonFunction)
        if not args and kont and type(kont[0]) is KArg:
            return Stuck(StuckReason.ApplyNonFunction)
        l = gamma(prog, (0,) + pc, e)
        r = gamma(prog, (1,) + pc, e)
        if type(l) is not NumP or type(r) is not NumP:
            return Stuck(StuckReason.ArithNonNumeral)
        n = NumP(node.op.apply(l.n, r.n))
        if args:
            f = args[0]
            return PeakState((1,) + f.path, {**e, f.path: n}, args[1:], kont)
        if kont:
            f = kont[0]
            return PeakState((1,) + f.path, {**f.env, f.path: n}, f.rest_args, kont[1:])
        return Terminal(BareArith(n.n))

    raise TypeError(f"pc does not address a computation: {node!r}")


# ---------------------------------------------------------------------------
# unloading to CEK


def _ascend(prog, pc: tuple, args):
    """Undo advancement: climb search edges, consuming matching frames.

    With ``args=None`` (closure entries, which carry no argument stack) the
    climb crosses Seq/App edges unconditionally.
    """
    while pc:
        head, parent = pc[0], pc[1:]
        node = prog.at(parent)
        t = type(node)
        if t is Seq and head == 0:
            if args is None:
                pc = parent
                continue
            if args and type(args[0]) is SEQ and args[0].path == parent:
                args = args[1:]
                pc = parent
                continue
            break
        if t is App and head == 1:
            if args is None:
                pc = parent
                continue
            if args and type(args[0]) is ARG and args[0].path == parent:
                args = args[1:]
                pc = parent
                continue
            break
        if t is LetRec and head == 0:
            pc = parent
            continue
        break
    return pc, args


def _entry_code(prog, p: tuple):
    """The term a position stands for, plus the anchor for its environment.

    A position at a letrec definition child denotes the definition wrapped
    in its own bundle (what forcing the recursive name means); the wrapper's
    environment is anchored outside the letrec node.
    """
    if p:
        parent = p[1:]
        parent_node = prog.at(parent)
        if type(parent_node) is LetRec and p[0] >= 1:
            return LetRec(parent_node.defs, prog.at(p)), parent
    return prog.at(p), p


def _unload_e(prog, p: tuple, e: dict):
    """CEK environment frames for the binders crossed by a path, innermost
    first."""
    frames = []  # collected innermost-first, chained outermost-first below
    for k in range(len(p)):
        head, parent = p[k], p[k + 1 :]
        node = prog.at(parent)
        t = type(node)
        if t is Lam and head == 0:
            frames.append(("bind", node.binder, parent))
        elif t is Seq and head == 1:
            frames.append(("bind", node.binder, parent))
        elif t is LetRec:
            frames.append(("rec", node.defs, None))
    env = None
    for kind, a, b in reversed(frames):
        if kind == "bind":
            v = e.get(b)
            if v is None:
                raise cek.IllFormedState(f"no value for binder at {path_text(b)}")
            env = cek.Bind(a, unload_v(prog, v), env)
        else:
            env = cek.RecFrame(a, env)
    return env


def unload_v(prog, v):
    t = type(v)
    if t is SymVar:
        return v
    if t is NumP:
        return NumC(v.n)
    entry, _ = _ascend(prog, v.entry, None)
    code, anchor = _entry_code(prog, entry)
    return Closure(code, _unload_e(prog, anchor, v.env))


def _unload_k(prog, e: dict, args, kont) -> tuple:
    out = []

    def emit_args(env, frames):
        for f in frames:
            if type(f) is ARG:
                out.append(cek.ArgF(unload_v(prog, gamma(prog, (0,) + f.path, env))))
            else:
                node = prog.at(f.path)
                out.append(cek.SeqF(node.binder, node.right, _unload_e(prog, f.path, env)))

    emit_args(e, args)
    for f in kont:
        if type(f) is KArg:
            out.append(cek.ArgF(unload_v(prog, f.value)))
        else:
            node = prog.at(f.path)
            out.append(cek.SeqF(node.binder, node.right, _unload_e(prog, f.path, f.env)))
            emit_args(f.env, f.rest_args)
    return tuple(out)


def unload(P, rho: PeakState) -> CekState:
    prog = as_prog(P)
    pc, args = _ascend(prog, rho.pc, rho.args)
    code, anchor = _entry_code(prog, pc)
    return CekState(
        code,
        _unload_e(prog, anchor, rho.env),
        _unload_k(prog, rho.env, args, rho.kont),
    )


# ---------------------------------------------------------------------------
# well-formedness


@dataclass(frozen=True)
class WfReport:
    violations: tuple

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok


def _scope_entries(prog, p: tuple):
    """Binder paths a position's environment must cover: every Lam entered
    through its body and every Seq entered through its right component."""
    need = []
    for k in range(len(p)):
        head, parent = p[k], p[k + 1 :]
        node = prog.at(parent)
        t = type(node)
        if (t is Lam and head == 0) or (t is Seq and head == 1):
            need.append(parent)
    return need


def wf_check(P, rho: PeakState) -> WfReport:
    prog = as_prog(P)
    violations = []
    seen = set()

    def check_scoped(p, e, what):
        for q in _scope_entries(prog, p):
            if q not in e:
                violations.append(
                    f"{what}: binder at {path_text(q)} unbound for position {path_text(p)}"
                )
        check_env(e)

    def check_env(e):
        if id(e) in seen:
            return
        seen.add(id(e))
        for v in e.values():
            if type(v) is PClosure:
                check_scoped(v.entry, v.env, "closure entry")

    # WF1
    check_scoped(rho.pc, rho.env, "pc")
    for f in rho.kont:
        if type(f) is KArg:
            if type(f.value) is PClosure:
                check_scoped(f.value.entry, f.value.env, "argument closure")
        else:
            check_scoped(f.path, f.env, "continuation frame")

    # WF2
    prev = rho.pc
    for f in rho.args:
        if not is_suffix(f.path, prev):
            violations.append(
                f"argument frame {path_text(f.path)} is not a suffix of {path_text(prev)}"
            )
        prev = f.path

    return WfReport(tuple(violations))


# ---------------------------------------------------------------------------
# trace support


def describe(rho: PeakState, i: int) -> str:
    return (
        f"peak {i}: pc={path_text(rho.pc)} env={len(rho.env)}"
        f" args={len(rho.args)} kont={len(rho.kont)}"
    )
