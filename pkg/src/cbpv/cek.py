"""The CEK environment machine: code, structured environment, continuation.

Environments are cons lists of frames.  A ``Bind`` frame is an ordinary
delayed substitution; a ``RecFrame`` holds a letrec bundle whose names are
in scope for the bundle's own definitions, so forcing a recursive name
creates the closure on demand instead of eagerly allocating one per
definition.

Looking up a recursive name yields ``Closure(LetRec(bundle, def_j), rest)``
over the environment *outside* the frame; re-entering that closure pushes a
fresh RecFrame, which keeps the machine in strict correspondence with the
pointer machines below (their program-counter environments record exactly
one frame per letrec node crossed).

Free variables are not errors: looking one up yields a symbolic value, so
open programs run until they genuinely get stuck, mirroring the semantics.
"""

from dataclasses import dataclass
from typing import Optional, Union

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
    free_vars,
    freshen,
    iter_subterms,
    substitute,
)

# ---------------------------------------------------------------------------
# machine values


@dataclass(frozen=True)
class SymVar:
    """A free variable treated as an opaque value."""

    name: str


@dataclass(frozen=True)
class NumC:
    n: int


@dataclass(frozen=True)
class Closure:
    code: object  # Term
    env: Optional["CekEnv"]


CekVal = Union[SymVar, NumC, Closure]


# ---------------------------------------------------------------------------
# environments and continuations


@dataclass(frozen=True)
class Bind:
    name: str
    value: CekVal
    rest: Optional["CekEnv"]


@dataclass(frozen=True)
class RecFrame:
    defs: tuple  # ((name, Term), ...)
    rest: Optional["CekEnv"]


CekEnv = Union[Bind, RecFrame]


@dataclass(frozen=True)
class ArgF:
    value: CekVal


@dataclass(frozen=True)
class SeqF:
    binder: str
    rest: object  # Term
    env: Optional[CekEnv]


@dataclass(frozen=True)
class CekState:
    code: object  # Term
    env: Optional[CekEnv]
    kont: tuple  # of ArgF/SeqF, top first


class IllFormedState(Exception):
    pass


# ---------------------------------------------------------------------------
# the gamma function


def lookup_value(v, env) -> CekVal:
    t = type(v)
    if t is ThunkV:
        return Closure(v.body, env)
    if t is NumV:
        return NumC(v.n)
    name = v.name
    e = env
    while e is not None:
        if type(e) is Bind:
            if e.name == name:
                return e.value
        else:
            for n, d in e.defs:  # leftmost definition wins
                if n == name:
                    return Closure(LetRec(e.defs, d), e.rest)
        e = e.rest
    return SymVar(name)


# ---------------------------------------------------------------------------
# stepping


def load(m) -> CekState:
    return CekState(m, None, ())


def step(sigma: CekState):
    """One machine step: descend to the innermost fireable node, then fire."""
    code, env, kont = sigma.code, sigma.env, sigma.kont

    while True:
        t = type(code)
        if t is LetRec:
            env = RecFrame(code.defs, env)
            code = code.body
        elif t is App:
            kont = (ArgF(lookup_value(code.arg, env)),) + kont
            code = code.body
        elif t is Seq:
            kont = (SeqF(code.binder, code.right, env),) + kont
            code = code.left
        else:
            break

    if t is Force:
        v = lookup_value(code.value, env)
        if type(v) is Closure:
            return CekState(v.code, v.env, kont)
        return Stuck(StuckReason.ForceNonThunk)

    if t is If0:
        g = lookup_value(code.guard, env)
        if type(g) is NumC:
            return CekState(code.then if g.n == 0 else code.orelse, env, kont)
        return Stuck(StuckReason.GuardNotNumeral)

    if t is Prd:
        if kont:
            f = kont[0]
            if type(f) is not SeqF:
                return Stuck(StuckReason.ApplyNonFunction)
            v = lookup_value(code.value, env)
            return CekState(f.rest, Bind(f.binder, v, f.env), kont[1:])
        return Terminal(ProducedValue(lookup_value(code.value, env)))

    if t is Lam:
        if kont:
            f = kont[0]
            if type(f) is not ArgF:
                return Stuck(StuckReason.SequencedNonProducer)
            return CekState(code.body, Bind(code.binder, f.value, env), kont[1:])
        return Terminal(AwaitingArgument())

    if t is Op:
        if kont and type(kont[0]) is ArgF:
            return Stuck(StuckReason.ApplyNonFunction)
        l = lookup_value(code.lhs, env)
        r = lookup_value(code.rhs, env)
        if type(l) is NumC and type(r) is NumC:
            n = code.op.apply(l.n, r.n)
            if kont:
                f = kont[0]
                return CekState(f.rest, Bind(f.binder, NumC(n), f.env), kont[1:])
            return Terminal(BareArith(n))
        return Stuck(StuckReason.ArithNonNumeral)

    raise TypeError(f"not a computation: {code!r}")


# ---------------------------------------------------------------------------
# unloading


def unload_env(env, term):
    """Flatten an environment into a term, innermost frame first."""
    t = term
    e = env
    while e is not None:
        if type(e) is Bind:
            t = substitute(t, {e.name: unload_val(e.value)})
        else:
            sub = {}
            for name, d in e.defs:
                if name not in sub:
                    sub[name] = ThunkV(LetRec(e.defs, d))
            t = substitute(t, sub)
        e = e.rest
    return t


def unload_val(v):
    t = type(v)
    if t is SymVar:
        return VarV(v.name)
    if t is NumC:
        return NumV(v.n)
    return ThunkV(unload_env(v.env, v.code))


# Internal marker for occurrences a pending frame's binder owns; no lexable
# identifier can collide with it.
_REBOUND = "\x00rebound"


def _every_name(t) -> set:
    names = set()
    for _, node in iter_subterms(t):
        ty = type(node)
        if ty is VarV:
            names.add(node.name)
        elif ty is Lam or ty is Seq:
            names.add(node.binder)
        elif ty is LetRec:
            names.update(n for n, _ in node.defs)
    return names


def _unload_seq_frame(f):
    """Flatten a frame's environment into its pending body.

    Occurrences the frame's binder owns are masked first so an outer
    environment entry of the same name cannot capture them; if the
    environment itself brings that name in free (possible only through a
    source-free variable inside a stored value), the binder is freshened
    instead of capturing it.
    """
    pending = substitute(f.rest, {f.binder: VarV(_REBOUND)})
    body = unload_env(f.env, pending)
    binder = f.binder
    if binder in free_vars(body):
        binder = freshen(binder, _every_name(body))
    return binder, substitute(body, {_REBOUND: VarV(binder)})


def unload(sigma: CekState):
    t = unload_env(sigma.env, sigma.code)
    for f in sigma.kont:
        if type(f) is ArgF:
            t = App(unload_val(f.value), t)
        else:
            binder, rest = _unload_seq_frame(f)
            t = Seq(t, binder, rest)
    return t


# ---------------------------------------------------------------------------
# scoping check and trace support


def _bound_names(env) -> set:
    names = set()
    e = env
    while e is not None:
        if type(e) is Bind:
            names.add(e.name)
        else:
            names.update(n for n, _ in e.defs)
        e = e.rest
    return names


def _val_closed(v) -> bool:
    if type(v) is Closure:
        return free_vars(v.code) <= _bound_names(v.env) and _env_closed(v.env)
    return True


def _env_closed(env) -> bool:
    e = env
    while e is not None:
        if type(e) is Bind:
            if not _val_closed(e.value):
                return False
            if type(e.value) is Closure and not _env_closed(e.value.env):
                return False
        e = e.rest
    return True


def wf_check(sigma: CekState) -> bool:
    """Scoping check for states of closed programs: the code's free variables
    are bound by the environment, and every suspended Seq body is closed
    under its saved environment plus its own binder."""
    if not free_vars(sigma.code) <= _bound_names(sigma.env):
        return False
    if not _env_closed(sigma.env):
        return False
    for f in sigma.kont:
        if type(f) is ArgF:
            if not _val_closed(f.value):
                return False
        else:
            if not free_vars(f.rest) <= _bound_names(f.env) | {f.binder}:
                return False
            if not _env_closed(f.env):
                return False
    return True


_HEAD = {
    Force: "force",
    Prd: "prd",
    App: "app",
    Lam: "lam",
    Seq: "seq",
    LetRec: "letrec",
    If0: "if0",
    Op: "op",
}


def _env_len(env) -> int:
    n = 0
    e = env
    while e is not None:
        n += 1
        e = e.rest
    return n


def describe(sigma: CekState, i: int) -> str:
    return (
        f"cek {i}: code={_HEAD[type(sigma.code)]}"
        f" env={_env_len(sigma.env)} kont={len(sigma.kont)}"
    )
