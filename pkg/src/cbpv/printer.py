"""Canonical single-line concrete syntax for terms and values.

The output is what the parser accepts, and parsing it yields the original
tree.  Parentheses are emitted only where the grammar needs them: the left
side of ``to`` whenever that side could otherwise swallow the ``to`` itself
(applications, lambdas, letrec, and nested sequencing).
"""

from .syntax import App, Force, If0, Lam, LetRec, NumV, Op, Prd, Seq, ThunkV, VarV


def print_value(v) -> str:
    t = type(v)
    if t is VarV:
        return v.name
    if t is NumV:
        return str(v.n)
    if t is ThunkV:
        return "thunk { " + print_term(v.body) + " }"
    raise TypeError(f"not a value: {v!r}")


# heads that cannot extend past a following "to"
_CLOSED = (Force, Prd, If0, Op)


def print_term(m) -> str:
    t = type(m)
    if t is Force:
        return "force " + print_value(m.value)
    if t is Prd:
        return "prd " + print_value(m.value)
    if t is App:
        return print_value(m.arg) + " . " + print_term(m.body)
    if t is Lam:
        return "\\" + m.binder + ". " + print_term(m.body)
    if t is Seq:
        left = print_term(m.left)
        if not isinstance(m.left, _CLOSED):
            left = "(" + left + ")"
        return left + " to " + m.binder + " in " + print_term(m.right)
    if t is LetRec:
        defs = " and ".join(n + " = " + print_term(d) for n, d in m.defs)
        return "letrec " + defs + " in " + print_term(m.body)
    if t is If0:
        return (
            "if0 "
            + print_value(m.guard)
            + " { "
            + print_term(m.then)
            + " } { "
            + print_term(m.orelse)
            + " }"
        )
    if t is Op:
        return print_value(m.lhs) + " " + m.op.value + " " + print_value(m.rhs)
    return print_value(m)
