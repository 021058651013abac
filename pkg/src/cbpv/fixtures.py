"""Small reference programs used by the test suite and shipped as .cbpv files.

``SOURCES`` maps a fixture name to its concrete-syntax text; the files under
``fixtures/`` in the repository root hold the same text and a test keeps the
two in sync.  ``mult_call(n, m, a)`` evaluates to ``n * (m - 1) + a``.
"""

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
)

# -- tiny single-step programs ----------------------------------------------

ARITH_SEQ = Seq(Op(NumV(1), ArithOp.ADD, NumV(2)), "x", Prd(VarV("x")))
FORCE_THUNK = Force(ThunkV(Prd(NumV(0))))
APPLY_ID = App(NumV(5), Lam("x", Prd(VarV("x"))))
BRANCH_ZERO = If0(NumV(0), Prd(NumV(1)), Prd(NumV(2)))

# -- the recursive multiplier -----------------------------------------------

_MULT_DEF = Lam(
    "n",
    Lam(
        "x",
        Lam(
            "a",
            If0(
                VarV("x"),
                Prd(NumV(0)),
                Seq(
                    Op(VarV("x"), ArithOp.SUB, NumV(1)),
                    "y",
                    If0(
                        VarV("y"),
                        Prd(VarV("a")),
                        Seq(
                            Op(VarV("a"), ArithOp.ADD, VarV("n")),
                            "b",
                            App(
                                VarV("b"),
                                App(
                                    VarV("y"),
                                    App(VarV("n"), Force(VarV("mult"))),
                                ),
                            ),
                        ),
                    ),
                ),
            ),
        ),
    ),
)

MULT = LetRec((("mult", _MULT_DEF),), Prd(VarV("mult")))


def mult_call(n: int, m: int, a: int):
    """The multiplier applied to concrete arguments; yields n * (m - 1) + a."""
    body = App(
        NumV(a), App(NumV(m), App(NumV(n), Force(VarV("mult"))))
    )
    return LetRec((("mult", _MULT_DEF),), body)


MULT_CALL = mult_call(2, 3, 0)  # runs to 4

# -- the force/sequence collapse chain (free in a and b) ----------------------

OPEN_ADD = Op(VarV("a"), ArithOp.ADD, VarV("b"))
NESTED_SEQ = Seq(Seq(OPEN_ADD, "y", Prd(VarV("y"))), "x", Prd(VarV("x")))
LAYERED_THUNKS = Force(
    ThunkV(
        Seq(
            Force(ThunkV(Seq(OPEN_ADD, "y", Prd(VarV("y"))))),
            "x",
            Prd(VarV("x")),
        )
    )
)

# -- the same auxiliary bound two ways ----------------------------------------

_DOUBLER = Lam("a", Seq(Op(VarV("a"), ArithOp.ADD, VarV("a")), "r", Prd(VarV("r"))))

DOUBLER_LETREC = LetRec((("f", _DOUBLER),), App(NumV(5), Force(VarV("f"))))
DOUBLER_LAMBDA = App(ThunkV(_DOUBLER), Lam("f", App(NumV(5), Force(VarV("f")))))

# -- concrete-syntax texts -----------------------------------------------------

_MULT_SRC = (
    "letrec mult = \\n. \\x. \\a. if0 x { prd 0 } "
    "{ x - 1 to y in if0 y { prd a } "
    "{ a + n to b in b . y . n . force mult } } in "
)

SOURCES = {
    "arith_seq": "1 + 2 to x in prd x",
    "force_thunk": "force thunk { prd 0 }",
    "apply_id": "5 . \\x. prd x",
    "branch_zero": "if0 0 { prd 1 } { prd 2 }",
    "mult": _MULT_SRC + "prd mult",
    "mult_call": _MULT_SRC + "0 . 3 . 2 . force mult",
    "layered_thunks": "force thunk { force thunk { a + b to y in prd y } to x in prd x }",
    "nested_seq": "(a + b to y in prd y) to x in prd x",
    "open_add": "a + b",
    "doubler_letrec": "letrec f = \\a. a + a to r in prd r in 5 . force f",
    "doubler_lambda": "thunk { \\a. a + a to r in prd r } . \\f. 5 . force f",
}

PROGRAMS = {
    "arith_seq": ARITH_SEQ,
    "force_thunk": FORCE_THUNK,
    "apply_id": APPLY_ID,
    "branch_zero": BRANCH_ZERO,
    "mult": MULT,
    "mult_call": MULT_CALL,
    "layered_thunks": LAYERED_THUNKS,
    "nested_seq": NESTED_SEQ,
    "open_add": OPEN_ADD,
    "doubler_letrec": DOUBLER_LETREC,
    "doubler_lambda": DOUBLER_LAMBDA,
}
