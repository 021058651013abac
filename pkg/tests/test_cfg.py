"""Compiler and CFG machine: frozen listings, exact PEK agreement, emission."""

import pytest
from hypothesis import given, settings

from cbpv import pek, sos
from cbpv import fixtures as fx
from cbpv.cfg import (
    CALL,
    IF0,
    LBL,
    LOC,
    MOV,
    NAT,
    OP,
    OPRET,
    POP,
    RET,
    STUCK,
    TAIL,
    VAR,
    NotAComputation,
    UnknownPc,
    compile,
    describe,
    eval_operand,
    load,
    operand_of,
    print_cfg,
    records,
    step,
    unload,
)
from cbpv.parser import parse_term
from cbpv.peak import KArg, MissingBinding, NumP, PClosure
from cbpv.pek import KRet, PekState
from cbpv.sos import ProducedValue, Stuck, StuckReason, Terminal
from cbpv.syntax import (
    ArithOp,
    NumV,
    Prd,
    ThunkV,
    alpha_eq,
    arity,
    as_prog,
    child,
    is_value,
    iter_subterms,
    path_from_text,
)

from conftest import close_term, terms

MULT = as_prog(fx.MULT)

MULT_LISTING = "\n".join(
    [
        "0: RET @1 []",
        "1: POP n [2]",
        "2: POP x [3]",
        "3: POP a [4]",
        "4: IF0 x [5 6]",
        "5: RET 0 []",
        "6: OP SUB x 1 y [7]",
        "7: IF0 y [8 9]",
        "8: RET a []",
        "9: OP ADD a n b [10]",
        "10: TAIL @1 n y b []",
    ]
)


# ---------------------------------------------------------------------------
# operands


def test_operand_forms():
    assert operand_of(MULT, (0, 0)) == LBL((1,))  # the recursive name
    assert operand_of(fx.BRANCH_ZERO, (0,)) == NAT(0)
    assert operand_of(fx.OPEN_ADD, (0,)) == VAR("a")
    assert operand_of(fx.ARITH_SEQ, (0, 1)) == LOC(())  # x under its Seq
    prog = as_prog(fx.FORCE_THUNK)
    assert operand_of(prog, (0,)) == LBL((0, 0))


def test_operand_rejects_computations():
    with pytest.raises(Exception):
        operand_of(fx.ARITH_SEQ, (0,))  # the Op node is not a value


def test_eval_operand_table():
    e = {(): NumP(5)}
    assert eval_operand(e, NAT(3)) == NumP(3)
    assert eval_operand(e, VAR("a")).name == "a"
    assert eval_operand(e, LOC(())) == NumP(5)
    v = eval_operand(e, LBL((1,)))
    assert v == PClosure((1,), e) and v.env is e
    with pytest.raises(MissingBinding):
        eval_operand({}, LOC((0,)))


def _value_positions(prog):
    stack = [((), prog.term)]
    while stack:
        p, node = stack.pop()
        if is_value(node) and not isinstance(node, ThunkV):
            yield p
        elif isinstance(node, ThunkV):
            yield p
        stack.extend(((i,) + p, child(node, i)) for i in range(arity(node)))


@settings(deadline=None)
@given(terms)
def test_operand_evaluation_agrees_with_gamma(t):
    # eval_operand after operand_of is exactly the machine's value resolution
    prog = as_prog(t)
    for p in _value_positions(prog):
        try:
            want = pek.gamma(prog, p, {})
        except MissingBinding:
            with pytest.raises(MissingBinding):
                eval_operand({}, operand_of(prog, p))
            continue
        assert eval_operand({}, operand_of(prog, p)) == want


# ---------------------------------------------------------------------------
# compilation


def test_compile_single_return():
    g = compile(parse_term("prd 0"))
    assert g.entry == ()
    assert g.blocks == {(): (RET(NAT(0)), ())}


def test_compile_rejects_values():
    with pytest.raises(NotAComputation):
        compile(NumV(3))
    with pytest.raises(NotAComputation):
        compile(ThunkV(Prd(NumV(1))))


def test_compile_open_arith():
    assert print_cfg(compile(fx.OPEN_ADD)) == "0: OPRET ADD a b []"


def test_compile_mult_listing():
    assert print_cfg(compile(MULT)) == MULT_LISTING


def test_compile_stuck_positions():
    g = compile(parse_term("1 . prd 2"))
    assert g.blocks[(1,)] == (STUCK(StuckReason.ApplyNonFunction), ())
    g = compile(parse_term("(\\x. prd x) to w in prd w"))
    assert g.blocks[(0,)] == (STUCK(StuckReason.SequencedNonProducer), ())


def test_compile_call_saves_binding_site():
    g = compile(parse_term("force thunk { prd 5 } to x in prd x"))
    instr, succs = g.blocks[(0,)]
    assert instr == CALL(LBL((0, 0, 0)), (), ())
    assert succs == ((1,),)


def _closed_graph(g):
    for instr, succs in g.blocks.values():
        for q in succs:
            assert q in g.blocks
        for f in ("fn", "src", "guard", "lhs", "rhs"):
            o = getattr(instr, f, None)
            if type(o) is LBL:
                assert o.target in g.blocks
        for o in getattr(instr, "args", ()):
            if type(o) is LBL:
                assert o.target in g.blocks


def test_graphs_are_closed():
    for m in fx.PROGRAMS.values():
        _closed_graph(compile(m))


@settings(deadline=None)
@given(terms)
def test_generated_graphs_are_closed(t):
    _closed_graph(compile(t))


# ---------------------------------------------------------------------------
# execution


def test_arith_seq_runs_on_the_graph():
    g, s = load(fx.ARITH_SEQ)
    assert g.blocks[s.pc][0] == OP(NAT(1), ArithOp.ADD, NAT(2), ())
    s1 = step(g, s)
    assert s1 == PekState((1,), {(): NumP(3)}, ())
    assert step(g, s1) == Terminal(ProducedValue(NumP(3)))


def test_call_saves_caller_environment():
    g, s = load(parse_term("force thunk { prd 5 } to x in prd x"))
    s1 = step(g, s)
    assert s1 == PekState((0, 0, 0), {}, (KRet((), (1,), {}),))
    s2 = step(g, s1)
    assert s2 == PekState((1,), {(): NumP(5)}, ())
    assert step(g, s2) == Terminal(ProducedValue(NumP(5)))


def test_tail_call_pushes_no_return_frame():
    g, s = load(fx.MULT_CALL)
    s1 = step(g, s)
    assert s1 == PekState((1,), {}, (KArg(NumP(2)), KArg(NumP(3)), KArg(NumP(0))))


def test_unknown_pc_raises():
    g, _ = load(fx.ARITH_SEQ)
    with pytest.raises(UnknownPc):
        step(g, PekState((9, 9), {}, ()))


def test_stuck_block_reports_its_reason():
    g, s = load(parse_term("1 . prd 2"))
    assert step(g, s) == Stuck(StuckReason.ApplyNonFunction)


# ---------------------------------------------------------------------------
# exact agreement with the instruction-pointer machine


def _drive_pair(m, fuel=300):
    prog = as_prog(m)
    g = compile(prog)
    s = pek.load(prog)
    for _ in range(fuel):
        r_cfg = step(g, s)
        r_pek = pek.step(prog, s)
        assert r_cfg == r_pek, (r_cfg, r_pek)
        if type(r_cfg) is not PekState:
            return
        s = r_cfg


def test_lockstep_on_fixtures():
    for prog in fx.PROGRAMS.values():
        _drive_pair(prog)


@settings(deadline=None)
@given(terms)
def test_lockstep_on_generated_terms(t):
    _drive_pair(close_term(t), fuel=80)
    _drive_pair(t, fuel=40)


# ---------------------------------------------------------------------------
# unloading


def test_unload_of_initial_state():
    for m in fx.PROGRAMS.values():
        g, s = load(m)
        assert alpha_eq(unload(g, s), m)


def test_unload_after_one_step_matches_structural_residual():
    g, s = load(fx.ARITH_SEQ)
    s1 = step(g, s)
    r = sos.step(fx.ARITH_SEQ)
    assert alpha_eq(unload(g, s1), r.term)


# ---------------------------------------------------------------------------
# emission


def test_records_shape():
    out = records(compile(MULT))
    lines = out.split("\n")
    assert len(lines) == 11
    for line in lines:
        assert len(line.split("\t")) == 5
    label, path, mnem, ops, succs = lines[0].split("\t")
    assert (label, path, mnem, ops, succs) == ("0", "0", "RET", "LBL:1", "")
    assert lines[10].split("\t")[2] == "TAIL"
    assert records(compile(MULT)) == out  # deterministic


def test_record_paths_are_root_first():
    out = records(compile(fx.ARITH_SEQ))
    first = out.split("\n")[0].split("\t")
    assert first[1] == "0"
    assert "DST:ε" in first[3]


def test_describe_format():
    g, s = load(fx.ARITH_SEQ)
    assert describe(g, s, 0) == "cfg 0: pc=0 instr=OP env=0 kont=0"


def test_duplicate_binder_names_are_disambiguated():
    g = compile(parse_term("1 + 1 to x in 2 + 2 to x in prd x"))
    out = print_cfg(g)
    assert "x#ε" in out and "x#1" in out
