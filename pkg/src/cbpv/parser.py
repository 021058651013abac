"""Recursive-descent parser for the concrete term syntax.

Grammar (``to`` binds the nearest preceding term; ``.`` is right-associative
and its body extends maximally, as do lambda and letrec bodies):

    term  := head ("to" IDENT "in" term)?
    head  := "force" value | "prd" value
           | "if0" value "{" term "}" "{" term "}"
           | "\\" IDENT "." term
           | "letrec" binds "in" term
           | "(" term ")"
           | value "." term
           | value ARITH value
    binds := IDENT "=" term ("and" IDENT "=" term)*
    value := IDENT | INT | "thunk" "{" term "}"
"""

import re
from dataclasses import dataclass

from .syntax import App, ArithOp, Force, If0, Lam, LetRec, NumV, Op, Prd, Seq, ThunkV, VarV


class ParseError(Exception):
    def __init__(self, msg: str, line: int, col: int):
        super().__init__(f"{line}:{col}: {msg}")
        self.line = line
        self.col = col


_KEYWORDS = frozenset({"force", "prd", "thunk", "to", "in", "letrec", "and", "if0"})
_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_']*")
_INT = re.compile(r"[0-9]+")
_ARITH = {"+": ArithOp.ADD, "-": ArithOp.SUB, "*": ArithOp.MUL}
_SIMPLE = {
    "{": "LBRACE",
    "}": "RBRACE",
    "(": "LPAREN",
    ")": "RPAREN",
    ".": "DOT",
    "\\": "LAMBDA",
    "=": "EQ",
}
# a "-" right before a digit is a negative numeral unless a value just ended
_VALUE_END = frozenset({"INT", "IDENT", "RBRACE", "RPAREN"})


@dataclass(frozen=True)
class _Tok:
    kind: str
    text: str
    line: int
    col: int


def _tokens(src: str):
    toks = []
    i, line, col = 0, 1, 1
    n = len(src)
    while i < n:
        c = src[i]
        if c == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if c in " \t\r":
            i += 1
            col += 1
            continue
        if (
            c == "-"
            and i + 1 < n
            and src[i + 1].isdigit()
            and (not toks or toks[-1].kind not in _VALUE_END)
        ):
            m = _INT.match(src, i + 1)
            toks.append(_Tok("INT", "-" + m.group(), line, col))
            col += m.end() - i
            i = m.end()
            continue
        if c.isdigit():
            m = _INT.match(src, i)
            toks.append(_Tok("INT", m.group(), line, col))
            col += m.end() - i
            i = m.end()
            continue
        if c.isalpha() or c == "_":
            m = _IDENT.match(src, i)
            text = m.group()
            toks.append(_Tok("KW" if text in _KEYWORDS else "IDENT", text, line, col))
            col += len(text)
            i = m.end()
            continue
        if c in _ARITH:
            toks.append(_Tok("ARITH", c, line, col))
            i += 1
            col += 1
            continue
        kind = _SIMPLE.get(c)
        if kind is None:
            raise ParseError(f"unexpected character {c!r}", line, col)
        toks.append(_Tok(kind, c, line, col))
        i += 1
        col += 1
    toks.append(_Tok("EOF", "", line, col))
    return toks


class _Parser:
    def __init__(self, toks):
        self.toks = toks
        self.i = 0

    def peek(self) -> _Tok:
        return self.toks[self.i]

    def advance(self) -> _Tok:
        t = self.toks[self.i]
        self.i += 1
        return t

    def fail(self, msg: str):
        t = self.peek()
        raise ParseError(msg, t.line, t.col)

    def expect(self, kind: str, text: str = None) -> _Tok:
        t = self.peek()
        if t.kind != kind or (text is not None and t.text != text):
            found = t.text if t.text else "end of input"
            self.fail(f"expected {text or kind.lower()!r}, found {found!r}")
        return self.advance()

    def at_kw(self, word: str) -> bool:
        t = self.peek()
        return t.kind == "KW" and t.text == word

    # -- grammar ------------------------------------------------------------

    def term(self):
        head = self.head()
        if self.at_kw("to"):
            self.advance()
            binder = self.expect("IDENT").text
            self.expect("KW", "in")
            return Seq(head, binder, self.term())
        return head

    def head(self):
        t = self.peek()
        if t.kind == "KW":
            if t.text == "force":
                self.advance()
                return Force(self.value())
            if t.text == "prd":
                self.advance()
                return Prd(self.value())
            if t.text == "if0":
                self.advance()
                guard = self.value()
                self.expect("LBRACE")
                then = self.term()
                self.expect("RBRACE")
                self.expect("LBRACE")
                orelse = self.term()
                self.expect("RBRACE")
                return If0(guard, then, orelse)
            if t.text == "letrec":
                self.advance()
                defs = [self.bind()]
                while self.at_kw("and"):
                    self.advance()
                    defs.append(self.bind())
                self.expect("KW", "in")
                return LetRec(tuple(defs), self.term())
        if t.kind == "LAMBDA":
            self.advance()
            binder = self.expect("IDENT").text
            self.expect("DOT")
            return Lam(binder, self.term())
        if t.kind == "LPAREN":
            self.advance()
            inner = self.term()
            self.expect("RPAREN")
            return inner
        v = self.value()
        nxt = self.peek()
        if nxt.kind == "DOT":
            self.advance()
            return App(v, self.term())
        if nxt.kind == "ARITH":
            self.advance()
            return Op(v, _ARITH[nxt.text], self.value())
        self.fail("expected '.' or an arithmetic operator after a value")

    def bind(self):
        name = self.expect("IDENT").text
        self.expect("EQ")
        return (name, self.term())

    def value(self):
        t = self.peek()
        if t.kind == "IDENT":
            self.advance()
            return VarV(t.text)
        if t.kind == "INT":
            self.advance()
            return NumV(int(t.text))
        if t.kind == "KW" and t.text == "thunk":
            self.advance()
            self.expect("LBRACE")
            body = self.term()
            self.expect("RBRACE")
            return ThunkV(body)
        found = t.text if t.text else "end of input"
        self.fail(f"expected a value, found {found!r}")


def parse_term(src: str):
    p = _Parser(_tokens(src))
    m = p.term()
    if p.peek().kind != "EOF":
        p.fail(f"unexpected trailing input {p.peek().text!r}")
    return m
