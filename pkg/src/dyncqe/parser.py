"""Text formats for TBoxes, ABoxes, policies, queries and FO sentences.

Line-oriented grammar shared by the ``.tbox``, ``.abox``, ``.policy`` and
``.bucq`` files::

    # comment to end of line
    Abc ISA Antiseizure            # A1 <= A2
    EX buy- ISA Drug               # exists buy^- <= Drug
    A ISA NOT B                    # negative inclusion
    buy(john, m_a)                 # ABox fact
    DENY buy(?x,?y), Antiseizure(?y)
    ASK A(?x), R(?x,?y) OR B(?x)

Identifiers match ``[A-Za-z][A-Za-z0-9_]*``; variables are identifiers
prefixed with ``?``. FO sentences use the s-expression form produced by
:func:`render_fo`.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .core import (
    ABox, And, Atom, Axiom, BCQ, BUCQ, Basic, Bottom, Const, CQEError, Eq,
    Exists, Formula, Not, Or, Policy, TBox, Top, Var, FALSE, TRUE,
)

KEYWORDS = frozenset({"ISA", "NOT", "EX", "DENY", "ASK", "OR"})


class SourceError(CQEError, ValueError):
    """Lexical or grammatical problem at a 1-based line/column."""

    def __init__(self, line: int, column: int, message: str):
        super().__init__(f"{line}:{column}: {message}")
        self.line = line
        self.column = column
        self.message = message


_TOKEN = re.compile(r"""
    (?P<ws>\s+)
  | (?P<comment>\#.*)
  | (?P<var>\?[A-Za-z][A-Za-z0-9_]*)
  | (?P<ident>[A-Za-z][A-Za-z0-9_]*)
  | (?P<punct>[(),=\-])
""", re.VERBOSE)


@dataclass
class Token:
    kind: str
    text: str
    line: int
    col: int


def tokenize(text: str, line: int = 1) -> list:
    tokens = []
    for lineno, src in enumerate(text.split("\n"), start=line):
        pos = 0
        while pos < len(src):
            m = _TOKEN.match(src, pos)
            if m is None:
                raise SourceError(lineno, pos + 1, f"unexpected character {src[pos]!r}")
            kind = m.lastgroup
            if kind not in ("ws", "comment"):
                tokens.append(Token(kind, m.group(), lineno, pos + 1))
            pos = m.end()
    return tokens


class _Stream:
    def __init__(self, tokens: list, line: int = 1):
        self.tokens = tokens
        self.pos = 0
        self.line = line

    def peek(self, k: int = 0):
        i = self.pos + k
        return self.tokens[i] if i < len(self.tokens) else None

    def next(self) -> Token:
        tok = self.peek()
        if tok is None:
            raise self.error("unexpected end of input")
        self.pos += 1
        return tok

    def at_end(self) -> bool:
        return self.pos >= len(self.tokens)

    def error(self, message: str, tok: Token | None = None) -> SourceError:
        tok = tok or self.peek()
        if tok is None:
            last = self.tokens[-1] if self.tokens else None
            if last is None:
                return SourceError(self.line, 1, message)
            return SourceError(last.line, last.col + len(last.text), message)
        return SourceError(tok.line, tok.col, message)

    def expect(self, text: str) -> Token:
        tok = self.peek()
        if tok is None or tok.text != text:
            found = "end of input" if tok is None else repr(tok.text)
            raise self.error(f"expected {text!r}, found {found}")
        return self.next()

    def accept(self, text: str) -> bool:
        tok = self.peek()
        if tok is not None and tok.text == text:
            self.pos += 1
            return True
        return False


class Signature:
    """Predicate arities shared across every file of one instance.

    The first use of a predicate fixes its arity; a later use with another
    arity is a :class:`SourceError`.
    """

    def __init__(self, arities: dict | None = None):
        self.arities: dict = dict(arities or {})

    def declare(self, name: str, arity: int, tok: Token | None = None) -> None:
        known = self.arities.get(name)
        if known is None:
            self.arities[name] = arity
        elif known != arity:
            line, col = (tok.line, tok.col) if tok else (1, 1)
            kind = {1: "concept", 2: "role"}
            raise SourceError(line, col, f"{name} used as a {kind.get(arity, arity)} "
                                         f"but declared as a {kind.get(known, known)}")

    def get(self, name: str):
        return self.arities.get(name)


# ---------------------------------------------------------------------------
# shared pieces


def _ident(s: _Stream, what: str = "identifier") -> Token:
    tok = s.next()
    if tok.kind != "ident":
        raise s.error(f"expected {what}, found {tok.text!r}", tok)
    return tok


def _term(s: _Stream, allow_vars: bool = True):
    tok = s.next()
    if tok.kind == "var":
        if not allow_vars:
            raise s.error(f"variable {tok.text} not allowed here", tok)
        return Var(tok.text[1:])
    if tok.kind == "ident":
        return Const(tok.text)
    raise s.error(f"expected a term, found {tok.text!r}", tok)


def _atom(s: _Stream, sig: Signature | None, allow_vars: bool = True) -> Atom:
    name = _ident(s, "predicate name")
    if name.text in KEYWORDS:
        raise s.error(f"keyword {name.text} used as a predicate", name)
    s.expect("(")
    args = [_term(s, allow_vars)]
    while s.accept(","):
        args.append(_term(s, allow_vars))
    s.expect(")")
    if len(args) > 2:
        raise s.error(f"{name.text} has {len(args)} arguments; at most 2 allowed", name)
    if sig is not None:
        sig.declare(name.text, len(args), name)
    return Atom(name.text, tuple(args))


def _atom_list(s: _Stream, sig) -> list:
    atoms = [_atom(s, sig)]
    while s.accept(","):
        atoms.append(_atom(s, sig))
    return atoms


def _lines(text: str):
    """Non-blank, non-comment lines with their 1-based numbers."""
    for lineno, line in enumerate(text.split("\n"), start=1):
        tokens = tokenize(line, lineno)
        if tokens:
            yield lineno, tokens


# ---------------------------------------------------------------------------
# TBox


def _side(s: _Stream):
    """Parse ``EX name[-]`` or ``name[-]`` into (shape, name, inverse, token)."""
    tok = s.peek()
    is_exists = tok is not None and tok.text == "EX" and tok.kind == "ident"
    if is_exists:
        s.next()
    name = _ident(s, "concept or role name")
    if name.text in KEYWORDS:
        raise s.error(f"keyword {name.text} used as a name", name)
    inverse = s.accept("-")
    shape = "exists" if is_exists else ("inverse" if inverse else "bare")
    return shape, name.text, inverse, name


def parse_tbox(text: str, signature: Signature | None = None) -> TBox:
    """Parse one inclusion per line.

    Whether ``A ISA B`` relates concepts or roles is decided by the shape of
    the sides (``EX`` forces concepts, a ``-`` suffix forces roles), then by
    arities known to ``signature`` or fixed elsewhere in the file; names still
    undetermined default to concepts.
    """
    sig = signature if signature is not None else Signature()
    raw = []
    for lineno, tokens in _lines(text):
        s = _Stream(tokens, lineno)
        lhs = _side(s)
        isa = s.next() if not s.at_end() else None
        if isa is None or isa.text != "ISA":
            raise s.error("expected 'ISA'", isa)
        negated = s.accept("NOT")
        rhs = _side(s)
        if not s.at_end():
            raise s.error(f"unexpected {s.peek().text!r} after axiom")
        shapes = {lhs[0], rhs[0]}
        if "exists" in shapes and "inverse" in shapes:
            raise SourceError(lineno, lhs[3].col, "inclusion mixes a concept and a role")
        raw.append((lineno, lhs, rhs, negated))

    # Fix the arities forced by shape, then propagate across bare/bare lines.
    for _, lhs, rhs, _ in raw:
        for shape, name, _, tok in (lhs, rhs):
            if shape in ("exists", "inverse"):
                sig.declare(name, 2, tok)
    kind_of: dict = {}
    for i, (_, lhs, rhs, _) in enumerate(raw):
        shapes = {lhs[0], rhs[0]}
        if "exists" in shapes:
            kind_of[i] = 1
        elif "inverse" in shapes:
            kind_of[i] = 2
    changed = True
    while changed:
        changed = False
        for i, (_, lhs, rhs, _) in enumerate(raw):
            if i in kind_of:
                continue
            known = {sig.get(lhs[1]), sig.get(rhs[1])} - {None}
            if len(known) == 2:
                raise SourceError(raw[i][0], lhs[3].col, "inclusion mixes a concept and a role")
            if known:
                kind_of[i] = known.pop()
                changed = True
        for i, k in kind_of.items():
            _, lhs, rhs, _ = raw[i]
            for shape, name, _, tok in (lhs, rhs):
                if shape == "bare":
                    before = sig.get(name)
                    sig.declare(name, k, tok)
                    changed = changed or before is None
    axioms = []
    for i, (lineno, lhs, rhs, negated) in enumerate(raw):
        k = kind_of.get(i)
        if k is None:
            k = 1
            sig.declare(lhs[1], 1, lhs[3])
            sig.declare(rhs[1], 1, rhs[3])
        sides = []
        for shape, name, inverse, tok in (lhs, rhs):
            if shape == "exists":
                sides.append(Basic("exists", name, inverse))
            elif k == 2:
                sides.append(Basic("role", name, inverse))
            else:
                sides.append(Basic("concept", name))
        axioms.append(Axiom(sides[0], sides[1], negated))
    return TBox(tuple(axioms))


def render_tbox(tbox: TBox) -> str:
    return "".join(f"{ax}\n" for ax in tbox.axioms)


# ---------------------------------------------------------------------------
# ABox, policy, queries


def parse_abox(text: str, signature: Signature | None = None) -> ABox:
    sig = signature if signature is not None else Signature()
    atoms = []
    for lineno, tokens in _lines(text):
        s = _Stream(tokens, lineno)
        atoms.append(_atom(s, sig, allow_vars=False))
        if not s.at_end():
            raise s.error(f"unexpected {s.peek().text!r} after fact")
    return ABox(frozenset(atoms))


def render_abox(abox: ABox) -> str:
    return "".join(f"{a}\n" for a in abox.sorted())


def parse_policy(text: str, signature: Signature | None = None) -> Policy:
    sig = signature if signature is not None else Signature()
    denials = []
    for lineno, tokens in _lines(text):
        s = _Stream(tokens, lineno)
        kw = s.next()
        if kw.text != "DENY":
            raise s.error(f"expected 'DENY', found {kw.text!r}", kw)
        if s.at_end():
            raise s.error("denial with an empty body")
        denials.append(BCQ(tuple(_atom_list(s, sig))))
        if not s.at_end():
            raise s.error(f"unexpected {s.peek().text!r} after denial")
    return Policy(tuple(denials))


def render_policy(policy: Policy) -> str:
    return "".join(f"DENY {', '.join(str(a) for a in d.atoms)}\n" for d in policy.denials)


def _bucq_body(s: _Stream, sig) -> BUCQ:
    if s.at_end():
        raise s.error("query with no atoms")
    disjuncts = [BCQ(tuple(_atom_list(s, sig)))]
    while s.accept("OR"):
        disjuncts.append(BCQ(tuple(_atom_list(s, sig))))
    if not s.at_end():
        raise s.error(f"unexpected {s.peek().text!r} in query")
    return BUCQ(tuple(disjuncts))


def parse_bucq(text: str, signature: Signature | None = None,
               keyword: bool = True) -> BUCQ:
    """Parse ``ASK bcq (OR bcq)*``; with ``keyword=False`` the ``ASK`` is omitted."""
    tokens = tokenize(text)
    s = _Stream(tokens)
    if keyword:
        kw = s.next() if not s.at_end() else None
        if kw is None or kw.text != "ASK":
            raise s.error("expected 'ASK'", kw)
    return _bucq_body(s, signature)


def parse_queries(text: str, signature: Signature | None = None) -> list:
    """One ``ASK`` query per non-comment line."""
    out = []
    for lineno, tokens in _lines(text):
        s = _Stream(tokens, lineno)
        kw = s.next()
        if kw.text != "ASK":
            raise s.error(f"expected 'ASK', found {kw.text!r}", kw)
        out.append(_bucq_body(s, signature))
    return out


def render_bucq(q: BUCQ) -> str:
    return "ASK " + " OR ".join(", ".join(str(a) for a in d.atoms) for d in q.disjuncts)


# ---------------------------------------------------------------------------
# FO sentences


def render_fo(phi: Formula) -> str:
    if isinstance(phi, Top):
        return "TRUE"
    if isinstance(phi, Bottom):
        return "FALSE"
    if isinstance(phi, Atom):
        return str(phi)
    if isinstance(phi, Eq):
        return f"(= {phi.left} {phi.right})"
    if isinstance(phi, Not):
        return f"(NOT {render_fo(phi.body)})"
    if isinstance(phi, And):
        return "(AND " + " ".join(render_fo(c) for c in phi.children) + ")"
    if isinstance(phi, Or):
        return "(OR " + " ".join(render_fo(c) for c in phi.children) + ")"
    if isinstance(phi, Exists):
        vs = " ".join(str(v) for v in phi.vars)
        return f"(EXISTS ({vs}) {render_fo(phi.body)})"
    raise TypeError(f"not a formula: {phi!r}")


def _fo(s: _Stream) -> Formula:
    tok = s.next()
    if tok.kind == "ident":
        nxt = s.peek()
        if nxt is not None and nxt.text == "(" and nxt.line == tok.line \
                and nxt.col == tok.col + len(tok.text):
            s.pos -= 1
            return _atom(s, None)
        if tok.text == "TRUE":
            return TRUE
        if tok.text == "FALSE":
            return FALSE
        raise s.error(f"unexpected {tok.text!r}", tok)
    if tok.text != "(":
        raise s.error(f"unexpected {tok.text!r}", tok)
    head = s.next()
    if head.text == "=":
        left, right = _term(s), _term(s)
        s.expect(")")
        return Eq(left, right)
    if head.text == "NOT":
        body = _fo(s)
        s.expect(")")
        return Not(body)
    if head.text in ("AND", "OR"):
        children = []
        while s.peek() is not None and s.peek().text != ")":
            children.append(_fo(s))
        if not children:
            raise s.error(f"({head.text}) needs at least one child", head)
        s.expect(")")
        return (And if head.text == "AND" else Or)(tuple(children))
    if head.text == "EXISTS":
        s.expect("(")
        vars_ = []
        while s.peek() is not None and s.peek().kind == "var":
            vars_.append(Var(s.next().text[1:]))
        if not vars_:
            raise s.error("EXISTS needs at least one variable", head)
        s.expect(")")
        body = _fo(s)
        s.expect(")")
        return Exists(tuple(vars_), body)
    raise s.error(f"unknown connective {head.text!r}", head)


def parse_fo(text: str) -> Formula:
    s = _Stream(tokenize(text))
    phi = _fo(s)
    if not s.at_end():
        raise s.error(f"trailing input {s.peek().text!r}")
    return phi
