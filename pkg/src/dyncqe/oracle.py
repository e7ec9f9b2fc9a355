"""Brute-force ground truth for small instances.

Two independent pieces live here. The chase decides entailment of a BUCQ
from a TBox and an ABox without any query rewriting, which gives an
external check on the reformulation algorithm. Censor enumeration walks
every subset of the closure to compute optimal censors, the state-censor
induction and the answer sets of the alternative semantics.

Subsets of the closure are bitmasks over its canonically sorted atoms;
numpy does the per-subset work in bulk.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .core import ABox, Atom, BUCQ, CQEError, CQEInstance, Const, TBox, Var
from .evaluator import closure, find_images, holds_bucq
from .rewriter import EMPTY_POLICY, perfect_ref, policy_query


class OracleError(CQEError):
    pass


class LimitExceeded(OracleError):
    """The instance is too large for exhaustive enumeration."""


class CyclicTBox(OracleError):
    """The chase of this TBox may not terminate."""


class DepthExhausted(OracleError):
    """The chase hit its generation bound before saturating."""


@dataclass(frozen=True)
class OracleLimits:
    max_closure_atoms: int = 18
    chase_depth: int = 6

    def __post_init__(self):
        if self.max_closure_atoms <= 0 or self.chase_depth <= 0:
            raise ValueError("oracle limits must be positive")


DEFAULT_LIMITS = OracleLimits()


# ---------------------------------------------------------------------------
# the chase

@dataclass(frozen=True)
class Null:
    """Labelled null introduced by an existential right-hand side."""

    ident: int
    depth: int

    def __str__(self) -> str:
        return f"_:n{self.ident}"


@dataclass(frozen=True)
class ChaseResult:
    facts: frozenset      # (pred, args) tuples over constants and nulls
    saturated: bool
    nulls: int


def _role_edge(name: str, inverse: bool, s, o):
    return (name, (o, s) if inverse else (s, o))


def _members(facts_by_pred, basic):
    """Terms ``t`` such that the facts assert ``basic(t)``, with a witness partner."""
    if basic.kind == "concept":
        for _, (t,) in facts_by_pred.get(basic.name, ()):
            yield t, None
    else:
        for _, (s, o) in facts_by_pred.get(basic.name, ()):
            yield (o, s) if basic.inverse else (s, o)


def existential_graph(tbox: TBox) -> dict:
    """Which directed roles a null reached through a role may spawn.

    A null created by ``R(t, n)`` satisfies ``EX R-`` and every super-role
    of ``R-``. It spawns a fresh ``R'`` edge when ``EX R-`` entails ``EX R'``
    unless ``R'`` is already one of those roles. A cycle here means the
    restricted chase can run forever.
    """
    pos = tbox.positive
    roles = sorted({(b.name, inv) for ax in pos for b in (ax.lhs, ax.rhs)
                    if b.kind != "concept" for inv in (False, True)})

    def super_roles(r):
        out, todo = {r}, [r]
        while todo:
            name, inv = todo.pop()
            for ax in pos:
                if ax.is_role and ax.lhs.name == name:
                    if ax.lhs.inverse == inv:
                        nxt = (ax.rhs.name, ax.rhs.inverse)
                    else:
                        nxt = (ax.rhs.name, not ax.rhs.inverse)
                    if nxt not in out:
                        out.add(nxt)
                        todo.append(nxt)
        return out

    def concept_closure(start):
        # basic concepts as (kind, name, inverse)
        out, todo = set(start), list(start)
        while todo:
            b = todo.pop()
            for ax in pos:
                if ax.is_role:
                    if b[0] == "exists" and ax.lhs.name == b[1]:
                        same = ax.lhs.inverse == b[2]
                        nxt = ("exists", ax.rhs.name, ax.rhs.inverse if same else not ax.rhs.inverse)
                    else:
                        continue
                else:
                    if (ax.lhs.kind, ax.lhs.name, ax.lhs.inverse) != b:
                        continue
                    nxt = (ax.rhs.kind, ax.rhs.name, ax.rhs.inverse)
                if nxt not in out:
                    out.add(nxt)
                    todo.append(nxt)
        return out

    graph = {}
    for r in roles:
        held = {(n, not i) for n, i in super_roles(r)}
        start = {("exists", n, i) for n, i in held}
        spawned = {(b[1], b[2]) for b in concept_closure(start) if b[0] == "exists"}
        graph[r] = sorted(spawned - held)
    return graph


def is_chase_finite(tbox: TBox) -> bool:
    graph = existential_graph(tbox)
    state = {}

    def visit(r) -> bool:
        state[r] = 1
        for nxt in graph.get(r, ()):
            s = state.get(nxt, 0)
            if s == 1 or (s == 0 and not visit(nxt)):
                return False
        state[r] = 2
        return True

    return all(state.get(r, 0) == 2 or visit(r) for r in graph)


def chase(tbox: TBox, abox: ABox, depth: int = DEFAULT_LIMITS.chase_depth) -> ChaseResult:
    """Restricted chase of ``abox`` under the positive inclusions of ``tbox``.

    Nulls deeper than ``depth`` are never created; if one was needed the
    result is reported as not saturated.
    """
    if not is_chase_finite(tbox):
        raise CyclicTBox("existential rules of the TBox form a cycle")
    facts = {(a.pred, a.args) for a in abox.atoms}
    pos = tbox.positive
    counter = itertools.count(1)
    saturated = True

    def term_depth(t):
        return t.depth if isinstance(t, Null) else 0

    def index():
        by_pred: dict = {}
        for f in facts:
            by_pred.setdefault(f[0], []).append(f)
        return by_pred

    plain = [ax for ax in pos if ax.is_role or ax.rhs.kind == "concept"]
    creating = [ax for ax in pos if not ax.is_role and ax.rhs.kind == "exists"]
    while True:
        # full rules first, so existential ones only fire when really unmet
        while True:
            by_pred = index()
            new = set()
            for ax in plain:
                r = ax.rhs
                for t, partner in _members(by_pred, ax.lhs):
                    if ax.is_role:
                        new.add(_role_edge(r.name, r.inverse, t, partner))
                    else:
                        new.add((r.name, (t,)))
            if new <= facts:
                break
            facts |= new
        by_pred = index()
        created = False
        for ax in creating:
            r = ax.rhs
            for t, _ in list(_members(by_pred, ax.lhs)):
                if any(u == t for u, _ in _members(by_pred, r)):
                    continue
                d = term_depth(t) + 1
                if d > depth:
                    saturated = False
                    continue
                edge = _role_edge(r.name, r.inverse, t, Null(next(counter), d))
                facts.add(edge)
                by_pred.setdefault(edge[0], []).append(edge)
                created = True
        if not created:
            break
    return ChaseResult(frozenset(facts), saturated, next(counter) - 1)


def _homomorphic(atoms, facts_by_pred, env=None) -> bool:
    env = env or {}
    if not atoms:
        return True
    head, rest = atoms[0], atoms[1:]
    for _, args in facts_by_pred.get(head.pred, ()):
        e = dict(env)
        ok = True
        for t, v in zip(head.args, args):
            if isinstance(t, Var):
                if e.setdefault(t, v) != v:
                    ok = False
                    break
            elif t != v:
                ok = False
                break
        if ok and _homomorphic(rest, facts_by_pred, e):
            return True
    return False


def chase_entails(tbox: TBox, abox: ABox, q: BUCQ,
                  depth: int = DEFAULT_LIMITS.chase_depth) -> bool:
    """Whether T and A entail ``q``, decided on the chase."""
    res = chase(tbox, abox, depth)
    if not res.saturated:
        raise DepthExhausted(f"chase not saturated within depth {depth}")
    by_pred: dict = {}
    for f in res.facts:
        by_pred.setdefault(f[0], []).append(f)
    return any(_homomorphic(d.atoms, by_pred) for d in q.disjuncts)


def chase_closure(tbox: TBox, abox: ABox, depth: int = DEFAULT_LIMITS.chase_depth) -> ABox:
    """Ground atoms over constants in the chase (equals the closure when saturated)."""
    res = chase(tbox, abox, depth)
    if not res.saturated:
        raise DepthExhausted(f"chase not saturated within depth {depth}")
    return ABox(frozenset(Atom(p, args) for p, args in res.facts
                          if all(isinstance(t, Const) for t in args)))


# ---------------------------------------------------------------------------
# censor enumeration


class CensorSpace:
    """All subsets of the closure of an instance, as bitmasks."""

    def __init__(self, instance: CQEInstance, limits: OracleLimits = DEFAULT_LIMITS):
        self.instance = instance
        self.closure = closure(instance.tbox, instance.abox)
        self.atoms = self.closure.sorted()
        n = len(self.atoms)
        if n > limits.max_closure_atoms:
            raise LimitExceeded(f"closure has {n} atoms, limit is {limits.max_closure_atoms}")
        self.n = n
        self.bit = {a: 1 << k for k, a in enumerate(self.atoms)}
        self.masks = np.arange(1 << n, dtype=np.int64)
        self.consistent = ~self._contains_any(self._violations())
        self._optimal = None

    def mask_of(self, atoms) -> int:
        return sum(self.bit[a] for a in atoms)

    def censor(self, mask: int) -> ABox:
        return ABox(frozenset(a for a in self.atoms if mask & self.bit[a]))

    def _violations(self) -> list:
        pq = policy_query(self.instance.policy)
        if pq is EMPTY_POLICY:
            return []
        rewritten = perfect_ref(pq, self.instance.tbox)
        return [self.mask_of(img) for img in find_images(rewritten, self.closure)]

    def _contains_any(self, images) -> np.ndarray:
        hit = np.zeros(len(self.masks), dtype=bool)
        for m in images:
            hit |= (self.masks & m) == m
        return hit

    def entails(self, q: BUCQ) -> np.ndarray:
        """Per subset: whether T together with the subset entails ``q``."""
        rewritten = perfect_ref(q, self.instance.tbox)
        return self._contains_any([self.mask_of(i) for i in find_images(rewritten, self.closure)])

    def optimal(self) -> list:
        """Masks of the maximal consistent subsets, ascending."""
        if self._optimal is None:
            maximal = self.consistent.copy()
            for k in range(self.n):
                b = 1 << k
                ext = self.masks | b
                maximal &= ((self.masks & b) != 0) | ~self.consistent[ext]
            self._optimal = [int(m) for m in np.flatnonzero(maximal)]
        return self._optimal


def _space(instance, limits) -> CensorSpace:
    return instance if isinstance(instance, CensorSpace) else CensorSpace(instance, limits)


def _sort(censors) -> list:
    return sorted(censors, key=lambda c: (len(c), [a.sort_key() for a in c.sorted()]))


def _censor_entails(space: CensorSpace, censor: ABox, q: BUCQ) -> bool:
    return holds_bucq(perfect_ref(q, space.instance.tbox), censor)


def opt_cens(instance, limits: OracleLimits = DEFAULT_LIMITS) -> list:
    space = _space(instance, limits)
    return _sort(space.censor(m) for m in space.optimal())


def opt_cens_entailing(instance, q: BUCQ, limits: OracleLimits = DEFAULT_LIMITS) -> list:
    space = _space(instance, limits)
    return [c for c in opt_cens(space) if _censor_entails(space, c, q)]


def st_cens_chain(instance, queries, limits: OracleLimits = DEFAULT_LIMITS) -> list:
    """State censors after each prefix of ``queries``, starting with the empty one."""
    space = _space(instance, limits)
    pool = opt_cens(space)
    chain = [pool]
    for q in queries:
        kept = [c for c in pool if _censor_entails(space, c, q)]
        if kept:
            pool = kept
        chain.append(pool)
    return chain


def st_cens(instance, queries, limits: OracleLimits = DEFAULT_LIMITS) -> list:
    return st_cens_chain(instance, queries, limits)[-1]


def ent_q_flags(instance, queries, limits: OracleLimits = DEFAULT_LIMITS) -> list:
    """For each position ``i``: whether ``queries[i]`` is entailed after the full sequence."""
    space = _space(instance, limits)
    pool = st_cens(space, queries)
    return [all(_censor_entails(space, c, q) for c in pool) for q in queries]


def ent_q(instance, queries, limits: OracleLimits = DEFAULT_LIMITS) -> list:
    """The queries of the sequence entailed by the state, in sequence order."""
    flags = ent_q_flags(instance, queries, limits)
    return [q for q, f in zip(queries, flags) if f]


def dyn_answers(instance, queries, limits: OracleLimits = DEFAULT_LIMITS) -> list:
    """Answer to each query at the moment it is asked."""
    space = _space(instance, limits)
    chain = st_cens_chain(space, queries)
    return [all(_censor_entails(space, c, q) for c in chain[i + 1])
            for i, q in enumerate(queries)]


def skeptical_entails(instance, q: BUCQ, limits: OracleLimits = DEFAULT_LIMITS) -> bool:
    space = _space(instance, limits)
    return all(_censor_entails(space, c, q) for c in opt_cens(space))


def iga_entails(instance, q: BUCQ, limits: OracleLimits = DEFAULT_LIMITS) -> bool:
    space = _space(instance, limits)
    masks = space.optimal()
    common = masks[0]
    for m in masks[1:]:
        common &= m
    return _censor_entails(space, space.censor(common), q)


def is_maximally_cooperative(instance, queries, censor: ABox,
                             limits: OracleLimits = DEFAULT_LIMITS,
                             optimal_only: bool = False) -> bool:
    """Whether no censor is more cooperative than ``censor`` on ``queries``.

    A competitor is more cooperative if it gives the same answers on some
    prefix and then says yes to the next query where ``censor`` says no.
    Competitors range over every censor, or over the optimal ones only.
    """
    space = _space(instance, limits)
    if optimal_only:
        pool = np.zeros(len(space.masks), dtype=bool)
        pool[space.optimal()] = True
    else:
        pool = space.consistent.copy()
    mine = [_censor_entails(space, censor, q) for q in queries]
    agree = pool
    for q, ans in zip(queries, mine):
        theirs = space.entails(q)
        if not ans and np.any(agree & theirs):
            return False
        agree = agree & (theirs == ans)
    return True
