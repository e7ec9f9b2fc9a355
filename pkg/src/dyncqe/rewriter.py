"""Query reformulation.

The stack, bottom-up:

* :func:`perfect_ref` - DL-Lite_R perfect reformulation of a BUCQ, using
  positive inclusions as rewriting rules plus atom reduction.
* :func:`enumerate_mappings` / :func:`saturate` - equality conditions under
  which an image of one BCQ also satisfies another.
* :func:`brave_ref` - existence of an optimal censor entailing a query,
  evaluated over the closure of the ABox.
* :func:`state_ref` - one guess of past answers for the powerset path.
* :func:`atom_rewr` - replaces each atom by its atomic rewritings so that
  sentences meant for the closure can be evaluated on the raw ABox.

``saturate`` is sometimes called *Unify*; the two names denote the same
formula.
"""

from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Optional

from .core import (
    DEFAULT_MAX_DISJUNCTS, FALSE, TRUE, And, Atom, BCQ, BUCQ, Basic, Bottom,
    CQESpec, CapacityExceeded, Const, Eq, Exists, Formula, Not, Or, Policy,
    TBox, Top, Var, all_vars, bcq_formula, conj, conjoin_all, constants, disj,
    exists, free_vars, fresh_names, rename_apart,
)


class _EmptyPolicy:
    """Marker returned by :func:`policy_query` for a policy without denials."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "EMPTY_POLICY"

    def __bool__(self) -> bool:
        return False


EMPTY_POLICY = _EmptyPolicy()


# ---------------------------------------------------------------------------
# unification


def _unify(pairs: Iterable, rank) -> Optional[dict]:
    """Most general unifier of term pairs, or None on a constant clash.

    Every equivalence class is represented by its constant if it has one,
    otherwise by the variable with the smallest ``rank``. The result maps each
    non-representative variable to its representative.
    """
    parent: dict = {}

    def find(t):
        parent.setdefault(t, t)
        while parent[t] != t:
            parent[t] = parent[parent[t]]
            t = parent[t]
        return t

    def better(a, b):
        if isinstance(a, Const):
            return True
        if isinstance(b, Const):
            return False
        return rank(a) < rank(b)

    for s, t in pairs:
        rs, rt = find(s), find(t)
        if rs == rt:
            continue
        if isinstance(rs, Const) and isinstance(rt, Const):
            return None
        if better(rs, rt):
            parent[rt] = rs
        else:
            parent[rs] = rt
    return {t: find(t) for t in parent if isinstance(t, Var) and find(t) != t}


# ---------------------------------------------------------------------------
# PerfectRef


def _normalise_role_pi(ax):
    """Return (sub_role, super_name) with the super-role made non-inverse."""
    lhs, rhs = ax.lhs, ax.rhs
    if rhs.inverse:
        lhs, rhs = lhs.inv(), rhs.inv()
    return lhs, rhs.name


def _occurrences(q: BCQ) -> dict:
    counts: dict = {}
    for a in q.atoms:
        for t in a.args:
            if isinstance(t, Var):
                counts[t] = counts.get(t, 0) + 1
    return counts


def _atom_rewritings(q: BCQ, i: int, tbox: TBox):
    """Atoms obtained by applying each applicable positive inclusion to atom ``i``."""
    g = q.atoms[i]
    counts = _occurrences(q)

    def unbound(t):
        return isinstance(t, Var) and counts[t] == 1

    fresh = Var(next(fresh_names(v.name for v in q.vars)))
    for ax in tbox.positive:
        if ax.is_role:
            if g.arity != 2:
                continue
            sub, sup = _normalise_role_pi(ax)
            if sup != g.pred:
                continue
            t1, t2 = g.args
            yield Atom(sub.name, (t2, t1) if sub.inverse else (t1, t2))
            continue
        rhs = ax.rhs
        if g.arity == 1:
            if rhs.kind == "concept" and rhs.name == g.pred:
                yield ax.lhs.instantiate(g.args[0], fresh)
        elif rhs.kind == "exists" and rhs.name == g.pred:
            t1, t2 = g.args
            if not rhs.inverse and unbound(t2):
                yield ax.lhs.instantiate(t1, fresh)
            elif rhs.inverse and unbound(t1):
                yield ax.lhs.instantiate(t2, fresh)


def _reduce(q: BCQ, i: int, j: int) -> Optional[BCQ]:
    a, b = q.atoms[i], q.atoms[j]
    if a.pred != b.pred or a.arity != b.arity:
        return None
    order = {v: k for k, v in enumerate(q.vars)}
    sigma = _unify(zip(a.args, b.args), order.__getitem__)
    if sigma is None:
        return None
    return q.substitute(sigma)


@lru_cache(maxsize=4096)
def perfect_ref(q: BUCQ, tbox: TBox, cap: int = DEFAULT_MAX_DISJUNCTS) -> BUCQ:
    """Perfect reformulation of ``q`` with respect to the positive inclusions of ``tbox``.

    Breadth-first to fixpoint, input disjuncts first; a BCQ is kept only the
    first time its canonical form is seen. A variable is unbound when it
    occurs exactly once in its BCQ.
    """
    seen: dict = {}
    raw: set = set()
    out: list = []
    queue: deque = deque()

    def add(bcq: BCQ):
        # most repeats are literal, so skip the canonical form for those
        atoms = frozenset(bcq.atoms)
        if atoms in raw:
            return
        raw.add(atoms)
        k = bcq.key
        if k in seen:
            return
        seen[k] = bcq
        out.append(bcq)
        queue.append(bcq)
        if len(out) > cap:
            raise CapacityExceeded(f"PerfectRef produced more than {cap} BCQs")

    for d in q.disjuncts:
        add(d)
    while queue:
        g = queue.popleft()
        for i in range(len(g.atoms)):
            for new_atom in _atom_rewritings(g, i, tbox):
                add(BCQ(g.atoms[:i] + (new_atom,) + g.atoms[i + 1:]))
        for i, j in itertools.combinations(range(len(g.atoms)), 2):
            reduced = _reduce(g, i, j)
            if reduced is not None:
                add(reduced)
    return BUCQ(tuple(out))


def policy_query(policy: Policy):
    """The BUCQ of all denial bodies, or :data:`EMPTY_POLICY`."""
    if not policy.denials:
        return EMPTY_POLICY
    return BUCQ(tuple(policy.denials))


def unsat_query(tbox: TBox) -> Optional[BUCQ]:
    """BUCQ true exactly in ABoxes that violate a negative inclusion (before rewriting)."""
    x, y, z = Var("x"), Var("y"), Var("z")
    out = []
    for ax in tbox.negative:
        if ax.is_role:
            l, r = ax.lhs, ax.rhs
            out.append(BCQ((
                Atom(l.name, (y, x) if l.inverse else (x, y)),
                Atom(r.name, (y, x) if r.inverse else (x, y)),
            )))
        else:
            out.append(BCQ((ax.lhs.instantiate(x, y), ax.rhs.instantiate(x, z))))
    return BUCQ(tuple(out)) if out else None


# ---------------------------------------------------------------------------
# mappings and Saturate


@dataclass(frozen=True)
class Mapping:
    """A mapping ``h`` of the atoms of ``qd`` into those of ``qr`` with its MGU.

    ``h[k]`` is the index in ``qr.atoms`` of the image of ``qd.atoms[k]``.
    ``restricted`` lists ``sigma`` limited to the variables of ``qr``, in
    their order of first occurrence.
    """

    h: tuple
    sigma: dict
    restricted: tuple

    def __hash__(self):
        return hash((self.h, self.restricted))


def enumerate_mappings(qd: BCQ, qr: BCQ) -> list:
    """All mappings of ``qd`` into ``qr`` admitting a most general unifier.

    Variables of ``qd`` are eliminated in favour of terms of ``qr``; when two
    ``qr`` variables are unified the later one (by first occurrence) maps to
    the earlier one. Candidates are tried in lexicographic order of the
    atom-choice vector.
    """
    qr_order = {v: k for k, v in enumerate(qr.vars)}
    n = len(qr_order)
    qd_order = {v: n + k for k, v in enumerate(qd.vars)}
    if set(qr_order) & set(qd_order):
        raise ValueError("rename the queries apart before mapping")
    rank = {**qr_order, **qd_order}.__getitem__

    choices = []
    for a in qd.atoms:
        opts = [k for k, b in enumerate(qr.atoms) if b.pred == a.pred and b.arity == a.arity]
        if not opts:
            return []
        choices.append(opts)
    out = []
    for h in itertools.product(*choices):
        pairs = [(s, t) for k, a in zip(h, qd.atoms) for s, t in zip(a.args, qr.atoms[k].args)]
        sigma = _unify(pairs, rank)
        if sigma is None:
            continue
        restricted = tuple((v, sigma[v]) for v in qr.vars if v in sigma)
        out.append(Mapping(tuple(h), sigma, restricted))
    return out


def saturate(qr: BCQ, qd: BCQ) -> Formula:
    """Disjunction over mappings of ``qd`` into ``qr`` of their equality conditions.

    The free variables of the result are variables of ``qr``.
    """
    return disj(conj(Eq(x, t) for x, t in m.restricted) for m in enumerate_mappings(qd, qr))


unify = saturate


# ---------------------------------------------------------------------------
# BraveRef and StateRef


@lru_cache(maxsize=4096)
def brave_ref(q: BUCQ, tbox: TBox, policy: Policy,
              cap: int = DEFAULT_MAX_DISJUNCTS) -> Formula:
    """Sentence true in the closure of an ABox iff some optimal censor entails ``q``.

    Each reformulated disjunct must have an image on which no rewritten
    denial is satisfied, i.e. every ``saturate`` condition is negated.
    """
    rewritten = perfect_ref(q, tbox, cap)
    pq = policy_query(policy)
    if pq is EMPTY_POLICY:
        return disj(bcq_formula(r) for r in rewritten.disjuncts)
    denials = perfect_ref(pq, tbox, cap).disjuncts
    parts = []
    for r in rewritten.disjuncts:
        guards = tuple(Not(saturate(r, rename_apart(d, r.vars))) for d in denials)
        parts.append(exists(r.vars, And(r.atoms + guards)))
    return disj(parts)


def conjoin_guess(queries, indexes, last: int, cap: int = DEFAULT_MAX_DISJUNCTS) -> BUCQ:
    """Conjunction of ``queries[l-1]`` for ``l`` in ``indexes`` (ascending), then ``queries[last-1]``."""
    return conjoin_all([queries[l - 1] for l in sorted(indexes)] + [queries[last - 1]], cap)


def state_ref(spec: CQESpec, queries, i: int, guess,
              cap: int = DEFAULT_MAX_DISJUNCTS) -> Formula:
    """The sentence for query ``i`` (1-based) under the guess that exactly
    the queries indexed by ``guess`` among ``1..i-1`` are entailed."""
    guess = frozenset(guess)
    if not 1 <= i <= len(queries):
        raise IndexError(f"query index {i} out of range 1..{len(queries)}")
    if any(not 1 <= l < i for l in guess):
        raise ValueError(f"guess {sorted(guess)} not within 1..{i - 1}")
    parts = []
    for j in range(1, i):
        if j in guess:
            continue
        before = [l for l in guess if l < j]
        parts.append(Not(brave_ref(conjoin_guess(queries, before, j, cap),
                                   spec.tbox, spec.policy, cap)))
    parts.append(brave_ref(conjoin_guess(queries, guess, i, cap), spec.tbox, spec.policy, cap))
    return conj(parts)


# ---------------------------------------------------------------------------
# AtomRewr


def _sub_closure(tbox: TBox):
    """Reverse reachability maps for basic concepts and roles under ``tbox``."""
    concept_sup: dict = {}
    role_sup: dict = {}

    def edge(table, sub, sup):
        table.setdefault(sup, [])
        if sub not in table[sup]:
            table[sup].append(sub)

    for ax in tbox.positive:
        if ax.is_role:
            l, r = ax.lhs, ax.rhs
            edge(role_sup, l, r)
            edge(role_sup, l.inv(), r.inv())
            edge(concept_sup, Basic("exists", l.name, l.inverse), Basic("exists", r.name, r.inverse))
            edge(concept_sup, Basic("exists", l.name, not l.inverse),
                 Basic("exists", r.name, not r.inverse))
        else:
            edge(concept_sup, ax.lhs, ax.rhs)
    return concept_sup, role_sup


def _reach(table: dict, target) -> list:
    out = [target]
    seen = {target}
    queue = deque([target])
    while queue:
        node = queue.popleft()
        for sub in table.get(node, ()):
            if sub not in seen:
                seen.add(sub)
                out.append(sub)
                queue.append(sub)
    return out


@lru_cache(maxsize=256)
def atomic_rewritings(tbox: TBox, pred: str, arity: int) -> tuple:
    """Basic concepts (unary) or roles (binary) whose extension entails ``pred``."""
    concept_sup, role_sup = _sub_closure(tbox)
    if arity == 1:
        return tuple(_reach(concept_sup, Basic("concept", pred)))
    return tuple(_reach(role_sup, Basic("role", pred)))


def atom_rewr(phi: Formula, tbox: TBox) -> Formula:
    """Replace every predicate atom by the disjunction of its atomic rewritings."""
    if not tbox.positive:
        return phi
    names = fresh_names(v.name for v in all_vars(phi))

    def rewrite_atom(a: Atom) -> Formula:
        subs = atomic_rewritings(tbox, a.pred, a.arity)
        if len(subs) == 1:
            return a
        parts = []
        if a.arity == 1:
            t = a.args[0]
            for b in subs:
                if b.kind == "concept":
                    parts.append(Atom(b.name, (t,)))
                else:
                    y = Var(next(names))
                    parts.append(Exists((y,), b.instantiate(t, y)))
        else:
            t1, t2 = a.args
            for r in subs:
                parts.append(Atom(r.name, (t2, t1) if r.inverse else (t1, t2)))
        return disj(parts)

    def walk(f: Formula) -> Formula:
        if isinstance(f, Atom):
            return rewrite_atom(f)
        if isinstance(f, Not):
            return Not(walk(f.body))
        if isinstance(f, And):
            return And(tuple(walk(c) for c in f.children))
        if isinstance(f, Or):
            return Or(tuple(walk(c) for c in f.children))
        if isinstance(f, Exists):
            return Exists(f.vars, walk(f.body))
        return f

    return walk(phi)


# ---------------------------------------------------------------------------
# normalisation


def simplify(phi: Formula) -> Formula:
    """Truth-preserving clean-up: constant folding, flattening, double negation.

    Quantifiers are only dropped when that is sound on every ABox, including
    one with an empty active domain.
    """
    if isinstance(phi, Not):
        body = simplify(phi.body)
        if isinstance(body, Top):
            return FALSE
        if isinstance(body, Bottom):
            return TRUE
        if isinstance(body, Not):
            return body.body
        return Not(body)
    if isinstance(phi, (And, Or)):
        is_and = isinstance(phi, And)
        unit, zero = (Top, Bottom) if is_and else (Bottom, Top)
        kids = []
        for c in phi.children:
            c = simplify(c)
            if isinstance(c, zero):
                return c
            if isinstance(c, unit):
                continue
            if isinstance(c, type(phi)):
                kids.extend(c.children)
            elif c not in kids:
                kids.append(c)
        return conj(kids) if is_and else disj(kids)
    if isinstance(phi, Exists):
        body = simplify(phi.body)
        if isinstance(body, Bottom):
            return FALSE
        used = free_vars(body)
        vs = tuple(v for v in phi.vars if v in used)
        if vs:
            return Exists(vs, body)
        # a constant in the body keeps the active domain non-empty
        if constants(body):
            return body
        return Exists(phi.vars, body)
    if isinstance(phi, Eq):
        if phi.left == phi.right:
            return TRUE
        if isinstance(phi.left, Const) and isinstance(phi.right, Const):
            return FALSE
    return phi
