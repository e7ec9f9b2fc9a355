"""Finite model checking of FO sentences over ABoxes.

Sentences are evaluated in the Herbrand model of the ABox: an atom is true
iff it is in the ABox, equality is identity of constants and quantifiers
range over the active domain (constants of the ABox plus constants of the
sentence being evaluated).

Quantified subformulas are solved by generating candidate bindings from the
positive atoms they contain (index lookups) and using everything else as a
filter; the active domain is only enumerated for variables no atom can
bind.
"""

from __future__ import annotations

import itertools
from typing import Iterator

from .core import (
    ABox, And, Atom, BCQ, BUCQ, Bottom, Const, Eq, Exists, Formula,
    InconsistentInput, Not, Or, TBox, Top, Var, bucq_formula, constants,
    free_vars,
)
from .rewriter import EMPTY_POLICY, perfect_ref, policy_query, unsat_query


class _Evaluator:
    def __init__(self, abox: ABox, phi: Formula):
        self.abox = abox
        self.index = abox.index
        self.domain = sorted(abox.constants | constants(phi), key=lambda c: c.name)
        self._free: dict = {}

    def free(self, f: Formula) -> frozenset:
        fv = self._free.get(id(f))
        if fv is None:
            fv = self._free[id(f)] = (free_vars(f), f)
        return fv[0]

    # truth of a formula whose free variables are all bound by env
    def holds(self, f: Formula, env: dict) -> bool:
        if isinstance(f, Atom):
            return Atom(f.pred, tuple(env[t] if isinstance(t, Var) else t
                                      for t in f.args)) in self.abox.atoms
        if isinstance(f, Eq):
            return _val(f.left, env) == _val(f.right, env)
        if isinstance(f, Not):
            return not self.holds(f.body, env)
        if isinstance(f, And):
            return all(self.holds(c, env) for c in f.children)
        if isinstance(f, Or):
            return any(self.holds(c, env) for c in f.children)
        if isinstance(f, Exists):
            return self._exists(f, env)
        if isinstance(f, Top):
            return True
        if isinstance(f, Bottom):
            return False
        raise TypeError(f"not a formula: {f!r}")

    def _exists(self, f: Exists, env: dict) -> bool:
        if not self.domain:
            return False
        inner = {k: v for k, v in env.items() if k not in f.vars}
        for _ in self.solve(f.body, inner):
            return True
        return False

    # bindings for every free variable of f not yet bound in env
    def solve(self, f: Formula, env: dict) -> Iterator[dict]:
        unbound = [v for v in self.free(f) if v not in env]
        if not unbound:
            if self.holds(f, env):
                yield env
            return
        if isinstance(f, Atom):
            yield from self._match(f, env)
        elif isinstance(f, And):
            yield from self._solve_and(list(f.children), env)
        elif isinstance(f, Or):
            seen = set()
            for c in f.children:
                for e in self.solve(c, env):
                    rest = [v for v in unbound if v not in e]
                    for e2 in self._enumerate(rest, e):
                        key = tuple(e2[v] for v in unbound)
                        if key not in seen:
                            seen.add(key)
                            yield e2
        elif isinstance(f, Exists):
            if not self.domain:
                return
            inner = {k: v for k, v in env.items() if k not in f.vars}
            seen = set()
            for e in self.solve(f.body, inner):
                key = tuple(e[v] for v in unbound)
                if key not in seen:
                    seen.add(key)
                    out = dict(env)
                    out.update(zip(unbound, key))
                    yield out
        elif isinstance(f, Eq):
            left, right = f.left, f.right
            lv, rv = _val(left, env), _val(right, env)
            if lv is None and rv is None:
                for c in self.domain:
                    yield {**env, left: c, right: c}
            elif lv is None:
                if rv in self.domain:
                    yield {**env, left: rv}
            else:
                if lv in self.domain:
                    yield {**env, right: lv}
        else:
            for e in self._enumerate(unbound, env):
                if self.holds(f, e):
                    yield e

    def _enumerate(self, vars_, env) -> Iterator[dict]:
        if not vars_:
            yield env
            return
        for values in itertools.product(self.domain, repeat=len(vars_)):
            e = dict(env)
            e.update(zip(vars_, values))
            yield e

    def _match(self, a: Atom, env: dict) -> Iterator[dict]:
        bound = [(i, _val(t, env)) for i, t in enumerate(a.args)]
        keys = [(a.pred, i, c) for i, c in bound if c is not None]
        if keys:
            candidates = min((self.index.get(k, ()) for k in keys), key=len)
        else:
            candidates = self.index.get((a.pred,), ())
        for fact in candidates:
            e = dict(env)
            ok = True
            for t, c in zip(a.args, fact.args):
                cur = _val(t, e)
                if cur is None:
                    e[t] = c
                elif cur != c:
                    ok = False
                    break
            if ok:
                yield e

    def _cost(self, f: Formula, env: dict) -> tuple:
        """Ordering key for picking the next conjunct (smaller first)."""
        unbound = [v for v in self.free(f) if v not in env]
        if not unbound:
            return (0, 0)
        if isinstance(f, Atom):
            bound = sum(1 for t in f.args if _val(t, env) is not None)
            return (1, -bound)
        if isinstance(f, Eq):
            return (1, -1)
        if _generates(f, set(unbound)):
            return (2, 0)
        return (3, len(unbound))

    def _solve_and(self, rest: list, env: dict) -> Iterator[dict]:
        if not rest:
            yield env
            return
        best = min(range(len(rest)), key=lambda k: self._cost(rest[k], env))
        head = rest[best]
        tail = rest[:best] + rest[best + 1:]
        for e in self.solve(head, env):
            yield from self._solve_and(tail, e)


def _generates(f: Formula, vars_: set) -> bool:
    """Whether solving ``f`` binds ``vars_`` from facts rather than the domain."""
    if isinstance(f, Atom):
        return vars_ <= {t for t in f.args if isinstance(t, Var)}
    if isinstance(f, And):
        covered = set()
        for c in f.children:
            if isinstance(c, (Atom, Or, Exists, And)):
                covered |= {v for v in vars_ if _generates(c, {v})}
        return vars_ <= covered
    if isinstance(f, Or):
        return all(_generates(c, vars_) for c in f.children)
    if isinstance(f, Exists):
        return _generates(f.body, vars_ - set(f.vars))
    return False


def _val(t, env):
    return t if isinstance(t, Const) else env.get(t)


def eval_fo(phi: Formula, abox: ABox) -> bool:
    """Truth value of the closed sentence ``phi`` in the Herbrand model of ``abox``."""
    fv = free_vars(phi)
    if fv:
        raise ValueError(f"sentence has free variables: {sorted(v.name for v in fv)}")
    return _Evaluator(abox, phi).holds(phi, {})


def eval_bindings(psi: Formula, abox: ABox, variables) -> list:
    """All satisfying bindings of the free ``variables`` of ``psi``.

    Bindings are dicts ``Var -> Const`` sorted by the constant names taken in
    the order of ``variables``.
    """
    variables = tuple(variables)
    if set(variables) != set(free_vars(psi)):
        raise ValueError("designated variables must be exactly the free variables")
    ev = _Evaluator(abox, psi)
    found = {tuple(e[v] for v in variables) for e in ev.solve(psi, {})}
    ordered = sorted(found, key=lambda vals: tuple(c.name for c in vals))
    return [dict(zip(variables, vals)) for vals in ordered]


def holds_bucq(q: BUCQ, abox: ABox) -> bool:
    return eval_fo(bucq_formula(q), abox)


def homomorphisms(q: BCQ, abox: ABox) -> Iterator[dict]:
    """Every assignment of the variables of ``q`` mapping all its atoms into ``abox``."""
    ev = _Evaluator(abox, q.atoms[0])
    return ev._solve_and(list(q.atoms), {})


def find_images(q: BUCQ, abox: ABox) -> list:
    """The inclusion-minimal subsets of ``abox`` in which ``q`` evaluates to true.

    Every minimal subset is the image of some disjunct under a homomorphism,
    so candidates are collected from homomorphisms and then filtered for
    minimality. Ordered by size, then by sorted atom keys.
    """
    cands = set()
    for d in q.disjuncts:
        for h in homomorphisms(d, abox):
            cands.add(frozenset(a.substitute(h) for a in d.atoms))
    by_size = sorted(cands, key=len)
    minimal = []
    for c in by_size:
        if not any(m <= c for m in minimal):
            minimal.append(c)
    minimal.sort(key=lambda s: (len(s), sorted(a.sort_key() for a in s)))
    return [ABox(m) for m in minimal]


def is_consistent(tbox: TBox, abox: ABox) -> bool:
    uq = unsat_query(tbox)
    if uq is None:
        return True
    return not holds_bucq(perfect_ref(uq, tbox), abox)


def is_policy_consistent_with(spec, censor: ABox) -> bool:
    """Whether T, the policy and ``censor`` have a common model."""
    pq = policy_query(spec.policy)
    if pq is EMPTY_POLICY:
        return True
    return not holds_bucq(perfect_ref(pq, spec.tbox), censor)


def signature(tbox: TBox, abox: ABox) -> dict:
    preds = dict(tbox.predicates())
    for a in abox.atoms:
        preds.setdefault(a.pred, a.arity)
    return preds


def closure(tbox: TBox, abox: ABox) -> ABox:
    """Every ground atom over the signature and the constants of ``abox`` entailed by T and ``abox``."""
    if not is_consistent(tbox, abox):
        raise InconsistentInput("the TBox and the ABox are inconsistent")
    if not tbox.positive:
        return abox
    consts = sorted(abox.constants, key=lambda c: c.name)
    out = set(abox.atoms)
    for pred, arity in sorted(signature(tbox, abox).items()):
        for args in itertools.product(consts, repeat=arity):
            a = Atom(pred, args)
            if a in out:
                continue
            if holds_bucq(perfect_ref(BUCQ.of(a), tbox), abox):
                out.add(a)
    return ABox(frozenset(out))
