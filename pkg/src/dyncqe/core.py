"""Domain vocabulary: terms, atoms, queries, axioms, policies, ABoxes and FO formulas.

Every value here is immutable and hashable, so rewritings can be cached and
shared freely.
"""

from __future__ import annotations

import contextlib
import itertools
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Iterator, Union

#: Default cap on the number of BCQs a rewriting or conjunction may produce.
DEFAULT_MAX_DISJUNCTS = 4096
#: Default cap on the length of a sequence handled by the powerset path.
DEFAULT_POWERSET_CAP = 12


class CQEError(Exception):
    """Base class for every error raised by this package."""


class CapacityExceeded(CQEError):
    """A rewriting or conjunction grew beyond its configured cap."""


class InconsistentInput(CQEError):
    """T together with the ABox has no model."""


# ---------------------------------------------------------------------------
# terms and atoms


@dataclass(frozen=True)
class Const:
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Var:
    name: str

    def __str__(self) -> str:
        return "?" + self.name


Term = Union[Const, Var]


def term_key(t: Term) -> tuple:
    return (0, t.name) if isinstance(t, Const) else (1, t.name)


_MAX_ARITY = 2


@contextlib.contextmanager
def relaxed_arity(max_arity: int = 3) -> Iterator[None]:
    """Temporarily admit atoms with more than two arguments.

    Only meant for exercising unification on wider atoms in tests; the
    parsers always enforce the binary limit.
    """
    global _MAX_ARITY
    old, _MAX_ARITY = _MAX_ARITY, max_arity
    try:
        yield
    finally:
        _MAX_ARITY = old


class Formula:
    """Base class for first-order formula nodes."""

    __slots__ = ()


@dataclass(frozen=True)
class Atom(Formula):
    pred: str
    args: tuple

    def __post_init__(self):
        if not self.pred:
            raise ValueError("empty predicate name")
        if not 1 <= len(self.args) <= _MAX_ARITY:
            raise ValueError(f"atom {self.pred} has arity {len(self.args)}")
        if not all(isinstance(t, (Const, Var)) for t in self.args):
            raise TypeError(f"bad argument in {self.pred}{self.args!r}")

    @property
    def arity(self) -> int:
        return len(self.args)

    @property
    def is_ground(self) -> bool:
        return all(isinstance(t, Const) for t in self.args)

    def substitute(self, sigma: dict) -> Atom:
        return Atom(self.pred, tuple(sigma.get(t, t) for t in self.args))

    def sort_key(self) -> tuple:
        return (self.pred, tuple(term_key(t) for t in self.args))

    def __str__(self) -> str:
        return f"{self.pred}({','.join(str(t) for t in self.args)})"


def atom_vars(atoms: Iterable[Atom]) -> tuple:
    """Variables of ``atoms`` in order of first occurrence."""
    seen: dict = {}
    for a in atoms:
        for t in a.args:
            if isinstance(t, Var):
                seen.setdefault(t, None)
    return tuple(seen)


# ---------------------------------------------------------------------------
# queries


@dataclass(frozen=True)
class BCQ:
    """Existentially closed conjunction of atoms.

    Atom order is kept as constructed (it fixes rendering order); duplicate
    atoms are dropped.
    """

    atoms: tuple

    def __post_init__(self):
        atoms = tuple(dict.fromkeys(self.atoms))
        if not atoms:
            raise ValueError("a BCQ needs at least one atom")
        object.__setattr__(self, "atoms", atoms)

    @cached_property
    def vars(self) -> tuple:
        return atom_vars(self.atoms)

    @cached_property
    def key(self) -> tuple:
        """Canonical form up to variable renaming and atom order."""
        return canonical_key(self)

    def substitute(self, sigma: dict) -> BCQ:
        return BCQ(tuple(a.substitute(sigma) for a in self.atoms))

    def __str__(self) -> str:
        return ", ".join(str(a) for a in self.atoms)


@dataclass(frozen=True)
class BUCQ:
    disjuncts: tuple

    def __post_init__(self):
        if not self.disjuncts:
            raise ValueError("a BUCQ needs at least one disjunct")
        if not all(isinstance(d, BCQ) for d in self.disjuncts):
            raise TypeError("BUCQ disjuncts must be BCQs")

    @classmethod
    def of(cls, *atoms: Atom) -> BUCQ:
        """One-disjunct BUCQ over ``atoms``."""
        return cls((BCQ(atoms),))

    def __len__(self) -> int:
        return len(self.disjuncts)

    def __iter__(self):
        return iter(self.disjuncts)

    def __str__(self) -> str:
        return " OR ".join(str(d) for d in self.disjuncts)


def fresh_names(taken: Iterable[str], prefix: str = "v") -> Iterator[str]:
    """Yield ``v0, v1, ...`` skipping every name in ``taken``."""
    taken = set(taken)
    for i in itertools.count():
        name = f"{prefix}{i}"
        if name not in taken:
            yield name


def rename_apart(q: BCQ, reserved: Iterable) -> BCQ:
    """Rename the variables of ``q`` away from ``reserved``.

    ``reserved`` may hold variable names or ``Var`` objects. Nothing changes
    when there is no clash; otherwise every variable is renamed, in order of
    first occurrence, to the lowest free name of the ``v<i>`` scheme.
    """
    names = {r.name if isinstance(r, Var) else r for r in reserved}
    if not any(v.name in names for v in q.vars):
        return q
    gen = fresh_names(names)
    sigma = {v: Var(next(gen)) for v in q.vars}
    return q.substitute(sigma)


def conjoin_bcqs(q1: BCQ, q2: BCQ) -> BCQ:
    return BCQ(q1.atoms + rename_apart(q2, q1.vars).atoms)


def conjoin_bucqs(q1: BUCQ, q2: BUCQ, cap: int = DEFAULT_MAX_DISJUNCTS) -> BUCQ:
    """Distribute the conjunction of two BUCQs into a BUCQ (row-major)."""
    size = len(q1) * len(q2)
    if size > cap:
        raise CapacityExceeded(f"conjunction has {size} disjuncts (cap {cap})")
    return BUCQ(tuple(conjoin_bcqs(a, b) for a in q1 for b in q2))


def conjoin_all(queries: Iterable[BUCQ], cap: int = DEFAULT_MAX_DISJUNCTS) -> BUCQ:
    """Left-to-right conjunction of a non-empty sequence of BUCQs."""
    it = iter(queries)
    try:
        acc = next(it)
    except StopIteration:
        raise ValueError("cannot conjoin an empty sequence") from None
    for q in it:
        acc = conjoin_bucqs(acc, q, cap)
    return acc


# canonical forms ------------------------------------------------------------

_PERMUTATION_BUDGET = 720


def _refine_colours(q: BCQ) -> dict:
    vars_ = q.vars
    occurrences = {v: [a for a in q.atoms if v in a.args] for v in vars_}
    colour = {v: 0 for v in vars_}
    n_classes = 1
    while True:
        sigs = {}
        for v in vars_:
            occ = sorted((a.pred, tuple(
                ("s",) if t == v else
                ("c", t.name) if isinstance(t, Const) else
                ("v", colour[t])
                for t in a.args)) for a in occurrences[v])
            sigs[v] = (colour[v], tuple(occ))
        ranks = {s: i for i, s in enumerate(sorted(set(sigs.values())))}
        colour = {v: ranks[sigs[v]] for v in vars_}
        if len(ranks) == n_classes:
            return colour
        n_classes = len(ranks)


def _keyed(q: BCQ, order) -> tuple:
    idx = {v: i for i, v in enumerate(order)}
    return tuple(sorted(set(
        (a.pred, tuple((0, t.name) if isinstance(t, Const) else (1, idx[t])
                       for t in a.args))
        for a in q.atoms)))


def canonical_key(q: BCQ) -> tuple:
    """Hashable key equal for BCQs that differ only by variable names/atom order.

    Variables are ordered by an isomorphism-invariant colour refinement; ties
    are broken by trying every order within a colour class (exact) or, past a
    small budget, by first occurrence.
    """
    if not q.vars:
        return _keyed(q, ())
    colour = _refine_colours(q)
    groups: dict = {}
    for v in q.vars:
        groups.setdefault(colour[v], []).append(v)
    classes = [groups[c] for c in sorted(groups)]
    budget = 1
    for cls in classes:
        for k in range(2, len(cls) + 1):
            budget *= k
    if budget > _PERMUTATION_BUDGET:
        return _keyed(q, [v for cls in classes for v in cls])
    best = None
    for perms in itertools.product(*(itertools.permutations(c) for c in classes)):
        k = _keyed(q, [v for p in perms for v in p])
        if best is None or k < best:
            best = k
    return best


def canonicalize(q: BCQ) -> BCQ:
    """Rebuild ``q`` from its canonical key (variables ``v0, v1, ...``)."""
    atoms = []
    for pred, args in canonical_key(q):
        atoms.append(Atom(pred, tuple(Const(n) if k == 0 else Var(f"v{n}")
                                      for k, n in args)))
    return BCQ(tuple(atoms))


# ---------------------------------------------------------------------------
# TBox, policy, ABox


@dataclass(frozen=True)
class Basic:
    """A basic concept (``A``, ``EX P``, ``EX P-``) or a role (``P``, ``P-``).

    ``kind`` is one of ``"concept"``, ``"exists"`` or ``"role"``; ``inverse``
    only applies to the last two.
    """

    kind: str
    name: str
    inverse: bool = False

    def __post_init__(self):
        if self.kind not in ("concept", "exists", "role"):
            raise ValueError(f"unknown kind {self.kind!r}")
        if self.kind == "concept" and self.inverse:
            raise ValueError("an atomic concept has no inverse")

    @property
    def is_role(self) -> bool:
        return self.kind == "role"

    def inv(self) -> Basic:
        return Basic(self.kind, self.name, not self.inverse)

    def instantiate(self, t: Term, fresh: Term) -> Atom:
        """The atom asserting membership of ``t`` (roles: ``fresh`` fills the other end)."""
        if self.kind == "concept":
            return Atom(self.name, (t,))
        return Atom(self.name, (fresh, t) if self.inverse else (t, fresh))

    def __str__(self) -> str:
        s = self.name + ("-" if self.inverse else "")
        return "EX " + s if self.kind == "exists" else s


@dataclass(frozen=True)
class Axiom:
    lhs: Basic
    rhs: Basic
    negated: bool = False

    def __post_init__(self):
        if self.lhs.is_role != self.rhs.is_role:
            raise ValueError("inclusion mixes a concept and a role")

    @property
    def is_role(self) -> bool:
        return self.lhs.is_role

    def __str__(self) -> str:
        return f"{self.lhs} ISA {'NOT ' if self.negated else ''}{self.rhs}"


@dataclass(frozen=True)
class TBox:
    axioms: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "axioms", tuple(dict.fromkeys(self.axioms)))

    @property
    def positive(self) -> tuple:
        return tuple(a for a in self.axioms if not a.negated)

    @property
    def negative(self) -> tuple:
        return tuple(a for a in self.axioms if a.negated)

    def predicates(self) -> dict:
        """Predicate name -> arity for every predicate mentioned."""
        out = {}
        for ax in self.axioms:
            for b in (ax.lhs, ax.rhs):
                out[b.name] = 1 if b.kind == "concept" else 2
        return out

    def __len__(self) -> int:
        return len(self.axioms)


@dataclass(frozen=True)
class Policy:
    """Denials ``q -> bottom``, each stored by its body, in file order."""

    denials: tuple = ()

    def __len__(self) -> int:
        return len(self.denials)


@dataclass(frozen=True)
class ABox:
    atoms: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        atoms = frozenset(self.atoms)
        for a in atoms:
            if not a.is_ground:
                raise ValueError(f"ABox atom {a} is not ground")
        object.__setattr__(self, "atoms", atoms)

    def sorted(self) -> list:
        return sorted(self.atoms, key=Atom.sort_key)

    @cached_property
    def constants(self) -> frozenset:
        return frozenset(t for a in self.atoms for t in a.args)

    @cached_property
    def index(self) -> dict:
        """(pred, position, constant) -> atoms, plus (pred,) -> atoms."""
        idx: dict = {}
        for a in self.atoms:
            idx.setdefault((a.pred,), []).append(a)
            for i, t in enumerate(a.args):
                idx.setdefault((a.pred, i, t), []).append(a)
        return idx

    def __contains__(self, a) -> bool:
        return a in self.atoms

    def __len__(self) -> int:
        return len(self.atoms)

    def __iter__(self):
        return iter(self.sorted())

    def __or__(self, other) -> ABox:
        return ABox(self.atoms | frozenset(other))


@dataclass(frozen=True)
class CQESpec:
    tbox: TBox
    policy: Policy


@dataclass(frozen=True)
class CQEInstance:
    tbox: TBox
    policy: Policy
    abox: ABox

    @property
    def spec(self) -> CQESpec:
        return CQESpec(self.tbox, self.policy)


# ---------------------------------------------------------------------------
# first-order formulas


@dataclass(frozen=True)
class Top(Formula):
    def __str__(self) -> str:
        return "TRUE"


@dataclass(frozen=True)
class Bottom(Formula):
    def __str__(self) -> str:
        return "FALSE"


TRUE = Top()
FALSE = Bottom()


@dataclass(frozen=True)
class Eq(Formula):
    left: Term
    right: Term


@dataclass(frozen=True)
class Not(Formula):
    body: Formula


@dataclass(frozen=True)
class And(Formula):
    children: tuple

    def __post_init__(self):
        if not self.children:
            raise ValueError("AND needs at least one child; use TRUE")


@dataclass(frozen=True)
class Or(Formula):
    children: tuple

    def __post_init__(self):
        if not self.children:
            raise ValueError("OR needs at least one child; use FALSE")


@dataclass(frozen=True)
class Exists(Formula):
    vars: tuple
    body: Formula

    def __post_init__(self):
        if not self.vars:
            raise ValueError("EXISTS needs at least one variable")


def conj(parts: Iterable[Formula]) -> Formula:
    """AND of ``parts``: TRUE when empty, the part itself when single."""
    parts = tuple(parts)
    if not parts:
        return TRUE
    return parts[0] if len(parts) == 1 else And(parts)


def disj(parts: Iterable[Formula]) -> Formula:
    parts = tuple(parts)
    if not parts:
        return FALSE
    return parts[0] if len(parts) == 1 else Or(parts)


def exists(vars_: Iterable[Var], body: Formula) -> Formula:
    vars_ = tuple(vars_)
    return Exists(vars_, body) if vars_ else body


def bcq_formula(q: BCQ) -> Formula:
    return exists(q.vars, conj(q.atoms))


def bucq_formula(q: BUCQ) -> Formula:
    return disj(bcq_formula(d) for d in q.disjuncts)


def free_vars(phi: Formula) -> frozenset:
    if isinstance(phi, Atom):
        return frozenset(t for t in phi.args if isinstance(t, Var))
    if isinstance(phi, Eq):
        return frozenset(t for t in (phi.left, phi.right) if isinstance(t, Var))
    if isinstance(phi, Not):
        return free_vars(phi.body)
    if isinstance(phi, (And, Or)):
        return frozenset().union(*(free_vars(c) for c in phi.children))
    if isinstance(phi, Exists):
        return free_vars(phi.body) - frozenset(phi.vars)
    return frozenset()


def all_vars(phi: Formula) -> set:
    """Every variable occurring in ``phi``, bound or free."""
    out: set = set()

    def walk(f):
        if isinstance(f, (Atom, Eq)):
            out.update(free_vars(f))
        elif isinstance(f, Not):
            walk(f.body)
        elif isinstance(f, (And, Or)):
            for c in f.children:
                walk(c)
        elif isinstance(f, Exists):
            out.update(f.vars)
            walk(f.body)

    walk(phi)
    return out


def constants(phi: Formula) -> set:
    out: set = set()

    def walk(f):
        if isinstance(f, Atom):
            out.update(t for t in f.args if isinstance(t, Const))
        elif isinstance(f, Eq):
            out.update(t for t in (f.left, f.right) if isinstance(t, Const))
        elif isinstance(f, Not):
            walk(f.body)
        elif isinstance(f, (And, Or)):
            for c in f.children:
                walk(c)
        elif isinstance(f, Exists):
            walk(f.body)

    walk(phi)
    return out


def size(phi: Formula) -> int:
    """Number of nodes in ``phi``."""
    if isinstance(phi, Not):
        return 1 + size(phi.body)
    if isinstance(phi, (And, Or)):
        return 1 + sum(size(c) for c in phi.children)
    if isinstance(phi, Exists):
        return 1 + size(phi.body)
    return 1
