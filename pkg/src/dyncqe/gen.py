"""Random small instances for property testing and benchmarking."""

from __future__ import annotations

import random
from dataclasses import dataclass

from .core import (
    ABox, And, Atom, Axiom, BCQ, BUCQ, Basic, CQEInstance, Const, Eq, Exists,
    Not, Or, Policy, TBox, Var,
)
from .evaluator import closure, is_consistent


@dataclass(frozen=True)
class Shape:
    concepts: int = 3
    roles: int = 2
    constants: int = 4
    abox_atoms: int = 6
    axioms: int = 4
    denials: int = 2
    queries: int = 4
    disjuncts: int = 2
    atoms: int = 3
    negative_rate: float = 0.2


SMALL = Shape()
CONCEPT_NAMES = ("A", "B", "C")
ROLE_NAMES = ("P", "R")


class Generator:
    """Draws signatures, TBoxes, ABoxes, policies and queries from one RNG."""

    def __init__(self, seed: int, shape: Shape = SMALL):
        self.rng = random.Random(seed)
        self.shape = shape
        self.concepts = CONCEPT_NAMES[:shape.concepts]
        self.roles = ROLE_NAMES[:shape.roles]
        self.consts = tuple(Const(f"c{k}") for k in range(shape.constants))

    # -- TBox

    def basic_concept(self) -> Basic:
        if self.roles and self.rng.random() < 0.4:
            return Basic("exists", self.rng.choice(self.roles), self.rng.random() < 0.5)
        return Basic("concept", self.rng.choice(self.concepts))

    def role(self) -> Basic:
        return Basic("role", self.rng.choice(self.roles), self.rng.random() < 0.3)

    def axiom(self) -> Axiom:
        negated = self.rng.random() < self.shape.negative_rate
        if self.roles and self.rng.random() < 0.25:
            lhs, rhs = self.role(), self.role()
        else:
            lhs, rhs = self.basic_concept(), self.basic_concept()
        return Axiom(lhs, rhs, negated)

    def tbox(self) -> TBox:
        n = self.rng.randint(0, self.shape.axioms)
        return TBox(tuple(self.axiom() for _ in range(n)))

    # -- facts and queries

    def ground_atom(self) -> Atom:
        if self.roles and self.rng.random() < 0.5:
            return Atom(self.rng.choice(self.roles),
                        (self.rng.choice(self.consts), self.rng.choice(self.consts)))
        return Atom(self.rng.choice(self.concepts), (self.rng.choice(self.consts),))

    def abox(self) -> ABox:
        n = self.rng.randint(0, self.shape.abox_atoms)
        return ABox(frozenset(self.ground_atom() for _ in range(n)))

    def term(self, pool):
        if self.rng.random() < 0.3:
            return self.rng.choice(self.consts)
        return self.rng.choice(pool)

    def bcq(self, max_atoms: int) -> BCQ:
        n = self.rng.randint(1, max_atoms)
        pool = [Var(v) for v in ("x", "y", "z")[:max(1, n)]]
        atoms = []
        for _ in range(n):
            if self.roles and self.rng.random() < 0.5:
                atoms.append(Atom(self.rng.choice(self.roles), (self.term(pool), self.term(pool))))
            else:
                atoms.append(Atom(self.rng.choice(self.concepts), (self.term(pool),)))
        return BCQ(tuple(atoms))

    def bucq(self) -> BUCQ:
        n = self.rng.randint(1, self.shape.disjuncts)
        return BUCQ(tuple(self.bcq(self.shape.atoms) for _ in range(n)))

    def policy(self) -> Policy:
        n = self.rng.randint(0, self.shape.denials)
        return Policy(tuple(self.bcq(2) for _ in range(n)))

    def queries(self) -> list:
        return [self.bucq() for _ in range(self.rng.randint(1, self.shape.queries))]

    # -- formulas

    def formula(self, depth: int = 3, bound=()) -> object:
        """A random sentence over the signature (``bound`` are variables in scope)."""
        rng = self.rng
        leaf = depth == 0 or rng.random() < 0.25
        if leaf:
            pool = list(bound)
            if rng.random() < 0.15 and pool:
                return Eq(rng.choice(pool), self.term(pool))
            if not pool:
                return self.ground_atom()
            if self.roles and rng.random() < 0.5:
                return Atom(rng.choice(self.roles), (self.term(pool), self.term(pool)))
            return Atom(rng.choice(self.concepts), (self.term(pool),))
        kind = rng.choice(("not", "and", "or", "exists", "exists"))
        if kind == "not":
            return Not(self.formula(depth - 1, bound))
        if kind in ("and", "or"):
            kids = tuple(self.formula(depth - 1, bound) for _ in range(rng.randint(2, 3)))
            return And(kids) if kind == "and" else Or(kids)
        v = Var(f"u{len(bound)}")
        return Exists((v,), self.formula(depth - 1, bound + (v,)))


def random_instance(gen: Generator, max_closure: int = 18, tries: int = 200) -> CQEInstance:
    """A consistent instance whose closure fits the oracle limit."""
    for _ in range(tries):
        tbox, abox = gen.tbox(), gen.abox()
        if not is_consistent(tbox, abox):
            continue
        if len(closure(tbox, abox)) > max_closure:
            continue
        return CQEInstance(tbox, gen.policy(), abox)
    raise RuntimeError("no admissible instance drawn")
