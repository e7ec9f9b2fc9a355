"""Protection-state sessions.

A session answers a stream of BUCQs over a fixed instance. In exact mode
each query is decided by one FO sentence evaluated over the ABox: the
conjunction of everything answered true so far plus the new query must
still have a policy-compliant image in the closure. Materialized mode
instead picks one optimal censor up front and answers by plain entailment
from it.
"""

from __future__ import annotations

import hashlib
import itertools
from dataclasses import dataclass, field
from pathlib import Path

from .core import (
    ABox, And, BUCQ, CQEError, CQEInstance, DEFAULT_MAX_DISJUNCTS,
    DEFAULT_POWERSET_CAP, CapacityExceeded, Not, Policy, TBox, conj,
    conjoin_all, disj, rename_apart,
)
from .evaluator import (
    closure, eval_bindings, eval_fo, holds_bucq, is_consistent,
    is_policy_consistent_with,
)
from .parser import parse_bucq, render_abox, render_bucq, render_policy, render_tbox
from .rewriter import (
    EMPTY_POLICY, atom_rewr, brave_ref, perfect_ref, policy_query, saturate,
    state_ref,
)


class InconsistentInstance(CQEError):
    """T and A have no common model."""


class ReplayMismatch(CQEError):
    """A logged answer differs from the replayed one."""


class HashMismatch(CQEError):
    """The log was recorded against different inputs."""


EXACT = "exact"
MATERIALIZED = "materialized"


@dataclass
class Session:
    instance: CQEInstance
    mode: str = EXACT
    max_disjuncts: int = DEFAULT_MAX_DISJUNCTS
    history: list = field(default_factory=list)     # (BUCQ, bool)
    entq: list = field(default_factory=list)
    materialized: ABox | None = None
    spec_consistent: bool = True

    @property
    def tbox(self) -> TBox:
        return self.instance.tbox

    @property
    def policy(self) -> Policy:
        return self.instance.policy

    @property
    def abox(self) -> ABox:
        return self.instance.abox

    def sentence(self, q: BUCQ):
        """The FO sentence deciding ``q`` in the current state."""
        target = conjoin_all(self.entq + [q], self.max_disjuncts)
        return atom_rewr(brave_ref(target, self.tbox, self.policy, self.max_disjuncts), self.tbox)

    def ask(self, q: BUCQ) -> bool:
        """Answer ``q`` and record it; dispatches on the session mode."""
        if self.mode == MATERIALIZED:
            return self.ask_materialized(q)
        answer = eval_fo(self.sentence(q), self.abox)
        self.history.append((q, answer))
        if answer:
            self.entq.append(q)
        return answer

    def ask_materialized(self, q: BUCQ) -> bool:
        if self.mode != MATERIALIZED or self.materialized is None:
            raise CQEError("session has no materialized censor")
        answer = holds_bucq(perfect_ref(q, self.tbox, self.max_disjuncts), self.materialized)
        self.history.append((q, answer))
        return answer

    def materialize_censor(self) -> ABox:
        return materialize_censor(self.instance, self.entq, self.max_disjuncts)

    def switch_to_materialized(self) -> ABox:
        self.materialized = self.materialize_censor()
        self.mode = MATERIALIZED
        return self.materialized

    def save(self, path) -> None:
        Path(path).write_text(render_log(self), encoding="utf-8")


def open_session(tbox: TBox, policy: Policy, abox: ABox, mode: str = EXACT,
                 max_disjuncts: int = DEFAULT_MAX_DISJUNCTS) -> Session:
    if mode not in (EXACT, MATERIALIZED):
        raise ValueError(f"unknown mode {mode!r}")
    if not is_consistent(tbox, abox):
        raise InconsistentInstance("the TBox and the ABox are inconsistent")
    instance = CQEInstance(tbox, policy, abox)
    # denials never contradict a TBox on their own: the empty ABox is a model
    spec_ok = is_policy_consistent_with(instance.spec, ABox())
    s = Session(instance, max_disjuncts=max_disjuncts, spec_consistent=spec_ok)
    if mode == MATERIALIZED:
        s.switch_to_materialized()
    return s


def _guesses(i: int):
    earlier = range(1, i)
    return itertools.chain.from_iterable(
        itertools.combinations(earlier, k) for k in range(i))


def _check_powerset(queries, i, powerset_cap):
    if len(queries) > powerset_cap:
        raise CapacityExceeded(f"{len(queries)} queries exceed the powerset cap {powerset_cap}")
    if not 1 <= i <= len(queries):
        raise IndexError(f"query index {i} out of range 1..{len(queries)}")


def powerset_sentence(instance: CQEInstance, queries, i: int,
                      max_disjuncts: int = DEFAULT_MAX_DISJUNCTS,
                      powerset_cap: int = DEFAULT_POWERSET_CAP):
    """The disjunction over all guesses of which earlier queries were entailed, atom-rewritten."""
    queries = list(queries)
    _check_powerset(queries, i, powerset_cap)
    phi = disj(state_ref(instance.spec, queries, i, g, max_disjuncts) for g in _guesses(i))
    return atom_rewr(phi, instance.tbox)


def ask_via_powerset(instance: CQEInstance, queries, i: int,
                     max_disjuncts: int = DEFAULT_MAX_DISJUNCTS,
                     powerset_cap: int = DEFAULT_POWERSET_CAP) -> bool:
    """Decide query ``i`` (1-based) by guessing which earlier queries were entailed.

    Evaluates the same sentence as :func:`powerset_sentence`, one guess at
    a time and short-circuiting. Each brave sub-sentence is evaluated once;
    a conjunction is known false without building it when the conjunction
    of the guessed queries alone already has no compliant censor.
    """
    queries = list(queries)
    _check_powerset(queries, i, powerset_cap)
    tbox, policy, abox = instance.tbox, instance.policy, instance.abox
    memo: dict = {(): True}

    def brave(indexes: tuple) -> bool:
        if indexes not in memo:
            if not brave(indexes[:-1]):
                memo[indexes] = False
            else:
                q = conjoin_all([queries[l - 1] for l in indexes], max_disjuncts)
                phi = atom_rewr(brave_ref(q, tbox, policy, max_disjuncts), tbox)
                memo[indexes] = eval_fo(phi, abox)
        return memo[indexes]

    for guess in _guesses(i):
        rejected = all(not brave(tuple(l for l in guess if l < j) + (j,))
                       for j in range(1, i) if j not in guess)
        if rejected and brave(guess + (i,)):
            return True
    return False


def entailed_image(instance: CQEInstance, entq, max_disjuncts: int = DEFAULT_MAX_DISJUNCTS) -> ABox:
    """A policy-compliant image in the closure of the conjunction of ``entq``.

    Disjuncts of the reformulated conjunction are tried in order; the first
    one with a satisfying binding (free variables, denial guards kept)
    gives the image.
    """
    if not entq:
        return ABox()
    tbox, policy = instance.tbox, instance.policy
    target = perfect_ref(conjoin_all(list(entq), max_disjuncts), tbox, max_disjuncts)
    pq = policy_query(policy)
    denials = () if pq is EMPTY_POLICY else perfect_ref(pq, tbox, max_disjuncts).disjuncts
    for r in target.disjuncts:
        guards = tuple(Not(saturate(r, rename_apart(d, r.vars))) for d in denials)
        psi = atom_rewr(And(r.atoms + guards) if guards else conj(r.atoms), tbox)
        found = eval_bindings(psi, instance.abox, r.vars)
        if found:
            return ABox(frozenset(a.substitute(found[0]) for a in r.atoms))
    raise CQEError("the entailed queries have no compliant image")


def materialize_censor(instance: CQEInstance, entq=(),
                       max_disjuncts: int = DEFAULT_MAX_DISJUNCTS) -> ABox:
    """Grow a compliant image of the entailed queries into an optimal censor.

    Atoms of the closure are offered in canonical order and kept whenever
    the censor stays consistent with the policy.
    """
    censor = set(entailed_image(instance, entq, max_disjuncts).atoms)
    spec = instance.spec
    for a in closure(instance.tbox, instance.abox).sorted():
        if a in censor:
            continue
        if is_policy_consistent_with(spec, ABox(frozenset(censor | {a}))):
            censor.add(a)
    return ABox(frozenset(censor))


# ---------------------------------------------------------------------------
# session logs

def _digest(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def input_hashes(instance: CQEInstance) -> dict:
    return {
        "tbox": _digest(render_tbox(instance.tbox)),
        "policy": _digest(render_policy(instance.policy)),
        "abox": _digest(render_abox(instance.abox)),
    }


def render_log(s: Session) -> str:
    h = input_hashes(s.instance)
    lines = [f"#{k}-sha256:{h[k]}" for k in ("tbox", "policy", "abox")]
    lines += [f"{'TRUE' if a else 'FALSE'}\t{render_bucq(q)}" for q, a in s.history]
    return "\n".join(lines) + "\n"


def load_session(tbox: TBox, policy: Policy, abox: ABox, path, mode: str = EXACT,
                 max_disjuncts: int = DEFAULT_MAX_DISJUNCTS) -> Session:
    """Reopen a saved session, replaying every logged query."""
    s = open_session(tbox, policy, abox, mode, max_disjuncts)
    expected = input_hashes(s.instance)
    seen = {}
    records = []
    text = Path(path).read_text(encoding="utf-8")
    for n, line in enumerate(text.splitlines(), 1):
        if not line:
            continue
        if line.startswith("#"):
            key, _, value = line[1:].partition("-sha256:")
            seen[key] = value
            continue
        verdict, _, source = line.partition("\t")
        if verdict not in ("TRUE", "FALSE"):
            raise CQEError(f"line {n}: expected TRUE or FALSE, got {verdict!r}")
        records.append((n, verdict == "TRUE", source))
    for key, digest in expected.items():
        if seen.get(key) != digest:
            raise HashMismatch(f"{key} differs from the one the log was recorded with")
    for n, answer, source in records:
        q = parse_bucq(source)
        got = s.ask(q)
        if got != answer:
            raise ReplayMismatch(f"line {n}: logged {answer}, replay gives {got}")
    return s
