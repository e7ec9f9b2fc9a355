"""Acceptance criteria, one test each.

Every test prints a single ``[PASS]``/``[FAIL]`` line; the lines are also
repeated in the pytest terminal summary.
"""

import itertools
import random
import time

from dyncqe.core import (
    ABox, And, Const, Eq, Exists, InconsistentInput, Not, Or, Var, conjoin_all,
)
from dyncqe.engine import ask_via_powerset, open_session, powerset_sentence
from dyncqe.evaluator import closure, eval_fo, holds_bucq
from dyncqe.gen import Generator, random_instance
from dyncqe.oracle import (
    DepthExhausted, chase_entails, dyn_answers, ent_q, ent_q_flags,
    iga_entails, is_chase_finite, is_maximally_cooperative, opt_cens,
    skeptical_entails, st_cens, st_cens_chain,
)
from dyncqe.parser import Signature, parse_abox, parse_bucq, parse_fo, parse_policy, parse_tbox
from dyncqe.rewriter import atom_rewr, perfect_ref, state_ref

from conftest import EX1_CENSORS, EX2_CENSORS, censor, load_fixture, report

BIG = 1 << 16


def verdict(n, ok, detail):
    report(f"[{'PASS' if ok else 'FAIL'}] criterion {n}: {detail}")
    assert ok, detail


def subsets(abox):
    atoms = abox.sorted()
    for k in range(len(atoms) + 1):
        for s in itertools.combinations(atoms, k):
            yield ABox(frozenset(s))


# ---------------------------------------------------------------------------

def test_criterion_1_running_example():
    t0 = time.perf_counter()
    fx = load_fixture("ex1")
    got = set(opt_cens(fx.instance))
    want = {censor(fx, EX1_CENSORS, n) for n in EX1_CENSORS}
    sizes = [len(p) for p in st_cens_chain(fx.instance, fx.queries)]
    s = open_session(fx.tbox, fx.policy, fx.abox)
    answers = [s.ask(q) for q in fx.queries]
    elapsed = time.perf_counter() - t0
    ok = got == want and len(opt_cens(fx.instance)) == 4 and sizes == [4, 2, 2, 1] \
        and answers == [True, False, True] and elapsed < 1.0
    verdict(1, ok, f"optCens={len(got)} censors match={got == want}, stCens sizes {sizes}, "
                   f"answers {answers}, {elapsed:.3f}s")


def test_criterion_2_four_censor_instance():
    fx = load_fixture("ex2")
    got = set(opt_cens(fx.instance))
    want = {censor(fx, EX2_CENSORS, n) for n in EX2_CENSORS}
    state = set(st_cens(fx.instance, fx.queries))
    with_c = {censor(fx, EX2_CENSORS, n) for n in ("C1", "C2", "C3")}
    ok = got == want and state == with_c
    verdict(2, ok, f"optCens match={got == want}, stCens after ASK C(?x) = "
                   f"{sorted(len(c) for c in state)} sized, match={state == with_c}")


def hand_rows():
    """The four guess rows for the third query, written out by hand."""
    f = parse_fo
    x, z, w = Var("x"), Var("z"), Var("w")
    buy_ja, abc_a = f("buy(john,m_a)"), f("Abc(m_a)")
    buy_xb = f("buy(?x,m_b)")
    guard = Exists((z, w), And((f("buy(?z,?w)"), f("Abc(?w)"),
                                Eq(z, Const("john")), Eq(w, Const("m_a")))))
    return {
        (): And((Not(buy_ja), Not(abc_a), Exists((x,), buy_xb))),
        (1,): And((Not(And((buy_ja, abc_a, Not(guard)))),
                   Exists((x,), And((buy_ja, buy_xb))))),
        (2,): And((Not(buy_ja), Exists((x,), And((abc_a, buy_xb))))),
        (1, 2): And((Exists((x,), And((buy_ja, abc_a, buy_xb))), Not(guard))),
    }


def test_criterion_3_guess_expansion():
    fx = load_fixture("ex1")
    rows = hand_rows()
    hand = Or(tuple(rows.values()))
    raw = Or(tuple(state_ref(fx.spec, fx.queries, 3, g) for g in rows))
    rewritten = powerset_sentence(fx.instance, fx.queries, 3)
    cl = closure(fx.tbox, fx.abox)
    mismatches = 0
    n = 0
    for s in subsets(cl):
        n += 1
        h = eval_fo(hand, s)
        mismatches += (eval_fo(raw, s) != h) + (eval_fo(rewritten, s) != h)
    row_true = [g for g, phi in rows.items() if eval_fo(phi, fx.abox)]
    ok = n == 32 and mismatches == 0 and eval_fo(rewritten, fx.abox) and row_true == [(1,)]
    verdict(3, ok, f"{n} subsets of cl, {mismatches} mismatches, true on A via guesses {row_true}")


def test_criterion_4_memory_optimized_sentence():
    fx = load_fixture("ex1")
    q1, _, q3 = fx.queries
    s = open_session(fx.tbox, fx.policy, fx.abox)
    assert s.ask(q1)
    phi = s.sentence(q3)
    target = parse_fo("(EXISTS (?x) (AND buy(john,m_a) buy(?x,m_b)))")
    table = [(eval_fo(phi, a), eval_fo(target, a)) for a in subsets(closure(fx.tbox, fx.abox))]
    bad = sum(p != t for p, t in table)
    verdict(4, len(table) == 32 and bad == 0, f"{len(table)} subsets, {bad} mismatches")


def test_criterion_5_oracle_sweep():
    t0 = time.perf_counter()
    mismatches = []
    for seed in range(1000):
        g = Generator(seed)
        inst = random_instance(g)
        qs = g.queries()
        s = open_session(inst.tbox, inst.policy, inst.abox, max_disjuncts=BIG)
        answers = [s.ask(q) for q in qs]
        if answers != dyn_answers(inst, qs) or s.entq != ent_q(inst, qs):
            mismatches.append((seed, "oracle"))
        for i in range(1, len(qs) + 1):
            if ask_via_powerset(inst, qs, i, max_disjuncts=BIG) != answers[i - 1]:
                mismatches.append((seed, f"powerset {i}"))
    elapsed = time.perf_counter() - t0
    ok = not mismatches and elapsed < 300
    verdict(5, ok, f"1000 instances, {len(mismatches)} mismatches {mismatches[:5]}, {elapsed:.1f}s")


def test_criterion_6_rewriting_vs_chase():
    checked, seed, bad = 0, 0, []
    while checked < 1000:
        g = Generator(seed)
        seed += 1
        t = g.tbox()
        if not is_chase_finite(t):
            continue
        a, q = g.abox(), g.bucq()
        try:
            expected = chase_entails(t, a, q)
        except DepthExhausted:
            bad.append((seed - 1, "unsaturated"))
            checked += 1
            continue
        if holds_bucq(perfect_ref(q, t, BIG), a) != expected:
            bad.append((seed - 1, "disagree"))
        checked += 1
    verdict(6, not bad, f"{checked} chase-finite instances ({seed} seeds), "
                        f"{len(bad)} failures {bad[:5]}")


def test_criterion_7_property_suite():
    counts = dict.fromkeys(
        ["chain", "persistence", "no-domination", "cooperativity", "semantics-chain", "materialized"], 0)
    rng = random.Random(0)

    def entails(inst, c, q):
        return holds_bucq(perfect_ref(q, inst.tbox, BIG), c)

    for seed in range(500):
        g = Generator(seed)
        inst = random_instance(g)
        qs = g.queries()
        chain = st_cens_chain(inst, qs)
        if not all(b and set(b) <= set(a) for a, b in zip(chain, chain[1:])):
            counts["chain"] += 1

        s = open_session(inst.tbox, inst.policy, inst.abox, max_disjuncts=BIG)
        answers = [s.ask(q) for q in qs]
        order = list(range(len(qs)))
        rng.shuffle(order)
        if any(s.ask(qs[k]) != answers[k] for k in order):
            counts["persistence"] += 1

        flags = ent_q_flags(inst, qs)
        optimal = opt_cens(inst)
        for c in optimal:
            mine = [entails(inst, c, q) for q in qs]
            if mine != flags and all(m or not f for m, f in zip(mine, flags)):
                counts["no-domination"] += 1

        state = set(chain[-1])
        for c in optimal:
            lit = is_maximally_cooperative(inst, qs, c)
            opt = is_maximally_cooperative(inst, qs, c, optimal_only=True)
            if not ((c in state) == lit == opt):
                counts["cooperativity"] += 1

        for q, f in zip(qs, flags):
            iga, sk = iga_entails(inst, q), skeptical_entails(inst, q)
            if (iga and not sk) or (sk and not f):
                counts["semantics-chain"] += 1

        c = open_session(inst.tbox, inst.policy, inst.abox, max_disjuncts=BIG)
        for q in qs:
            c.ask(q)
        m = c.materialize_censor()
        entq_ok = not c.entq or holds_bucq(
            perfect_ref(conjoin_all(c.entq, BIG), inst.tbox, BIG), m)
        if m not in optimal or m not in state or not entq_ok:
            counts["materialized"] += 1

    fx = load_fixture("ex1")
    q1 = fx.queries[0]
    witness = q1 in ent_q(fx.instance, fx.queries) and not skeptical_entails(fx.instance, q1) \
        and not iga_entails(fx.instance, q1)
    ok = not any(counts.values()) and witness
    verdict(7, ok, f"500 instances, violations {counts}, strictness witness on q1: {witness}")


def test_criterion_8_atom_rewriting_contract():
    checked, seed, bad = 0, 0, []
    while checked < 500:
        g = Generator(seed)
        seed += 1
        t, a, phi = g.tbox(), g.abox(), g.formula()
        try:
            cl = closure(t, a)
        except InconsistentInput:
            continue
        checked += 1
        if eval_fo(phi, cl) != eval_fo(atom_rewr(phi, t), a):
            bad.append(seed - 1)
    verdict(8, not bad, f"{checked} triples ({seed} seeds), {len(bad)} violations {bad[:5]}")


def synthetic(n_atoms=10_000, seed=7):
    rng = random.Random(seed)
    facts = set()
    while len(facts) < n_atoms:
        k = rng.random()
        if k < 0.5:
            facts.add(f"buy(p{rng.randrange(2500)},d{rng.randrange(500)})")
        elif k < 0.7:
            facts.add(f"contain(d{rng.randrange(500)},s{rng.randrange(50)})")
        elif k < 0.85:
            facts.add(f"Abc(d{rng.randrange(500)})")
        else:
            facts.add(f"Patient(p{rng.randrange(2500)})")
    sig = Signature()
    tbox = parse_tbox("Abc ISA Antiseizure\nEX buy ISA Customer\nEX buy- ISA Drug\n"
                      "Patient ISA Customer\nDrug ISA NOT Customer", sig)
    policy = parse_policy("DENY buy(?x,?y), Antiseizure(?y)\n"
                          "DENY buy(?x,?y), contain(?y,s0)\n"
                          "DENY Patient(?x), buy(?x,?y), Abc(?y)", sig)
    abox = parse_abox("\n".join(sorted(facts)), sig)
    queries = [parse_bucq("ASK " + q, sig) for q in (
        "buy(p1,?y)", "Customer(p2)", "Abc(d3)", "buy(?x,?y), Drug(?y)", "contain(?x,s1)",
        "Antiseizure(?x)", "buy(p5,?y), contain(?y,?z)", "Patient(?x)", "Drug(d7)", "buy(?x,d9)")]
    return tbox, policy, abox, queries


def test_criterion_9_scale():
    tbox, policy, abox, queries = synthetic()
    t0 = time.perf_counter()
    s = open_session(tbox, policy, abox)
    answers = [s.ask(q) for q in queries]
    elapsed = time.perf_counter() - t0
    ok = len(abox) == 10_000 and len(queries) == 10 and elapsed < 60
    verdict(9, ok, f"{len(abox)} atoms, {len(queries)} queries, "
                   f"{sum(answers)} true, {elapsed:.1f}s")
