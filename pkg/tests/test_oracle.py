import pytest
from hypothesis import given, settings, strategies as st

from dyncqe.core import ABox, CQEInstance, conjoin_all
from dyncqe.evaluator import closure, find_images, holds_bucq, is_policy_consistent_with
from dyncqe.gen import Generator, random_instance
from dyncqe.oracle import (
    CensorSpace, CyclicTBox, DepthExhausted, LimitExceeded, OracleLimits,
    chase, chase_entails, ent_q, ent_q_flags, existential_graph, iga_entails,
    is_chase_finite, is_maximally_cooperative, opt_cens, opt_cens_entailing,
    skeptical_entails, st_cens, st_cens_chain,
)
from dyncqe.parser import parse_abox, parse_bucq, parse_policy, parse_tbox
from dyncqe.rewriter import perfect_ref, policy_query

from conftest import EX1_CENSORS, EX2_CENSORS, censor

BIG = 1 << 16


def named(fx, table, *names):
    return [censor(fx, table, n) for n in names]


def same(a, b):
    return set(a) == set(b) and len(a) == len(b)


# -- chase

def test_chase_examples(ex1):
    q = parse_bucq("ASK buy(?x,?y), Antiseizure(?y)")
    assert chase_entails(ex1.tbox, ex1.abox, q)
    t = parse_tbox("A ISA EX P\nEX P ISA B")
    assert chase_entails(t, parse_abox("A(c)"), parse_bucq("ASK B(c)"))
    assert not chase_entails(t, parse_abox("A(c)"), parse_bucq("ASK P(c,c)"))
    res = chase(t, parse_abox("A(c)"))
    assert res.saturated and res.nulls == 1


def test_chase_without_tbox_is_plain_evaluation(ex1):
    empty = parse_tbox("")
    for text in ("ASK buy(?x,m_b)", "ASK Antiseizure(?x)", "ASK buy(?x,?y), Abc(?y)"):
        q = parse_bucq(text)
        assert chase_entails(empty, ex1.abox, q) == holds_bucq(q, ex1.abox)


def test_existential_graph_and_cycles():
    t = parse_tbox("A ISA EX P\nEX P- ISA EX Q")
    assert is_chase_finite(t)
    assert existential_graph(t)
    cyc = parse_tbox("A ISA EX P\nEX P- ISA A")
    assert not is_chase_finite(cyc)
    with pytest.raises(CyclicTBox):
        chase_entails(cyc, parse_abox("A(c)"), parse_bucq("ASK A(c)"))


def test_depth_exhausted():
    t = parse_tbox("A ISA EX P\nEX P- ISA EX Q\nEX Q- ISA EX R")
    q = parse_bucq("ASK R(?x,?y)")
    assert chase_entails(t, parse_abox("A(c)"), q)
    with pytest.raises(DepthExhausted):
        chase_entails(t, parse_abox("A(c)"), q, depth=1)


# -- censors

def test_opt_cens_examples(ex1, ex2):
    assert same(opt_cens(ex1.instance), named(ex1, EX1_CENSORS, "C1", "C2", "C3", "C4"))
    assert same(opt_cens(ex2.instance), named(ex2, EX2_CENSORS, "C1", "C2", "C3", "C4"))
    honest = CQEInstance(ex1.tbox, parse_policy(""), ex1.abox)
    assert opt_cens(honest) == [closure(ex1.tbox, ex1.abox)]


def test_limits(ex1):
    with pytest.raises(LimitExceeded):
        opt_cens(ex1.instance, OracleLimits(max_closure_atoms=4))
    with pytest.raises(ValueError):
        OracleLimits(chase_depth=0)


def test_opt_cens_entailing_examples(ex1, ex2):
    q1, q2, _ = ex1.queries
    assert same(opt_cens_entailing(ex1.instance, q1), named(ex1, EX1_CENSORS, "C1", "C2"))
    assert same(opt_cens_entailing(ex1.instance, q2), named(ex1, EX1_CENSORS, "C3", "C4"))
    assert same(opt_cens_entailing(ex2.instance, ex2.queries[0]),
                named(ex2, EX2_CENSORS, "C1", "C2", "C3"))


def test_st_cens_examples(ex1, ex2):
    chain = st_cens_chain(ex1.instance, ex1.queries)
    assert [len(p) for p in chain] == [4, 2, 2, 1]
    assert same(st_cens(ex1.instance, ex1.queries[:1]), named(ex1, EX1_CENSORS, "C1", "C2"))
    assert st_cens(ex1.instance, ex1.queries) == named(ex1, EX1_CENSORS, "C1")
    assert same(st_cens(ex2.instance, ex2.queries), named(ex2, EX2_CENSORS, "C1", "C2", "C3"))


def test_ent_q_examples(ex1):
    q1, _, q3 = ex1.queries
    assert ent_q(ex1.instance, ex1.queries) == [q1, q3]
    assert ent_q(ex1.instance, []) == []
    honest = CQEInstance(ex1.tbox, parse_policy(""), ex1.abox)
    qs = ex1.queries + [ex1.q("contain(?x,?y), Abc(?x)")]
    assert ent_q_flags(honest, qs) == [True, True, True, False]


def test_skeptical_and_iga_examples(ex1):
    q1, q2, _ = ex1.queries
    assert not skeptical_entails(ex1.instance, q1)
    assert not skeptical_entails(ex1.instance, q2)
    assert not iga_entails(ex1.instance, q1)
    honest = CQEInstance(ex1.tbox, parse_policy(""), ex1.abox)
    q = ex1.q("Antiseizure(m_a)")
    assert skeptical_entails(honest, q) and iga_entails(honest, q)
    # strictness of the chain: q1 is answered yes dynamically but not skeptically
    assert q1 in ent_q(ex1.instance, ex1.queries)


def test_iga_weaker_than_skeptical(ex2):
    q = ex2.q("C(?x) OR D(?x)")
    assert skeptical_entails(ex2.instance, q)
    assert not iga_entails(ex2.instance, q)


def test_maximally_cooperative_examples(ex1):
    qs = ex1.queries
    c1, c4 = named(ex1, EX1_CENSORS, "C1", "C4")
    assert is_maximally_cooperative(ex1.instance, qs, c1)
    assert not is_maximally_cooperative(ex1.instance, qs, c4)
    assert is_maximally_cooperative(ex1.instance, [], c4)
    assert is_maximally_cooperative(ex1.instance, [], ABox())


def test_censor_space_consistency_matches_direct_check(ex1):
    space = CensorSpace(ex1.instance)
    for m in range(len(space.masks)):
        assert space.consistent[m] == is_policy_consistent_with(ex1.spec, space.censor(m))


# -- properties

SEEDS = st.integers(0, 10**6)


def sweep(seed):
    g = Generator(seed)
    inst = random_instance(g)
    return g, inst, g.queries()


def entails(inst, c, q):
    return holds_bucq(perfect_ref(q, inst.tbox, BIG), c)


@settings(max_examples=150, deadline=None)
@given(SEEDS)
def test_st_cens_chain_descends(seed):
    _, inst, qs = sweep(seed)
    chain = st_cens_chain(inst, qs)
    for before, after in zip(chain, chain[1:]):
        assert after and set(after) <= set(before)


@settings(max_examples=150, deadline=None)
@given(SEEDS)
def test_st_cens_closed_form(seed):
    _, inst, qs = sweep(seed)
    eq = ent_q(inst, qs)
    expected = [c for c in opt_cens(inst) if all(entails(inst, c, q) for q in eq)]
    assert st_cens(inst, qs) == expected


@settings(max_examples=150, deadline=None)
@given(SEEDS)
def test_no_optimal_censor_dominates(seed):
    _, inst, qs = sweep(seed)
    flags = ent_q_flags(inst, qs)
    for c in opt_cens(inst):
        mine = [entails(inst, c, q) for q in qs]
        covers = all(m or not f for m, f in zip(mine, flags))
        assert not (covers and mine != flags)


@settings(max_examples=150, deadline=None)
@given(SEEDS)
def test_state_censors_are_the_maximally_cooperative_ones(seed):
    _, inst, qs = sweep(seed)
    state = set(st_cens(inst, qs))
    for c in opt_cens(inst):
        assert (c in state) == is_maximally_cooperative(inst, qs, c, optimal_only=True)
        if c in state:
            assert is_maximally_cooperative(inst, qs, c)


@settings(max_examples=150, deadline=None)
@given(SEEDS)
def test_iga_skeptical_dynamic_chain(seed):
    _, inst, qs = sweep(seed)
    flags = ent_q_flags(inst, qs)
    for q, f in zip(qs, flags):
        if iga_entails(inst, q):
            assert skeptical_entails(inst, q)
        if skeptical_entails(inst, q):
            assert f


@settings(max_examples=150, deadline=None)
@given(SEEDS)
def test_entailment_through_compliant_images(seed):
    _, inst, qs = sweep(seed)
    cl = closure(inst.tbox, inst.abox)
    space = CensorSpace(inst)
    pq = policy_query(inst.policy)
    for i, q in enumerate(qs):
        prior = ent_q(inst, qs[:i])
        asked = ent_q_flags(inst, qs[:i + 1])[-1]
        target = conjoin_all(prior + [q], BIG)
        # some consistent subset of the closure entails the conjunction
        by_subsets = bool((space.consistent & space.entails(target)).any())
        assert asked == by_subsets
        # equivalently some image of the rewriting leaves the policy query false
        images = find_images(perfect_ref(target, inst.tbox, BIG), cl)
        by_images = any(not pq or not holds_bucq(perfect_ref(pq, inst.tbox, BIG), img)
                        for img in images)
        assert asked == by_images
