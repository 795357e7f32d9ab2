from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from postfa import fixtures, numkit, transforms as T, zoo
from postfa.errors import PreconditionError, VariantMismatchError
from postfa.models import CENT, DOLLAR, HaltTiming, KwqfaMachine, PostMachine, RestartPfa, RestartQfa, Tau
from postfa.semantics import evaluate, restart_round, words

AB = ("a", "b")


def same_verdict(a, b, tol=0):
    if a.valid != b.valid:
        return False
    if not a.valid:
        return True
    return abs(a.f_accept - b.f_accept) <= tol


# ---------------------------------------------------------------- restart <-> postselection

@pytest.mark.parametrize("name", ["leq", "leq-per-step", "split", "early-halting", "random-rational"])
def test_restart_to_post_keeps_verdicts(restart_machines, name):
    m = restart_machines[name]
    m = T.defer_halting(m) if m.halt is HaltTiming.PER_STEP else m
    post = T.restart_to_post(m)
    for w in words(AB, 4):
        assert evaluate(post, w) == evaluate(m, w)


@pytest.mark.parametrize("name", ["embedded-split", "random-qfa"])
def test_quantum_restart_to_post(restart_machines, name):
    m = restart_machines[name]
    post = T.restart_to_post(m)
    for w in words(AB, 3):
        assert same_verdict(evaluate(post, w), evaluate(m, w), 1e-12)


def test_post_to_restart_round_trip(leq_post):
    back = T.post_to_restart(leq_post)
    assert back.states == leq_post.states + 3
    for w in words(AB, 5):
        assert evaluate(back, w) == evaluate(leq_post, w)
        assert restart_round(back, w) == restart_round(T.restart_to_post(back), w)


@pytest.mark.parametrize("name", ["leq-per-step", "early-halting"])
def test_defer_halting_preserves_rounds(restart_machines, name):
    m = restart_machines[name]
    deferred = T.defer_halting(m)
    assert deferred.halt is HaltTiming.AT_END and deferred.states == m.states + 3
    for w in words(AB, 5):
        assert restart_round(deferred, w) == restart_round(m, w)


def test_defer_halting_is_identity_at_end(leq):
    assert T.defer_halting(leq) is leq


# ---------------------------------------------------------------- closure

def test_complement_example(leq_post):
    v = evaluate(T.post_complement(leq_post), "a")
    assert v.f_accept == F(1025, 1217)


@pytest.mark.parametrize("w", ["", "a", "ab", "ba", "aab", "abab"])
def test_complement_swaps_verdicts(leq_post, w):
    v, c = evaluate(leq_post, w), evaluate(T.post_complement(leq_post), w)
    assert c.f_accept == v.f_reject


def test_union_with_complement_example(leq_post):
    v = evaluate(T.post_union(leq_post, T.post_complement(leq_post)), "ab")
    assert v.f_reject == F(3, 16)


def test_amplify_example(leq_post):
    assert evaluate(T.amplify(leq_post, 2), "ab").f_accept == F(9, 10)


def test_amplify_one_is_identity(leq_post):
    assert T.amplify(leq_post, 1) is leq_post
    with pytest.raises(PreconditionError):
        T.amplify(leq_post, 0)


@pytest.mark.parametrize("k", [2, 3])
def test_amplify_powers_round_probabilities(leq_post, k):
    amp = T.amplify(leq_post, k)
    assert amp.states == leq_post.states**k
    for w in ["", "a", "ab", "abb"]:
        r, ra = restart_round(T.post_to_restart(leq_post), w), evaluate(amp, w).rounds
        assert (ra.p_accept, ra.p_reject) == (r.p_accept**k, r.p_reject**k)


def test_tensor_products_product_rounds(leq_post):
    m2 = T.post_complement(zoo.dfa_to_zero_error_post(zoo.regular_fixtures()["ab-star"][0]))
    inter = T.post_intersection(leq_post, m2)
    union = T.post_union(leq_post, m2)
    for w in words(AB, 4):
        a, b = evaluate(leq_post, w).rounds, evaluate(m2, w).rounds
        ri, ru = evaluate(inter, w).rounds, evaluate(union, w).rounds
        assert ri.p_accept == a.p_accept * b.p_accept
        assert ri.p_accept + ri.p_reject == a.total * b.total
        assert ru.p_reject == a.p_reject * b.p_reject


def test_tensor_rejects_mixed_variants(leq_post):
    q = T.restart_to_post(fixtures.random_restart_qfa(1))
    with pytest.raises(VariantMismatchError):
        T.post_union(leq_post, q)


# ---------------------------------------------------------------- amplification plan

def test_choose_k_example():
    plan = T.choose_k(F(1, 4), F(1, 16))
    assert plan.k == 3 and plan.closed_form_k == 3


@given(st.fractions(min_value=F(1, 100), max_value=F(49, 100), max_denominator=100))
def test_choose_k_is_minimal(eps):
    plan = T.choose_k(eps)
    ratio, bound = eps / (1 - eps), eps * eps / (1 - eps * eps)
    assert ratio**plan.k <= bound
    assert plan.k == 1 or ratio ** (plan.k - 1) > bound
    assert plan.closed_form_k >= plan.k


@pytest.mark.parametrize("bad", [F(0), F(1, 2), F(3, 4)])
def test_choose_k_rejects_out_of_range(bad):
    with pytest.raises(PreconditionError):
        T.choose_k(bad)


# ---------------------------------------------------------------- cutpoint

def test_cutpoint_examples(leq_post):
    c = T.post_to_cutpoint(leq_post)
    assert c.states == leq_post.states + 2
    assert evaluate(c, "ab").f_accept == F(2049, 4096)
    assert evaluate(c, "aab").f_accept == F(8387775, 16777216)


def test_cutpoint_formula(leq_post):
    c = T.post_to_cutpoint(leq_post)
    for w in words(AB, 5):
        r = evaluate(leq_post, w).rounds
        assert evaluate(c, w).f_accept == r.p_accept + (1 - r.total) / 2


def test_quantum_cutpoint_formula():
    post = T.restart_to_post(fixtures.random_restart_qfa(4, 3))
    c = T.post_to_cutpoint(post)
    for w in words(AB, 3):
        r = evaluate(post, w).rounds
        assert evaluate(c, w).f_accept == pytest.approx(r.p_accept + (1 - r.total) / 2, abs=1e-12)


def test_zero_error_cutpoint_zero_sides():
    d, oracle = zoo.regular_fixtures()["even-a"]
    post = zoo.dfa_to_zero_error_post(d)
    lang, judge = T.zero_error_post_to_cutpoint_zero(post)
    co, _ = T.zero_error_post_to_cutpoint_zero(post, T.Side.COMPLEMENT)
    for w in words(AB, 5):
        assert (evaluate(lang, w).f_accept > 0) == oracle(w)
        assert (evaluate(co, w).f_accept > 0) == (not oracle(w))


# ---------------------------------------------------------------- quantum compilation

@pytest.mark.parametrize("seed", range(3))
def test_kwqfa_to_qfa_restart_keeps_rounds(seed):
    kw = fixtures.random_kwqfa(seed, 4)
    q = T.kwqfa_restart_to_qfa_restart(kw)
    for w in words(AB, 3):
        a, b = restart_round(kw, w), restart_round(q, w)
        assert abs(a.p_accept - b.p_accept) <= 1e-12 and abs(a.p_reject - b.p_reject) <= 1e-12


@pytest.mark.parametrize("seed", range(3))
def test_linearization_reproduces_rounds(seed):
    m = fixtures.random_restart_qfa(seed, 3)
    lin = T.linearize(m)
    assert lin.accept_index == 3 * 3 + 1 and lin.reject_index == 3 * 3 + 2
    for w in words(AB, 3):
        a, b = lin.outcome(w), restart_round(m, w)
        assert abs(a.p_accept - b.p_accept) <= 1e-12 and abs(a.p_reject - b.p_reject) <= 1e-12


def test_linearization_diagonal_index():
    # accept state 2 of a 3-state machine sits at position (2-1)*3 + 2 = 5
    m = RestartQfa(fixtures.random_qfa(0, 3, 2, accept=(2,)), {3})
    sel = T.linearize(m).selector
    assert np.flatnonzero(sel[0]).tolist() == [4]
    assert np.flatnonzero(sel[1]).tolist() == [8]


@pytest.mark.parametrize("n", [1, 2])
def test_compiler_state_count_and_squares(n):
    m = fixtures.random_restart_qfa(7, n)
    out = T.qfa_restart_to_kwqfa_restart(m, epsilon=F(1, 4))
    assert out.machine.states == 3 * n * n + 6
    assert out.epsilon_out == F(1, 10)
    for u in out.machine.unitaries.values():
        assert np.abs(u.conj().T @ u - np.eye(len(u))).max() <= 1e-9
    for w in words(AB, 2):
        old, new = restart_round(m, w), restart_round(out.machine, w)
        factor = out.scale ** (-2 * (len(w) + 2))
        assert new.p_accept == pytest.approx(old.p_accept**2 * factor, rel=1e-9, abs=1e-15)
        assert new.p_reject == pytest.approx(old.p_reject**2 * factor, rel=1e-9, abs=1e-15)


@given(st.fractions(min_value=F(1, 100), max_value=F(49, 100), max_denominator=100))
def test_compiled_bound_never_worse(eps):
    assert T.compiled_error_bound(eps) <= eps


# ---------------------------------------------------------------- Latvian machines

def test_zero_support_dfa_is_b_star():
    d = T.zero_support_dfa(fixtures.needs_a_post(Tau.ACCEPT))
    for w in words(AB, 6):
        assert d.accepts(w) == ("a" not in w)


def test_zero_support_dfa_is_even_length():
    d = T.zero_support_dfa(fixtures.parity_post(Tau.REJECT))
    for w in words(AB, 6):
        assert d.accepts(w) == (len(w) % 2 == 0)


@pytest.mark.parametrize("name", ["needs-a/A", "needs-a/R", "parity/A", "parity/R", "leq/A"])
def test_latvian_to_post_keeps_verdicts(name):
    m = fixtures.latvian_fixtures()[name]
    post = T.latvian_to_post(m)
    assert isinstance(post, PostMachine)
    for w in words(AB, 5):
        v, p = evaluate(m, w), evaluate(post, w)
        assert p.valid and p.f_accept == v.f_accept


def test_cutpoint_zero_to_latvian_sides():
    q = fixtures.random_qfa(2, 2, 2)
    nq = T.cutpoint_zero_to_latvian(q, "nqal")
    co = T.cutpoint_zero_to_latvian(q, "conqal")
    assert nq.tau is Tau.REJECT and co.tau is Tau.ACCEPT
    with pytest.raises(ValueError):
        T.cutpoint_zero_to_latvian(q, "sideways")
