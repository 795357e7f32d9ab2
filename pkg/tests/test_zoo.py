import itertools
from fractions import Fraction as F

import numpy as np
import pytest

from postfa import zoo
from postfa.errors import PreconditionError
from postfa.models import HaltTiming, KwqfaMachine, RecognitionJudgment
from postfa.semantics import check_recognition, evaluate, restart_round, words

AB = ("a", "b")


def test_language_predicates():
    assert zoo.in_leq("") and zoo.in_leq("abba") and not zoo.in_leq("aab")
    assert zoo.is_palindrome("abba") and not zoo.is_palindrome("ab")
    assert zoo.in_leqeq("aab") and not zoo.in_leqeq("aaa") and zoo.in_leqeq("aba") and zoo.in_leqeq("bb")
    assert not zoo.in_leqeq("")


def test_language_lookup():
    assert zoo.language("regex:(ab)*")("abab")
    assert not zoo.language("regex:(ab)*")("aba")
    with pytest.raises(ValueError):
        zoo.language("klingon")


# ---------------------------------------------------------------- L_eq

def test_leq_defaults_and_bound():
    p = zoo.LeqParams()
    assert (p.rho, p.alpha, p.epsilon) == (F(3, 4), F(1, 32), F(1, 4))
    assert zoo.alpha_bound(F(1, 4)) == F(1, 18)


@pytest.mark.parametrize("kw", [dict(rho=F(1, 2)), dict(alpha=F(1, 16)), dict(rho=F(7, 10))])
def test_leq_params_validated(kw):
    with pytest.raises(PreconditionError):
        zoo.LeqParams(**kw)


@pytest.mark.parametrize("eps", [F(1, 4), F(1, 5), F(1, 10), F(1, 3)])
def test_for_epsilon_picks_largest_power_of_two(eps):
    p = zoo.LeqParams.for_epsilon(eps)
    assert p.rho == 1 - eps and p.alpha <= zoo.alpha_bound(eps) < 2 * p.alpha
    assert p.alpha.numerator == 1 and p.alpha.denominator & (p.alpha.denominator - 1) == 0


def test_leq_shape(leq):
    assert leq.states == 8 and leq.halt is HaltTiming.AT_END


@pytest.mark.parametrize("halt", list(HaltTiming))
def test_leq_matches_closed_form(halt):
    m = zoo.build_leq(halt=halt)
    p = zoo.LeqParams()
    for w in words(AB, 6):
        r = restart_round(m, w)
        assert (r.p_accept, r.p_reject) == zoo.leq_round(p, w)


@pytest.mark.parametrize("eps", [F(1, 4), F(1, 5)])
def test_leq_recognizes_with_bounded_error(eps):
    m = zoo.build_leq(zoo.LeqParams.for_epsilon(eps))
    assert check_recognition(m, zoo.in_leq, RecognitionJudgment.bounded(eps), 9).passed


def test_leq_post_verdicts(leq_post, leq):
    for w in words(AB, 5):
        assert evaluate(leq_post, w).f_accept == evaluate(leq, w).f_accept


def test_leqeq():
    m = zoo.build_leqeq()
    assert m.states == 18
    assert check_recognition(m, zoo.in_leqeq, RecognitionJudgment.bounded(F(1, 4)), 8).passed


# ---------------------------------------------------------------- L_pal

def test_lpal_encodings():
    assert zoo.lpal_encodings("ab") == (1 + 2 * 4, 2 + 1 * 4)
    for w in words(AB, 6):
        x, y = zoo.lpal_encodings(w)
        assert (x == y) == zoo.is_palindrome(w)


@pytest.mark.parametrize("kw", [dict(mu=F(1)), dict(epsilon=F(1, 2)), dict(mu=F(3, 4)), dict(digit_a=2), dict(digit_b=4)])
def test_lpal_params_validated(kw):
    with pytest.raises(PreconditionError):
        zoo.LpalParams(**kw)


def test_lpal_linear_system_tracks_encodings():
    mats = zoo.lpal_linear_system()
    for w in words(AB, 5):
        v = np.zeros(7, dtype=complex)
        v[0] = 1
        for sym in ["¢", *w, "$"]:
            v = mats[sym] @ v
        x, y = zoo.lpal_encodings(w)
        assert v[5] == 0.5 and v[6] == x - y


def test_lpal_machine(lpal):
    assert isinstance(lpal, KwqfaMachine) and lpal.states == 21
    for w in words(AB, 4):
        r = restart_round(lpal, w)
        if zoo.is_palindrome(w):
            assert r.p_reject == 0 and r.p_accept > 0
    report = check_recognition(lpal, zoo.is_palindrome, RecognitionJudgment.bounded(F(1, 5)), 6)
    assert report.passed


def test_lpal_complement_cutpoint_zero():
    q = zoo.lpal_complement_cutpoint_zero()
    for w in words(AB, 4):
        assert (evaluate(q, w).f_accept > 0) == (not zoo.is_palindrome(w))


# ---------------------------------------------------------------- regular languages

@pytest.mark.parametrize("name", sorted(zoo.regular_fixtures()))
def test_regular_dfas_match_oracles(name):
    d, oracle = zoo.regular_fixtures()[name]
    post = zoo.dfa_to_zero_error_post(d)
    for w in words(AB, 7):
        assert d.accepts(w) == oracle(w)
        assert evaluate(post, w).f_accept == (1 if oracle(w) else 0)


def test_trivial_pfa():
    assert evaluate(zoo.trivial_pfa(False), "ab").f_accept == 0


@pytest.mark.parametrize("name", sorted(zoo.ZOO))
def test_zoo_entries_build(name):
    m = zoo.ZOO[name](zoo.ZOO_DEFAULT_EPSILON[name])
    assert evaluate(m, "ab") is not None


def test_mu_for():
    assert zoo._mu_for(F(1, 5)) == F(1, 2)
    assert zoo._mu_for(F(1, 10)) == F(1, 4)
