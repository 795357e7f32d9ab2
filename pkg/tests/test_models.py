from fractions import Fraction as F
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from postfa import fixtures, transforms, zoo
from postfa.errors import InvariantError, MachineFormatError, PreconditionError
from postfa.fileformat import emit_machine, kind_of, load_machine, parse_machine
from postfa.models import (
    CENT,
    DOLLAR,
    HaltTiming,
    KwqfaMachine,
    LatvianPostMachine,
    PfaMachine,
    PostMachine,
    QfaMachine,
    RecognitionJudgment,
    RestartPfa,
    RestartQfa,
    Tau,
    check_alphabet,
)

FIXTURES = Path(__file__).parent / "fixtures"
GOOD_FILES = sorted(p for p in FIXTURES.glob("*.machine") if not p.name.startswith("bad"))


def identity_mats(n, alphabet=("a",)):
    return {s: np.eye(n, dtype=int).tolist() for s in (CENT, *alphabet, DOLLAR)}


# ---------------------------------------------------------------- alphabets

@pytest.mark.parametrize("bad", [(), ("a", "a"), (CENT,), (DOLLAR,), ("ab",), (" ",), ("#",)])
def test_alphabet_rejections(bad):
    with pytest.raises(InvariantError):
        check_alphabet(bad)


def test_alphabet_keeps_order():
    assert check_alphabet(["b", "a"]) == ("b", "a")


# ---------------------------------------------------------------- constructors

def test_pfa_rejects_missing_symbol():
    mats = identity_mats(2)
    del mats["a"]
    with pytest.raises(InvariantError):
        PfaMachine(2, ("a",), mats)


def test_pfa_rejects_wrong_shape():
    mats = identity_mats(2)
    mats["a"] = [[1]]
    with pytest.raises(InvariantError):
        PfaMachine(2, ("a",), mats)


def test_pfa_rejects_out_of_range_accept():
    with pytest.raises(InvariantError):
        PfaMachine(2, ("a",), identity_mats(2), {3})


@given(st.sampled_from([CENT, "a", DOLLAR]), st.integers(0, 2), st.integers(0, 2),
       st.fractions(min_value=F(-1, 2), max_value=F(1, 2), max_denominator=1000).filter(lambda x: x != 0))
def test_pfa_rejects_perturbed_matrices(sym, i, j, delta):
    mats = identity_mats(3)
    mats[sym] = [[F(x) for x in row] for row in mats[sym]]
    mats[sym][i][j] += delta
    with pytest.raises(InvariantError):
        PfaMachine(3, ("a",), mats)


@given(st.integers(0, 3), st.floats(1e-6, 0.5))
def test_qfa_rejects_perturbed_kraus(entry, delta):
    m = fixtures.random_qfa(3, 2, 2)
    elems = [np.array(e) for e in m.kraus["a"]]
    elems[0].flat[entry] += delta
    kraus = dict(m.kraus)
    kraus["a"] = tuple(elems)
    with pytest.raises(InvariantError):
        QfaMachine(2, m.alphabet, kraus, m.accept)


@given(st.integers(0, 15), st.floats(1e-6, 0.5))
def test_kwqfa_rejects_perturbed_unitary(entry, delta):
    m = fixtures.random_kwqfa(1, 4)
    us = {s: np.array(u) for s, u in m.unitaries.items()}
    us[CENT].flat[entry] += delta
    with pytest.raises(InvariantError):
        KwqfaMachine(4, m.alphabet, us, m.accept, m.reject, m.restart)


def test_kwqfa_partition_must_be_disjoint():
    us = {s: np.eye(4) for s in (CENT, "a", DOLLAR)}
    with pytest.raises(InvariantError):
        KwqfaMachine(4, ("a",), us, {2}, {2}, {3})


def test_kwqfa_start_state_must_be_nonhalting():
    us = {s: np.eye(3) for s in (CENT, "a", DOLLAR)}
    with pytest.raises(InvariantError):
        KwqfaMachine(3, ("a",), us, {1}, {2})


def test_at_end_restart_machine_rejects_early_halting():
    # state 2 is the accept state and is reached on the left end-marker
    mats = identity_mats(2)
    mats[CENT] = [[0, 0], [1, 1]]
    pfa = PfaMachine(2, ("a",), mats, {2})
    with pytest.raises(InvariantError):
        RestartPfa(pfa)
    assert RestartPfa(pfa, halt=HaltTiming.PER_STEP).accept == {2}


def test_restart_pfa_sets_must_be_disjoint():
    pfa = PfaMachine(3, ("a",), identity_mats(3), {2})
    with pytest.raises(InvariantError):
        RestartPfa(pfa, {2}, {3})


def test_restart_qfa_restart_set_is_complement():
    m = fixtures.random_restart_qfa(2, 3)
    assert m.restart == {3}
    with pytest.raises(InvariantError):
        RestartQfa(m.qfa, {1})


def test_post_machine_sets_disjoint_and_base_accept_dropped():
    pfa = PfaMachine(2, ("a",), identity_mats(2), {1})
    with pytest.raises(InvariantError):
        PostMachine(pfa, {1}, {1})
    assert PostMachine(pfa, {1}, {2}).base.accept == frozenset()


def test_bounded_judgment_needs_small_epsilon():
    with pytest.raises(PreconditionError):
        RecognitionJudgment.bounded(F(1, 2))
    assert RecognitionJudgment.bounded(0).value == 0


def test_machines_are_immutable():
    m = zoo.build_leq()
    with pytest.raises(ValueError):
        m.pfa.transitions["a"][0, 0] = F(1)
    with pytest.raises(AttributeError):
        m.reject = frozenset()


def test_restart_partitions_are_exhaustive(restart_machines):
    for m in restart_machines.values():
        if isinstance(m, RestartPfa):
            parts = [m.accept, m.reject, m.restart, m.nonhalting]
        else:
            parts = [m.accept, m.reject, m.restart]
        union = frozenset().union(*parts)
        assert union == frozenset(range(1, m.states + 1))
        assert sum(len(p) for p in parts) == m.states


# ---------------------------------------------------------------- file format

def test_identity_file_is_golden():
    text = (FIXTURES / "identity.machine").read_text()
    m = parse_machine(text)
    assert isinstance(m, PfaMachine) and m.accept == {1}
    assert emit_machine(m) == text
    assert emit_machine(zoo.trivial_pfa(True)) == text


def test_rationals_are_normalised():
    m = load_machine(FIXTURES / "split.machine")
    assert m.transitions[CENT][0, 0] == F(1, 2)
    assert "  1/2 0\n" in emit_machine(m)


def test_stochasticity_error_names_symbol():
    with pytest.raises(MachineFormatError, match="'¢'.*column stochastic"):
        load_machine(FIXTURES / "bad-stochastic.machine")


@pytest.mark.parametrize("path", GOOD_FILES, ids=lambda p: p.name)
def test_emit_is_canonical_fixed_point(path):
    m = load_machine(path)
    once = emit_machine(m)
    again = parse_machine(once)
    assert again == m
    assert emit_machine(again) == once


ROUND_TRIP = {
    "leq": zoo.build_leq(),
    "leq-per-step": zoo.build_leq(halt=HaltTiming.PER_STEP),
    "leq-post": zoo.leq_post(),
    "leqeq": zoo.build_leqeq(),
    "lpal": zoo.build_lpal(),
    "lpal-co": zoo.lpal_complement_cutpoint_zero(),
    "qfa-restart": fixtures.random_restart_qfa(5, 3),
    "post-qfa": transforms.restart_to_post(fixtures.random_restart_qfa(5, 3)),
    "lpost-pfa": fixtures.needs_a_post(Tau.REJECT),
    "lpost-qfa": transforms.cutpoint_zero_to_latvian(zoo.lpal_complement_cutpoint_zero(), "conqal"),
    "kwqfa": fixtures.random_kwqfa(3, 3),
}


@pytest.mark.parametrize("name", ROUND_TRIP)
def test_round_trip_every_kind(name):
    m = ROUND_TRIP[name]
    back = parse_machine(emit_machine(m))
    assert kind_of(back) == kind_of(m)
    assert back == m


def test_every_kind_is_covered():
    kinds = {kind_of(m) for m in ROUND_TRIP.values()} | {"pfa"}
    assert kinds == {"pfa", "qfa", "kwqfa", "pfa-restart", "qfa-restart", "kwqfa-restart",
                     "post-pfa", "post-qfa", "lpost-pfa", "lpost-qfa"}


HEADER = "kind: pfa\nstates: 1\nalphabet: a\naccept: 1\n"
BODY = "matrix cent:\n  1\nmatrix a:\n  1\nmatrix dollar:\n  1\n"


@pytest.mark.parametrize("text, message, line", [
    (HEADER + "colour: red\n" + BODY, "unknown key", 5),
    (HEADER + "accept: 1\n" + BODY, "duplicate key", 5),
    (HEADER.replace("pfa", "dfa") + BODY, "unknown machine kind", 1),
    (HEADER + "matrix a\n  1\n", "malformed matrix header", 5),
    (HEADER + BODY.replace("  1\nmatrix a", "  1/0\nmatrix a"), "bad rational", 6),
    (HEADER + BODY.replace("matrix a:\n  1", "matrix a:\n  1 0"), "row has 2 entries", 8),
    (HEADER + "reject: 1\n" + BODY, "not valid for kind", 5),
    (HEADER + BODY.replace("matrix a:", "matrix a 1:"), "takes no Kraus index", 7),
    (HEADER + "just words\n", "expected 'key: value'", 5),
])
def test_parse_errors_carry_line_numbers(text, message, line):
    with pytest.raises(MachineFormatError, match=message) as info:
        parse_machine(text)
    assert info.value.line == line
    assert str(info.value).startswith(f"line {line}:")


def test_missing_required_key():
    with pytest.raises(MachineFormatError, match="requires key 'halt'"):
        parse_machine(emit_machine(zoo.build_leq()).replace("halt: at-end\n", ""))


def test_comments_and_blank_lines_are_ignored():
    text = "# leading comment\n\n" + HEADER.replace("accept: 1", "accept: 1   # trailing") + BODY
    assert parse_machine(text) == zoo.trivial_pfa(True, ("a",))


def test_empty_index_set_round_trips():
    m = zoo.trivial_pfa(False)
    assert "accept:\n" in emit_machine(m)
    assert parse_machine(emit_machine(m)).accept == frozenset()


def test_complex_entries_are_bit_stable():
    m = fixtures.random_qfa(9, 3, 3)
    back = parse_machine(emit_machine(m))
    for s in m.kraus:
        for e1, e2 in zip(m.kraus[s], back.kraus[s]):
            assert np.array_equal(e1, e2)


def test_latvian_file_matches_builder():
    assert load_machine(FIXTURES / "latvian.machine") == fixtures.needs_a_post(Tau.ACCEPT)
    assert isinstance(load_machine(FIXTURES / "latvian.machine"), LatvianPostMachine)
