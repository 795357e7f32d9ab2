"""The twelve acceptance checks, runnable from tests and from ``postfa verify``.

Each check returns a :class:`CheckResult`; ``passed`` is the verdict and
``details`` carries the evidence (counts, worst deviations, reports).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np

from . import fixtures, montecarlo, numkit, semantics, transforms, zoo
from .models import HaltTiming, KwqfaMachine, RecognitionJudgment, RestartPfa, RestartQfa, is_exact
from .semantics import evaluate, iter_verdicts, restart_overall, restart_round, round_steps, words


@dataclass
class CheckResult:
    number: int
    title: str
    passed: bool = True
    details: list[str] = field(default_factory=list)

    def fail(self, message: str) -> None:
        self.passed = False
        self.details.append("FAIL " + message)

    def note(self, message: str) -> None:
        self.details.append(message)

    def line(self) -> str:
        return f"criterion {self.number:2d} [{'PASS' if self.passed else 'FAIL'}] {self.title}"


def _close(a, b, tol) -> bool:
    return abs(float(a) - float(b)) <= tol


def _same_verdict(v1, v2, exact: bool, tol: float) -> bool:
    if v1.valid != v2.valid:
        return False
    if not v1.valid:
        return True
    if exact:
        return v1.f_accept == v2.f_accept and v1.f_reject == v2.f_reject
    return _close(v1.f_accept, v2.f_accept, tol) and _close(v1.f_reject, v2.f_reject, tol)


# ---------------------------------------------------------------- 1

def geometric_partial_sum(r, terms: int = 100):
    """``sum_{i<=terms} (1-p)^i p_a`` computed term by term."""
    stay = 1 - r.total
    term, acc = r.p_accept, r.p_accept * 0
    for _ in range(terms + 1):
        acc += term
        term *= stay
    return acc


def check_overall_decision(max_len: int = 8, terms: int = 100) -> CheckResult:
    res = CheckResult(1, "single-round ratio equals the restart geometric series")
    count = 0
    for name, m in fixtures.restart_fixtures().items():
        exact = is_exact(m)
        for w in words(m.alphabet, max_len):
            r = restart_round(m, w)
            v = restart_overall(r)
            if not v.valid:
                continue
            count += 1
            partial = geometric_partial_sum(r, terms)
            tail = (1 - r.total) ** (terms + 1)
            if exact:
                # the exact remainder of a geometric series
                if v.f_accept - partial != tail * v.f_accept:
                    res.fail(f"{name} {w!r}: remainder differs from (1-p)^{terms + 1} f_a")
                    break
            elif not (0 <= v.f_accept - partial + 1e-12 and v.f_accept - partial <= tail + 1e-12):
                res.fail(f"{name} {w!r}: partial sum outside residual bound")
                break
    res.note(f"{count} valid (machine, word) pairs over 10 fixtures")
    return res


# ---------------------------------------------------------------- 2

def check_runtime_sampling(trials: int = 100_000, seed: int = 20240611) -> CheckResult:
    res = CheckResult(2, "expected runtime s/p against Monte Carlo on L_eq, w = ab")
    m = zoo.build_leq()
    r = restart_round(m, "ab")
    exact_steps = semantics.expected_runtime(r.total, round_steps("ab"))
    if exact_steps != 4096:
        res.fail(f"exact expected steps {exact_steps} != 4096")
    cmp = montecarlo.estimate(m, "ab", trials, seed)
    rel = abs(cmp.stats.mean_steps - 4096) / 4096
    res.note(f"mean steps {cmp.stats.mean_steps:.2f} (relative error {rel:.4f}), accept frequency {cmp.stats.accept_rate:.4f}")
    if rel > 0.05:
        res.fail(f"mean steps off by {rel:.3%}")
    if abs(cmp.stats.accept_rate - 0.75) > 0.01:
        res.fail(f"accept frequency {cmp.stats.accept_rate} not within 0.01 of 3/4")
    return res


# ---------------------------------------------------------------- 3

def _postable(m):
    """Restart machine in a form ``restart_to_post`` accepts."""
    if isinstance(m, RestartPfa) and m.halt is HaltTiming.PER_STEP:
        return transforms.defer_halting(m)
    if isinstance(m, KwqfaMachine):
        return transforms.kwqfa_restart_to_qfa_restart(m)
    return m


def check_restart_post_equivalence(max_len: int = 8) -> CheckResult:
    res = CheckResult(3, "restart <-> postselection conversions preserve verdicts")
    for name, m in fixtures.restart_fixtures().items():
        exact = is_exact(m)
        ready = _postable(m)
        post = transforms.restart_to_post(ready)
        back = transforms.post_to_restart(post)
        again = transforms.restart_to_post(back)
        bad = 0
        for w in words(m.alphabet, max_len):
            ref = evaluate(m, w)
            for other in (ready, post, back, again):
                if not _same_verdict(ref, evaluate(other, w), exact, 1e-12):
                    bad += 1
        if bad:
            res.fail(f"{name}: {bad} verdict mismatches")
    res.note("10 fixtures, zero tolerance on rational machines, 1e-12 otherwise")
    return res


# ---------------------------------------------------------------- 4

def closure_operands():
    """Zoo-derived postselection machines (error at most 1/4) and their languages."""
    leq = zoo.leq_post()
    ab = zoo.regular_fixtures()["ab-star"]
    return {
        "leq": (leq, zoo.in_leq),
        "co-leq": (transforms.post_complement(leq), lambda w: not zoo.in_leq(w)),
        "leqeq": (zoo.build_leqeq(Fraction(1, 4)), zoo.in_leqeq),
        "ab-star": (zoo.dfa_to_zero_error_post(ab[0]), ab[1]),
    }


CLOSURE_PAIRS = (("leq", "co-leq"), ("leq", "leqeq"), ("leq", "ab-star"), ("leqeq", "co-leq"))


def check_closure(max_len: int = 8) -> CheckResult:
    res = CheckResult(4, "union / intersection error bounds")
    ops = closure_operands()
    strong_union = strong_inter = total_union = total_inter = 0
    for a, b in CLOSURE_PAIRS:
        (m1, l1), (m2, l2) = ops[a], ops[b]
        union = transforms.post_union(m1, m2)
        inter = transforms.post_intersection(m1, m2)
        for (w, vu), (_, vi) in zip(iter_verdicts(union, max_len), iter_verdicts(inter, max_len)):
            in1, in2 = l1(w), l2(w)
            v1, v2 = evaluate(m1, w), evaluate(m2, w)
            if vu.f_reject != v1.f_reject * v2.f_reject or vi.f_accept != v1.f_accept * v2.f_accept:
                res.fail(f"{a},{b} {w!r}: product identity broken")
            if in1 or in2:
                if vu.f_accept < Fraction(3, 4):
                    res.fail(f"union {a},{b} {w!r}: f_a = {vu.f_accept} < 3/4")
            elif vu.f_accept > Fraction(7, 16):
                res.fail(f"union {a},{b} {w!r}: f_a = {vu.f_accept} > 7/16")
            if in1 and in2:
                if vi.f_accept < Fraction(9, 16):
                    res.fail(f"intersection {a},{b} {w!r}: f_a = {vi.f_accept} < 9/16")
            elif vi.f_accept > Fraction(1, 4):
                res.fail(f"intersection {a},{b} {w!r}: f_a = {vi.f_accept} > 1/4")
            if in1 or in2:
                total_union += 1
                strong_union += vu.f_accept >= Fraction(15, 16)
            if not (in1 and in2):
                total_inter += 1
                strong_inter += vi.f_accept <= Fraction(1, 16)
    res.note(f"union members with f_a >= 15/16: {strong_union}/{total_union}")
    res.note(f"intersection nonmembers with f_a <= 1/16: {strong_inter}/{total_inter}")
    return res


# ---------------------------------------------------------------- 5

def check_amplification(max_len: int = 10) -> CheckResult:
    res = CheckResult(5, "amplification reaches error 1/16 with k = 3")
    plan = transforms.choose_k(Fraction(1, 4), Fraction(1, 16))
    if plan.k != 3 or plan.closed_form_k != 3:
        res.fail(f"choose_k gave {plan}")
    base = zoo.leq_post()
    amp = transforms.amplify(base, plan.k)
    report = semantics.check_recognition(amp, zoo.in_leq, RecognitionJudgment.bounded(Fraction(1, 16)), max_len)
    res.note(f"bounded error 1/16: {report.summary()} over {report.checked} strings")
    if not report.passed:
        res.fail(report.summary())
    for (w, v_amp), (_, v) in zip(iter_verdicts(amp, max_len), iter_verdicts(base, max_len)):
        r, ra = v.rounds, v_amp.rounds
        if (ra.p_accept, ra.p_reject) != (r.p_accept**plan.k, r.p_reject**plan.k):
            res.fail(f"{w!r}: round probabilities are not the k-th powers")
            break
        if v_amp.f_reject * v.f_accept**plan.k != v_amp.f_accept * v.f_reject**plan.k:
            res.fail(f"{w!r}: ratio is not the k-th power")
            break
    return res


# ---------------------------------------------------------------- 6

def compiler_fixtures() -> dict[str, RestartQfa]:
    out = {"embedded-split": fixtures.embed_restart_pfa(fixtures.split_restart())}
    for seed in range(10):
        out[f"random-{seed}"] = fixtures.random_restart_qfa(100 + seed, 2)
    return out


def check_compiler(max_len: int = 5) -> CheckResult:
    res = CheckResult(6, "restart QFA to Kondacs-Watrous compiler")
    eps = transforms.compiled_error_bound(Fraction(1, 3))
    if not _close(eps, Fraction(1, 5), 1e-9):
        res.fail(f"error bound for 1/3 is {eps}")
    worst_u = worst_f = worst_amp = 0.0
    for name, m in compiler_fixtures().items():
        n = m.states
        compiled = transforms.qfa_restart_to_kwqfa_restart(m)
        k = compiled.machine
        if k.states != 3 * n * n + 6:
            res.fail(f"{name}: {k.states} states, expected {3 * n * n + 6}")
        rep = numkit.validate_family(numkit.FamilyKind.UNITARY, list(k.unitaries.values()), 1e-9)
        worst_u = max(worst_u, float(rep.worst))
        if not rep.passed:
            res.fail(f"{name}: unitarity violation {rep.worst}")
        for w in words(m.alphabet, max_len):
            old, new = restart_round(m, w), restart_round(k, w)
            predicted = old.p_accept**2 / (old.p_accept**2 + old.p_reject**2)
            got = new.p_accept / (new.p_accept + new.p_reject)
            worst_f = max(worst_f, abs(predicted - got))
            scale = compiled.scale ** -round_steps(w)
            worst_amp = max(worst_amp, abs(math.sqrt(new.p_accept) - scale * old.p_accept))
    res.note(f"worst unitarity {worst_u:.2e}, worst f_a deviation {worst_f:.2e}, worst amplitude deviation {worst_amp:.2e}")
    if worst_f > 1e-6:
        res.fail(f"f_a deviation {worst_f}")
    if worst_amp > 1e-9:
        res.fail(f"accept amplitude deviation {worst_amp}")
    return res


# ---------------------------------------------------------------- 7

def check_linearization(max_len: int = 6) -> CheckResult:
    res = CheckResult(7, "linearized system reproduces single-round probabilities")
    worst = 0.0
    count = 0
    for n in (1, 2, 3):
        for seed in range(4):
            m = fixtures.random_restart_qfa(1000 * n + seed, n)
            lin = transforms.linearize(m)
            for w in words(m.alphabet, max_len):
                v = lin.final_vector(w)
                r = restart_round(m, w)
                worst = max(worst, abs(v[lin.accept_index - 1] - r.p_accept), abs(v[lin.reject_index - 1] - r.p_reject),
                            float(np.max(np.abs(v[: n * n]), initial=0)))
                count += 1
    res.note(f"{count} (machine, word) pairs, worst deviation {worst:.2e}")
    if worst > 1e-9:
        res.fail(f"deviation {worst}")
    return res


# ---------------------------------------------------------------- 8

def check_leq(max_len: int = 12) -> CheckResult:
    res = CheckResult(8, "L_eq witness, bounded error 1/4")
    report = semantics.check_recognition(zoo.build_leq(), zoo.in_leq, RecognitionJudgment.bounded(Fraction(1, 4)), max_len)
    res.note(f"{report.summary()} over {report.checked} strings")
    if not report.passed:
        res.fail(report.summary())
    return res


# ---------------------------------------------------------------- 9

def check_lpal(max_len: int = 10) -> CheckResult:
    res = CheckResult(9, "L_pal witness, one-sided error")
    params = zoo.LpalParams()
    bound = params.mu**2 / (params.mu**2 + 1)
    worst = 0.0
    for w, v in iter_verdicts(zoo.build_lpal(params), max_len):
        r = v.rounds
        pal = zoo.is_palindrome(w)
        if (r.p_reject == 0) != pal:
            res.fail(f"{w!r}: p_r = {r.p_reject}, palindrome = {pal}")
        if not r.p_accept > 0:
            res.fail(f"{w!r}: no accepting mass")
        if not pal:
            worst = max(worst, v.f_accept)
            if v.f_accept > bound:
                res.fail(f"{w!r}: f_a = {v.f_accept} > {bound}")
    res.note(f"largest f_a on nonpalindromes {worst:.4g} (bound {bound})")
    return res


# ---------------------------------------------------------------- 10

def check_kwqfa_simulation(max_len: int = 8) -> CheckResult:
    res = CheckResult(10, "Kondacs-Watrous rounds simulated by end-of-round Kraus machines")
    machines = {"lpal": zoo.build_lpal()}
    for seed in range(20):
        machines[f"random-{seed}"] = fixtures.random_kwqfa(seed, 4 + seed % 2)
    worst = 0.0
    for name, m in machines.items():
        q = transforms.kwqfa_restart_to_qfa_restart(m)
        for (w, v1), (_, v2) in zip(iter_verdicts(m, max_len), iter_verdicts(q, max_len)):
            r1, r2 = v1.rounds, v2.rounds
            worst = max(worst, abs(r1.p_accept - r2.p_accept), abs(r1.p_reject - r2.p_reject))
            if v1.valid and abs(v1.f_accept - v2.f_accept) > 1e-9:
                res.fail(f"{name} {w!r}: f_a {v1.f_accept} vs {v2.f_accept}")
    res.note(f"{len(machines)} machines, worst round deviation {worst:.2e}")
    if worst > 1e-9:
        res.fail(f"deviation {worst}")
    return res


# ---------------------------------------------------------------- 11

def cutpoint_zero_cases():
    """(name, machine, side, language) for the cutpoint-zero to Latvian conversion."""
    ab = zoo.regular_fixtures()["ab-star"]
    ab_cut, _ = transforms.zero_error_post_to_cutpoint_zero(zoo.dfa_to_zero_error_post(ab[0]))
    return [
        ("lpal-complement", zoo.lpal_complement_cutpoint_zero(), "conqal", zoo.is_palindrome),
        ("all", zoo.trivial_pfa(True), "nqal", lambda w: True),
        ("none", zoo.trivial_pfa(False), "nqal", lambda w: False),
        ("ab-star", ab_cut, "nqal", ab[1]),
        ("co-ab-star", ab_cut, "conqal", lambda w: not ab[1](w)),
    ]


def check_latvian(max_len: int = 8) -> CheckResult:
    res = CheckResult(11, "Latvian conversions")
    zero_mass = 0
    for name, m in fixtures.latvian_fixtures().items():
        post = transforms.latvian_to_post(m)
        for (w, v1), (_, v2) in zip(iter_verdicts(m, max_len), iter_verdicts(post, max_len)):
            zero_mass += v1.rounds.total == 0
            if not (v2.valid and (v1.f_accept, v1.f_reject) == (v2.f_accept, v2.f_reject)):
                res.fail(f"{name} {w!r}: {v1} vs {v2}")
                break
    res.note(f"latvian_to_post: 5 machines, {zero_mass} zero-mass inputs included")
    for name, m, side, lang in cutpoint_zero_cases():
        lat = transforms.cutpoint_zero_to_latvian(m, side)
        report = semantics.check_recognition(lat, lang, RecognitionJudgment.zero_error(), max_len)
        res.note(f"cutpoint_zero_to_latvian {name} ({side}): {report.summary()}")
        if not report.passed:
            res.fail(f"{name}: {report.summary()}")
        if is_exact(lat):
            again = transforms.latvian_to_post(lat)
            report = semantics.check_recognition(again, lang, RecognitionJudgment.zero_error(), max_len)
            if not report.passed:
                res.fail(f"{name} via latvian_to_post: {report.summary()}")
    return res


# ---------------------------------------------------------------- 12

def check_regular(max_len: int = 10) -> CheckResult:
    res = CheckResult(12, "regular languages: zero-error postselection and cutpoint zero")
    zero = RecognitionJudgment.zero_error()
    cut = RecognitionJudgment.cutpoint_zero()
    for name, (dfa, oracle) in zoo.regular_fixtures().items():
        if any(dfa(w) != oracle(w) for w in words(dfa.alphabet, max_len)):
            res.fail(f"{name}: DFA disagrees with its independent oracle")
        post = zoo.dfa_to_zero_error_post(dfa)
        reports = [semantics.check_recognition(post, dfa, zero, max_len)]
        for side, lang in ((transforms.Side.LANGUAGE, dfa.accepts), (transforms.Side.COMPLEMENT, lambda w, d=dfa: not d(w))):
            machine, judgment = transforms.zero_error_post_to_cutpoint_zero(post, side)
            reports.append(semantics.check_recognition(machine, lang, judgment, max_len))
        res.note(f"{name}: " + "; ".join(r.summary() for r in reports))
        if not all(r.passed for r in reports):
            res.fail(name)
    return res


CHECKS: dict[int, Callable[[], CheckResult]] = {
    1: check_overall_decision,
    2: check_runtime_sampling,
    3: check_restart_post_equivalence,
    4: check_closure,
    5: check_amplification,
    6: check_compiler,
    7: check_linearization,
    8: check_leq,
    9: check_lpal,
    10: check_kwqfa_simulation,
    11: check_latvian,
    12: check_regular,
}


def run_all(numbers=None) -> list[CheckResult]:
    return [CHECKS[k]() for k in (numbers or sorted(CHECKS))]
