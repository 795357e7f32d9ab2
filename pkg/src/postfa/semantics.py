"""Evaluation of every machine kind on strings, and bounded-length recognition checks.

Probabilistic machines evaluate in exact rationals; quantum machines in
complex doubles. Each machine kind is driven by a small runner that maps a
configuration through one tape symbol, which lets the enumerator share
work between strings with a common prefix.
"""
from __future__ import annotations

import itertools
import math
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterator

import numpy as np

from .errors import ForeignSymbolError
from .models import (
    CENT,
    DOLLAR,
    HaltTiming,
    JudgmentMode,
    KwqfaMachine,
    LatvianPostMachine,
    Machine,
    PfaMachine,
    PostMachine,
    QfaMachine,
    RecognitionJudgment,
    RestartPfa,
    RestartQfa,
    Tau,
    is_exact,
)

#: Float values this close to a decision threshold are reported as ambiguous.
AMBIGUITY_TOL = 1e-9


@dataclass(frozen=True)
class RoundOutcome:
    """Single-round (or pre-postselection) acceptance and rejection probabilities."""

    p_accept: object
    p_reject: object

    @property
    def total(self):
        return self.p_accept + self.p_reject


@dataclass(frozen=True)
class Verdict:
    f_accept: object
    f_reject: object
    valid: bool
    rounds: RoundOutcome | None = None


def check_word(alphabet, w: str) -> None:
    foreign = sorted(set(w) - set(alphabet))
    if foreign:
        raise ForeignSymbolError(f"symbols {foreign} are not in the alphabet {list(alphabet)}")


def tape(w: str) -> list[str]:
    return [CENT, *w, DOLLAR]


def round_steps(w: str) -> int:
    """Steps in a full round of a real-time machine: ``|w| + 2``."""
    return len(w) + 2


# ---------------------------------------------------------------- runners

class PfaRunner:
    """Sparse exact distribution over 0-based states."""

    def __init__(self, m: PfaMachine):
        self.m = m
        self.cols = m.columns

    def initial(self):
        return {0: Fraction(1)}

    def apply(self, vec: dict, sym: str) -> dict:
        cols = self.cols[sym]
        out: dict[int, Fraction] = defaultdict(Fraction)
        for j, v in vec.items():
            for i, p in cols[j]:
                out[i] += v * p
        return {i: v for i, v in out.items() if v}

    @staticmethod
    def mass(vec: dict, states) -> Fraction:
        return sum((vec.get(q - 1, Fraction(0)) for q in states), Fraction(0))


class StepRestartPfaRunner(PfaRunner):
    """Per-step halting: mass landing in halting/restart states leaves the round at once."""

    def __init__(self, m: RestartPfa):
        super().__init__(m.pfa)
        self.acc = {q - 1 for q in m.accept}
        self.rej = {q - 1 for q in m.reject}
        self.res = {q - 1 for q in m.restart}

    def initial(self):
        return ({0: Fraction(1)}, Fraction(0), Fraction(0), Fraction(0))

    def apply(self, state, sym):
        vec, acc, rej, res = state
        new = PfaRunner.apply(self, vec, sym)
        keep = {}
        for i, v in new.items():
            if i in self.acc:
                acc += v
            elif i in self.rej:
                rej += v
            elif i in self.res:
                res += v
            else:
                keep[i] = v
        return keep, acc, rej, res


class QfaRunner:
    """Density matrix evolution ``rho -> sum_i E_i rho E_i^dagger``."""

    def __init__(self, m: QfaMachine):
        self.m = m
        self.kraus = m.stacked_kraus

    def initial(self):
        rho = np.zeros((self.m.states, self.m.states), dtype=np.complex128)
        rho[0, 0] = 1.0
        return rho

    def apply(self, rho, sym):
        es = self.kraus[sym]
        return np.einsum("kij,jl,kml->im", es, rho, es.conj(), optimize=True)

    @staticmethod
    def mass(rho, states) -> float:
        return float(sum(rho[q - 1, q - 1].real for q in states))


class KwqfaRunner:
    """Unnormalised nonhalting vector plus accept / reject / restart accumulators."""

    def __init__(self, m: KwqfaMachine):
        self.m = m
        n = m.states
        self.acc = np.array([q - 1 for q in sorted(m.accept)], dtype=int)
        self.rej = np.array([q - 1 for q in sorted(m.reject)], dtype=int)
        self.res = np.array([q - 1 for q in sorted(m.restart)], dtype=int)
        self.cont = np.zeros(n, dtype=bool)
        self.cont[[q - 1 for q in m.nonhalting]] = True

    def initial(self):
        psi = np.zeros(self.m.states, dtype=np.complex128)
        psi[0] = 1.0
        return psi, 0.0, 0.0, 0.0

    def step_masses(self, psi, sym):
        """Apply one unitary; return (new nonhalting vector, accept, reject, restart mass)."""
        phi = self.m.unitaries[sym] @ psi
        a = float(np.sum(np.abs(phi[self.acc]) ** 2))
        r = float(np.sum(np.abs(phi[self.rej]) ** 2))
        s = float(np.sum(np.abs(phi[self.res]) ** 2))
        return np.where(self.cont, phi, 0), a, r, s

    def apply(self, state, sym):
        psi, acc, rej, res = state
        psi, a, r, s = self.step_masses(psi, sym)
        return psi, acc + a, rej + r, res + s


def runner_for(m: Machine):
    if isinstance(m, PfaMachine):
        return PfaRunner(m)
    if isinstance(m, QfaMachine):
        return QfaRunner(m)
    if isinstance(m, KwqfaMachine):
        return KwqfaRunner(m)
    if isinstance(m, RestartPfa):
        return StepRestartPfaRunner(m) if m.halt is HaltTiming.PER_STEP else PfaRunner(m.pfa)
    if isinstance(m, RestartQfa):
        return QfaRunner(m.qfa)
    if isinstance(m, PostMachine):
        return runner_for(m.base)
    if isinstance(m, LatvianPostMachine):
        return runner_for(m.post.base)
    raise TypeError(f"not a machine: {type(m).__name__}")


def _run(m: Machine, w: str):
    check_word(m.alphabet, w)
    r = runner_for(m)
    state = r.initial()
    for sym in tape(w):
        state = r.apply(state, sym)
    return r, state


# ---------------------------------------------------------------- outcomes

def _round_from_config(m: Machine, runner, config) -> RoundOutcome:
    if isinstance(m, RestartPfa):
        if m.halt is HaltTiming.PER_STEP:
            _, acc, rej, _ = config
            return RoundOutcome(acc, rej)
        return RoundOutcome(runner.mass(config, m.accept), runner.mass(config, m.reject))
    if isinstance(m, RestartQfa):
        return RoundOutcome(runner.mass(config, m.accept), runner.mass(config, m.reject))
    if isinstance(m, KwqfaMachine):
        _, acc, rej, _ = config
        return RoundOutcome(acc, rej)
    if isinstance(m, PostMachine):
        return RoundOutcome(runner.mass(config, m.post_accept), runner.mass(config, m.post_reject))
    if isinstance(m, LatvianPostMachine):
        return _round_from_config(m.post, runner, config)
    raise TypeError(f"{type(m).__name__} has no round structure")


def restart_overall(r: RoundOutcome) -> Verdict:
    """Overall decision probabilities of a restart machine from its single-round outcome."""
    total = r.p_accept + r.p_reject
    if total == 0:
        zero = r.p_accept * 0
        return Verdict(zero, zero, False, r)
    return Verdict(r.p_accept / total, r.p_reject / total, True, r)


def _latvian_verdict(m: LatvianPostMachine, r: RoundOutcome) -> Verdict:
    if r.p_accept + r.p_reject == 0:
        one, zero = (Fraction(1), Fraction(0)) if m.post.exact else (1.0, 0.0)
        if m.tau is Tau.ACCEPT:
            return Verdict(one, zero, True, r)
        return Verdict(zero, one, True, r)
    return restart_overall(r)


def _verdict_from_config(m: Machine, runner, config) -> Verdict:
    if isinstance(m, PfaMachine):
        p = runner.mass(config, m.accept)
        return Verdict(p, 1 - p, True)
    if isinstance(m, QfaMachine):
        p = runner.mass(config, m.accept)
        return Verdict(p, 1 - p, True)
    if isinstance(m, KwqfaMachine) and not m.restart:
        _, acc, _, _ = config
        return Verdict(acc, 1 - acc, True, _round_from_config(m, runner, config))
    r = _round_from_config(m, runner, config)
    if isinstance(m, LatvianPostMachine):
        return _latvian_verdict(m, r)
    return restart_overall(r)


def pfa_distribution(m: PfaMachine, w: str) -> list[Fraction]:
    """Final state distribution (0-based list) after reading ``¢w$``."""
    _, vec = _run(m, w)
    return [vec.get(i, Fraction(0)) for i in range(m.states)]


def pfa_vectors(m: PfaMachine, w: str) -> list[list[Fraction]]:
    """Distribution after every tape symbol, starting with the initial one."""
    check_word(m.alphabet, w)
    r = PfaRunner(m)
    vec = r.initial()
    out = [vec]
    for sym in tape(w):
        vec = r.apply(vec, sym)
        out.append(vec)
    return [[v.get(i, Fraction(0)) for i in range(m.states)] for v in out]


def pfa_accept(m: PfaMachine, w: str) -> Fraction:
    r, vec = _run(m, w)
    return r.mass(vec, m.accept)


def qfa_densities(m: QfaMachine, w: str) -> list[np.ndarray]:
    check_word(m.alphabet, w)
    r = QfaRunner(m)
    rho = r.initial()
    out = [rho]
    for sym in tape(w):
        rho = r.apply(rho, sym)
        out.append(rho)
    return out


def qfa_accept(m: QfaMachine, w: str) -> float:
    r, rho = _run(m, w)
    return r.mass(rho, m.accept)


def kwqfa_step_masses(m: KwqfaMachine, w: str) -> list[tuple[float, float, float, float]]:
    """Per-step (accept, reject, restart, still-running) masses of one round."""
    check_word(m.alphabet, w)
    r = KwqfaRunner(m)
    psi = r.initial()[0]
    out = []
    for sym in tape(w):
        psi, a, rj, s = r.step_masses(psi, sym)
        out.append((a, rj, s, float(np.vdot(psi, psi).real)))
    return out


def restart_round(m: RestartPfa | RestartQfa | KwqfaMachine, w: str) -> RoundOutcome:
    """Exact accept / reject probabilities of a single round on ``w``."""
    r, config = _run(m, w)
    return _round_from_config(m, r, config)


def expected_runtime(p, s: int):
    """Worst-case expected number of steps, ``s / p``; infinite when ``p == 0``."""
    if p == 0:
        return math.inf
    if isinstance(p, Fraction):
        return Fraction(s) / p
    return s / p


def expected_round_length(m: RestartPfa | RestartQfa | KwqfaMachine, w: str):
    """Expected symbols read in one round.

    Equals ``|w| + 2`` unless the machine can halt or restart mid-word, in
    which case it is the sum over tape positions of the mass still running
    before that symbol.
    """
    s = round_steps(w)
    if isinstance(m, KwqfaMachine):
        alive, total = 1.0, 0.0
        for *_, remaining in kwqfa_step_masses(m, w):
            total += alive
            alive = remaining
        return total
    if isinstance(m, RestartPfa) and m.halt is HaltTiming.PER_STEP:
        runner = StepRestartPfaRunner(m)
        state, total = runner.initial(), Fraction(0)
        for sym in tape(w):
            total += sum(state[0].values())
            state = runner.apply(state, sym)
        return total
    return s


def post_evaluate(m: PostMachine | LatvianPostMachine, w: str) -> Verdict:
    """Normalised decision probabilities after postselection.

    A plain postselection machine with no postselection mass on ``w``
    yields ``valid=False``; a Latvian machine decides by ``tau``.
    """
    r, config = _run(m, w)
    return _verdict_from_config(m, r, config)


def evaluate(m: Machine, w: str) -> Verdict:
    """Verdict for any machine kind."""
    r, config = _run(m, w)
    return _verdict_from_config(m, r, config)


def words(alphabet, max_len: int) -> Iterator[str]:
    """All strings up to ``max_len`` in length-then-lexicographic order."""
    for n in range(max_len + 1):
        for t in itertools.product(alphabet, repeat=n):
            yield "".join(t)


def iter_verdicts(m: Machine, max_len: int) -> Iterator[tuple[str, Verdict]]:
    """Verdicts for every string up to ``max_len``, sharing work across prefixes."""
    r = runner_for(m)
    level = {"": r.apply(r.initial(), CENT)}
    for n in range(max_len + 1):
        for w in level:
            yield w, _verdict_from_config(m, r, r.apply(level[w], DOLLAR))
        if n == max_len:
            break
        # insertion order keeps each level length-lexicographic
        level = {w + s: r.apply(c, s) for w, c in level.items() for s in m.alphabet}


# ---------------------------------------------------------------- recognition

@dataclass(frozen=True)
class Counterexample:
    word: str
    member: bool
    f_accept: object
    f_reject: object
    reason: str


@dataclass
class RecognitionReport:
    judgment: RecognitionJudgment
    max_len: int
    checked: int = 0
    counterexamples: list[Counterexample] = field(default_factory=list)
    ambiguous: list[str] = field(default_factory=list)
    criterion_mismatches: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.counterexamples and not self.criterion_mismatches

    def summary(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        text = f"{status}, {len(self.counterexamples)} counterexamples"
        if self.criterion_mismatches:
            text += f", {len(self.criterion_mismatches)} ratio-criterion mismatches"
        if self.ambiguous:
            text += f", {len(self.ambiguous)} numerically ambiguous"
        return text


def _near(x, target, exact: bool, tol: float) -> bool:
    return not exact and abs(float(x) - float(target)) <= tol


def check_recognition(
    m: Machine,
    language: Callable[[str], bool],
    judgment: RecognitionJudgment,
    max_len: int,
    ambiguity_tol: float = AMBIGUITY_TOL,
) -> RecognitionReport:
    """Check ``judgment`` for ``m`` against ``language`` on every string up to ``max_len``.

    For bounded error on machines with a round structure the direct
    f-value test and the ratio test ``p_r / p_a <= eps / (1 - eps)`` (and
    its mirror for nonmembers) are both evaluated and must agree.
    """
    exact = is_exact(m)
    report = RecognitionReport(judgment, max_len)
    lam = judgment.value
    mode = judgment.mode
    for w, v in iter_verdicts(m, max_len):
        report.checked += 1
        member = bool(language(w))
        fa, fr = v.f_accept, v.f_reject
        if not v.valid:
            report.counterexamples.append(Counterexample(w, member, fa, fr, "no postselection/halting mass"))
            continue
        if mode is JudgmentMode.STRICT:
            ok = (fa > lam) == member
            if _near(fa, lam, exact, ambiguity_tol):
                report.ambiguous.append(w)
            reason = f"f_accept {'<=' if member else '>'} {lam}"
        elif mode is JudgmentMode.NONSTRICT:
            ok = (fa >= lam) == member
            if _near(fa, lam, exact, ambiguity_tol):
                report.ambiguous.append(w)
            reason = f"f_accept {'<' if member else '>='} {lam}"
        elif mode in (JudgmentMode.BOUNDED, JudgmentMode.ZERO):
            eps = lam
            target = fa if member else fr
            ok = target >= 1 - eps
            if _near(target, 1 - eps, exact, ambiguity_tol) and (exact or float(target) != 1.0):
                report.ambiguous.append(w)
            reason = f"f_{'accept' if member else 'reject'} < {1 - eps}"
            r = v.rounds
            if r is not None and (r.p_accept + r.p_reject) > 0:
                good, bad = (r.p_accept, r.p_reject) if member else (r.p_reject, r.p_accept)
                if isinstance(eps, Fraction) and not exact:
                    eps_ = float(eps)
                else:
                    eps_ = eps
                ratio_ok = bad * (1 - eps_) <= eps_ * good
                if ratio_ok != ok and (exact or w not in report.ambiguous):
                    report.criterion_mismatches.append(w)
        else:
            ok = (fa > 0) == member
            if not exact and 0 < abs(float(fa)) <= ambiguity_tol:
                report.ambiguous.append(w)
            reason = "f_accept == 0" if member else "f_accept > 0"
        if not ok:
            report.counterexamples.append(Counterexample(w, member, fa, fr, reason))
    return report
