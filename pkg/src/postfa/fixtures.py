"""Reference machines and random generators shared by the test suites and ``verify``."""
from __future__ import annotations

from fractions import Fraction

import numpy as np

from . import zoo
from .models import (
    CENT,
    DOLLAR,
    HaltTiming,
    KwqfaMachine,
    LatvianPostMachine,
    PfaMachine,
    PostMachine,
    QfaMachine,
    RestartPfa,
    RestartQfa,
    Tau,
    pfa_from_function,
    tape_symbols,
)

AB = ("a", "b")


def embed_pfa(m: PfaMachine) -> QfaMachine:
    """Probabilistic machine as a quantum one: one Kraus element ``sqrt(p)|j><i|`` per positive entry."""
    kraus = {}
    n = m.states
    for sym in tape_symbols(m.alphabet):
        elems = []
        for src, col in enumerate(m.columns[sym]):
            for dst, p in col:
                e = np.zeros((n, n), dtype=np.complex128)
                e[dst, src] = np.sqrt(float(p))
                elems.append(e)
        kraus[sym] = tuple(elems)
    return QfaMachine(n, m.alphabet, kraus, m.accept)


def embed_restart_pfa(m: RestartPfa) -> RestartQfa:
    if m.halt is not HaltTiming.AT_END:
        raise ValueError("only end-of-round machines have a quantum counterpart here")
    return RestartQfa(embed_pfa(m.pfa), m.reject)


# ---------------------------------------------------------------- small hand-built machines

def always_accept_restart() -> RestartPfa:
    """Moves to the accept state on ``$`` with certainty."""
    def step(sym, q):
        return {2: 1} if sym == DOLLAR or q == 2 else {q: 1}

    return RestartPfa(PfaMachine(2, AB, pfa_from_function(2, AB, step), {2}), set(), set())


def half_accept_restart() -> RestartPfa:
    """Accepts with probability 1/2 per round and restarts otherwise."""
    def step(sym, q):
        if q == 1 and sym == DOLLAR:
            return {2: Fraction(1, 2), 3: Fraction(1, 2)}
        return {q: 1}

    return RestartPfa(PfaMachine(3, AB, pfa_from_function(3, AB, step), {2}), set(), {3})


def split_restart() -> RestartPfa:
    """On ``$``: accept 1/2, reject 1/4, restart 1/4, independent of the input."""
    def step(sym, q):
        if q == 1 and sym == DOLLAR:
            return {2: Fraction(1, 2), 3: Fraction(1, 4), 4: Fraction(1, 4)}
        return {q: 1}

    return RestartPfa(PfaMachine(4, AB, pfa_from_function(4, AB, step), {2}), {3}, {4})


def early_halting_restart() -> RestartPfa:
    """Per-step machine halting on the first symbol with probability 1/3.

    Reading ``a`` first halts in accept with 1/3, ``b`` first halts in
    reject with 1/3; surviving mass restarts at ``$`` unless the word is
    empty or contains ``ab``, in which case it accepts.
    """
    # 1 start, 2 fresh (after cent), 3 seen-a, 4 seen-ab, 5 other, 6 acc, 7 rej, 8 restart
    def step(sym, q):
        if q in (6, 7, 8):
            return {q: 1}
        if sym == CENT:
            return {2: 1} if q == 1 else {q: 1}
        if sym == DOLLAR:
            return {4: {6: 1}, 2: {6: 1}}.get(q, {8: 1})
        if q == 2:
            halt = 6 if sym == "a" else 7
            nxt = 3 if sym == "a" else 5
            return {halt: Fraction(1, 3), nxt: Fraction(2, 3)}
        if q in (3, 5):
            if q == 3 and sym == "b":
                return {4: 1}
            return {3: 1} if sym == "a" else {5: 1}
        return {q: 1}

    pfa = PfaMachine(8, AB, pfa_from_function(8, AB, step), {6})
    return RestartPfa(pfa, {7}, {8}, HaltTiming.PER_STEP)


def random_rational_restart(seed: int, n: int = 5, denominator: int = 6) -> RestartPfa:
    """Random end-of-round machine: ``n`` working states plus accept, reject and restart sinks."""
    rng = np.random.default_rng(seed)
    acc, rej, res = n + 1, n + 2, n + 3

    def column(width):
        parts = rng.multinomial(denominator, np.ones(width) / width)
        return [Fraction(int(p), denominator) for p in parts]

    table = {}
    for sym in (CENT, *AB):
        for q in range(1, n + 1):
            table[sym, q] = {i + 1: p for i, p in enumerate(column(n)) if p}
    for q in range(1, n + 1):
        table[DOLLAR, q] = {t: p for t, p in zip((acc, rej, res), column(3)) if p}

    def step(sym, q):
        if q > n:
            return {q: 1}
        return table[sym, q]

    pfa = PfaMachine(n + 3, AB, pfa_from_function(n + 3, AB, step), {acc})
    return RestartPfa(pfa, {rej}, {res})


def random_isometry(rng, rows: int, cols: int) -> np.ndarray:
    x = rng.normal(size=(rows, cols)) + 1j * rng.normal(size=(rows, cols))
    q, r = np.linalg.qr(x)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_qfa(seed: int, n: int = 2, elements: int = 2, accept=(1,)) -> QfaMachine:
    rng = np.random.default_rng(seed)
    kraus = {}
    for sym in tape_symbols(AB):
        iso = random_isometry(rng, elements * n, n)
        kraus[sym] = tuple(iso[i * n:(i + 1) * n] for i in range(elements))
    return QfaMachine(n, AB, kraus, set(accept))


def random_restart_qfa(seed: int, n: int = 2) -> RestartQfa:
    """Random ``n``-state restart machine; state 1 accepts, state 2 rejects (``n >= 2``)."""
    if n == 1:
        return RestartQfa(random_qfa(seed, 1, 2, accept=(1,)), set())
    return RestartQfa(random_qfa(seed, n, 2, accept=(1,)), {2})


def random_kwqfa(seed: int, n: int = 3) -> KwqfaMachine:
    """Random ``n``-state machine with one accept, one reject, one restart state (``n >= 4``)
    or accept plus reject only (``n == 3``)."""
    rng = np.random.default_rng(seed)
    unitaries = {sym: random_isometry(rng, n, n) for sym in tape_symbols(AB)}
    if n >= 4:
        return KwqfaMachine(n, AB, unitaries, {n - 2}, {n - 1}, {n})
    return KwqfaMachine(n, AB, unitaries, {n - 1}, {n}, set())


def restart_fixtures() -> dict[str, object]:
    """Ten restart machines covering every restart kind and halt timing."""
    return {
        "leq": zoo.build_leq(),
        "leq-eps-1/5": zoo.build_leq(zoo.LeqParams.for_epsilon(Fraction(1, 5))),
        "leq-per-step": zoo.build_leq(halt=HaltTiming.PER_STEP),
        "always-accept": always_accept_restart(),
        "half-accept": half_accept_restart(),
        "split": split_restart(),
        "early-halting": early_halting_restart(),
        "random-rational": random_rational_restart(3),
        "embedded-split": embed_restart_pfa(split_restart()),
        "random-qfa": random_restart_qfa(11),
    }


def quantum_restart_fixtures() -> dict[str, object]:
    return {"lpal": zoo.build_lpal(), "random-kwqfa": random_kwqfa(5, 4)}


# ---------------------------------------------------------------- Latvian fixtures

def needs_a_post(tau: Tau) -> LatvianPostMachine:
    """Postselection mass appears only once an ``a`` has been read.

    After the first ``a`` the machine postselect-accepts with 3/4 and
    postselect-rejects with 1/4, so strings of ``b*`` are decided by ``tau``.
    """
    # 1 start, 2 no-a, 3 seen-a, 4 post-accept, 5 post-reject, 6 silent
    def step(sym, q):
        if q in (4, 5, 6):
            return {q: 1}
        if sym == CENT:
            return {2: 1} if q == 1 else {q: 1}
        if sym == DOLLAR:
            if q == 3:
                return {4: Fraction(3, 4), 5: Fraction(1, 4)}
            return {6: 1}
        if q == 2 and sym == "a":
            return {3: 1}
        return {q: 1}

    base = PfaMachine(6, AB, pfa_from_function(6, AB, step))
    return LatvianPostMachine(PostMachine(base, {4}, {5}), tau)


def parity_post(tau: Tau) -> LatvianPostMachine:
    """Postselection mass only on odd-length strings, split by the last symbol."""
    # 1 start, 2 even, 3 odd-last-a, 4 odd-last-b, 5 post-accept, 6 post-reject, 7 silent
    def step(sym, q):
        if q in (5, 6, 7):
            return {q: 1}
        if sym == CENT:
            return {2: 1} if q == 1 else {q: 1}
        if sym == DOLLAR:
            return {1: {7: 1}, 2: {7: 1}, 3: {5: Fraction(2, 3), 6: Fraction(1, 3)}, 4: {5: Fraction(1, 5), 6: Fraction(4, 5)}}[q]
        if q == 2:
            return {3: 1} if sym == "a" else {4: 1}
        return {2: 1}

    base = PfaMachine(7, AB, pfa_from_function(7, AB, step))
    return LatvianPostMachine(PostMachine(base, {5}, {6}), tau)


def latvian_fixtures() -> dict[str, LatvianPostMachine]:
    return {
        "needs-a/A": needs_a_post(Tau.ACCEPT),
        "needs-a/R": needs_a_post(Tau.REJECT),
        "parity/A": parity_post(Tau.ACCEPT),
        "parity/R": parity_post(Tau.REJECT),
        "leq/A": LatvianPostMachine(zoo.leq_post(), Tau.ACCEPT),
    }
