"""Witness machines for the nonregular languages, with membership oracles."""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

import numpy as np

from . import numkit
from .dfa import Dfa
from .errors import PreconditionError
from .models import (
    CENT,
    DOLLAR,
    HaltTiming,
    KwqfaMachine,
    PfaMachine,
    PostMachine,
    QfaMachine,
    RestartPfa,
    pfa_from_function,
)
from .transforms import _dfa_as_pfa, embed_linear_system, kwqfa_restart_to_qfa_restart, post_complement, restart_to_post

AB = ("a", "b")


# ---------------------------------------------------------------- languages

def in_leq(w: str) -> bool:
    return w.count("a") == w.count("b")


def is_palindrome(w: str) -> bool:
    return w == w[::-1]


def in_leqeq(w: str) -> bool:
    """``a`` followed by an L_eq string, or ``b`` followed by a non-L_eq string."""
    if not w:
        return False
    return in_leq(w[1:]) if w[0] == "a" else not in_leq(w[1:])


LANGUAGES: dict[str, Callable[[str], bool]] = {
    "eq": in_leq,
    "pal": is_palindrome,
    "eqeq-bar": in_leqeq,
    "all": lambda w: True,
    "none": lambda w: False,
}


def language(name: str) -> Callable[[str], bool]:
    """Membership predicate by name; ``regex:<pattern>`` matches the whole string."""
    if name.startswith("regex:"):
        pattern = re.compile(name[len("regex:"):])
        return lambda w: pattern.fullmatch(w) is not None
    try:
        return LANGUAGES[name]
    except KeyError:
        raise ValueError(f"unknown language {name!r}; choose from {sorted(LANGUAGES)} or regex:<pattern>") from None


# ---------------------------------------------------------------- L_eq

@dataclass(frozen=True)
class LeqParams:
    rho: Fraction = Fraction(3, 4)
    alpha: Fraction = Fraction(1, 32)
    epsilon: Fraction = Fraction(1, 4)

    def __post_init__(self):
        for name in ("rho", "alpha", "epsilon"):
            object.__setattr__(self, name, Fraction(getattr(self, name)))
        rho, alpha, eps = self.rho, self.alpha, self.epsilon
        if not (Fraction(1, 2) < rho < 1 and 0 < alpha < 1 and 0 < eps < Fraction(1, 2)):
            raise PreconditionError(f"parameters out of range: {self}")
        if rho < 1 - eps:
            raise PreconditionError(f"rho={rho} must be at least 1 - epsilon = {1 - eps}")
        if alpha > alpha_bound(eps):
            raise PreconditionError(f"alpha={alpha} exceeds {alpha_bound(eps)}")

    @classmethod
    def for_epsilon(cls, epsilon) -> "LeqParams":
        """``rho = 1 - eps`` and the largest ``alpha = 2**-k`` within the bound."""
        eps = Fraction(epsilon)
        if not 0 < eps < Fraction(1, 2):
            raise PreconditionError(f"epsilon must lie in (0, 1/2), got {eps}")
        alpha = Fraction(1, 2)
        while alpha > alpha_bound(eps):
            alpha /= 2
        return cls(1 - eps, alpha, eps)


def alpha_bound(eps: Fraction) -> Fraction:
    return eps * eps / (2 * (1 - eps) ** 2)


def leq_round(params: LeqParams, w: str) -> tuple[Fraction, Fraction]:
    """Closed-form single-round (accept, reject) probabilities."""
    x, y = w.count("a"), w.count("b")
    rho, alpha = params.rho, params.alpha
    return rho * alpha ** (x + y), (1 - rho) / 2 * (alpha ** (2 * x) + alpha ** (2 * y))


# states: start, accept track, a-sensitive reject track, b-sensitive reject track,
# dead track, then the accept / reject / restart states entered on $
_S, _A, _R1, _R2, _D, _QA, _QR, _QRES = range(1, 9)
_END = {_S: _QRES, _A: _QA, _R1: _QR, _R2: _QR, _D: _QRES}


def build_leq(params: LeqParams = LeqParams(), halt: HaltTiming = HaltTiming.AT_END) -> RestartPfa:
    """Restart PFA for ``{w : |w|_a = |w|_b}``.

    The accept track survives every symbol with probability ``alpha``; each
    reject track survives its own symbol with ``alpha**2``. Leaked mass
    restarts: after ``$`` with ``AT_END`` timing, immediately with
    ``PER_STEP``.
    """
    rho, alpha = params.rho, params.alpha
    leak = _D if halt is HaltTiming.AT_END else _QRES

    def step(sym, q):
        if q in (_QA, _QR, _QRES, _D) and not (q == _D and sym == DOLLAR):
            return {q: 1}
        if sym == CENT:
            if q == _S:
                return {_A: rho, _R1: (1 - rho) / 2, _R2: (1 - rho) / 2}
            return {q: 1}
        if sym == DOLLAR:
            return {_END[q]: 1}
        if q == _A:
            return {_A: alpha, leak: 1 - alpha}
        mine = _R1 if sym == "a" else _R2
        if q == mine:
            return {q: alpha**2, leak: 1 - alpha**2}
        return {q: 1}

    mats = pfa_from_function(8, AB, step)
    return RestartPfa(PfaMachine(8, AB, mats, {_QA}), {_QR}, {_QRES}, halt)


def leq_post(params: LeqParams = LeqParams()) -> PostMachine:
    return restart_to_post(build_leq(params))


# ---------------------------------------------------------------- L_eq-eq-bar

def build_leqeq(epsilon=Fraction(1, 4)) -> PostMachine:
    """Postselection PFA for ``a L_eq  U  b (complement of L_eq)``.

    The first symbol dispatches into one of two copies of the L_eq
    machine (the second with postselection sets swapped); reading ``$``
    straight after ``¢`` lands in a postselection reject sink.
    """
    inner = leq_post(LeqParams.for_epsilon(epsilon))
    k = inner.states
    n = 2 * k + 2
    start, sink = 1, n
    copy_a = lambda q: 1 + q
    copy_b = lambda q: 1 + k + q
    launch = inner.base.columns[CENT][0]

    def step(sym, q):
        if q == sink:
            return {q: 1}
        if q == start:
            if sym == CENT:
                return {start: 1}
            if sym == DOLLAR:
                return {sink: 1}
            place = copy_a if sym == "a" else copy_b
            return {place(i + 1): p for i, p in launch}
        if q <= 1 + k:
            local, place = q - 1, copy_a
        else:
            local, place = q - 1 - k, copy_b
        return {place(i + 1): p for i, p in inner.base.columns[sym][local - 1]}

    mats = pfa_from_function(n, AB, step)
    base = PfaMachine(n, AB, mats)
    acc = {copy_a(q) for q in inner.post_accept} | {copy_b(q) for q in inner.post_reject}
    rej = {copy_a(q) for q in inner.post_reject} | {copy_b(q) for q in inner.post_accept} | {sink}
    return PostMachine(base, acc, rej)


# ---------------------------------------------------------------- L_pal

@dataclass(frozen=True)
class LpalParams:
    mu: Fraction = Fraction(1, 2)
    epsilon: Fraction = Fraction(1, 5)
    digit_a: int = 1
    digit_b: int = 2
    base: int = 4

    def __post_init__(self):
        object.__setattr__(self, "mu", Fraction(self.mu))
        object.__setattr__(self, "epsilon", Fraction(self.epsilon))
        if not 0 < self.mu < 1:
            raise PreconditionError(f"mu must lie in (0, 1), got {self.mu}")
        if not 0 < self.epsilon < Fraction(1, 2):
            raise PreconditionError(f"epsilon must lie in (0, 1/2), got {self.epsilon}")
        if self.mu**2 > self.epsilon / (1 - self.epsilon):
            raise PreconditionError(f"mu**2 = {self.mu ** 2} exceeds epsilon/(1-epsilon)")
        if not (0 < self.digit_a < self.base and 0 < self.digit_b < self.base and self.digit_a != self.digit_b):
            raise PreconditionError("digits must be distinct and nonzero below the base")


def lpal_encodings(w: str, params: LpalParams = LpalParams()) -> tuple[int, int]:
    """``w`` read least- and most-significant-digit first in the given base."""
    digit = {"a": params.digit_a, "b": params.digit_b}
    x = sum(digit[c] * params.base**i for i, c in enumerate(w))
    y = sum(digit[c] * params.base**i for i, c in enumerate(reversed(w)))
    return x, y


# linear-system coordinates (1-based): start, u1, x, u2, y, accept, reject
_LS, _U1, _X, _U2, _Y, _LA, _LR = range(1, 8)


def lpal_linear_system(params: LpalParams = LpalParams()) -> dict[str, np.ndarray]:
    """Per-symbol 7x7 integer-weighted maps evolving the two encodings.

    ``u1`` holds ``base**i``; ``x`` accumulates digits least significant
    first, ``y`` most significant first. ``$`` writes ``mu * u2`` to the
    accept coordinate and ``x - y`` to the reject coordinate.
    """
    b = params.base
    mats = {}
    c = np.zeros((7, 7))
    c[_U1 - 1, _LS - 1] = 1
    c[_U2 - 1, _LS - 1] = 1
    mats[CENT] = c
    for sym, d in (("a", params.digit_a), ("b", params.digit_b)):
        m = np.zeros((7, 7))
        m[_U1 - 1, _U1 - 1] = b
        m[_X - 1, _U1 - 1] = d
        m[_X - 1, _X - 1] = 1
        m[_U2 - 1, _U2 - 1] = 1
        m[_Y - 1, _U2 - 1] = d
        m[_Y - 1, _Y - 1] = b
        mats[sym] = m
    e = np.zeros((7, 7))
    e[_LA - 1, _U2 - 1] = float(params.mu)
    e[_LR - 1, _X - 1] = 1
    e[_LR - 1, _Y - 1] = -1
    mats[DOLLAR] = e
    return {s: m.astype(np.complex128) for s, m in mats.items()}


def build_lpal(params: LpalParams = LpalParams()) -> KwqfaMachine:
    """Restart KWQFA for palindromes over ``{a, b}``.

    Round amplitudes are ``mu / l**(|w|+2)`` on accept and
    ``(x - y) / l**(|w|+2)`` on reject. The scale ``l`` is rounded up to a
    power of two so the nonhalting evolution is exact in binary floating
    point, which makes the reject amplitude exactly zero on palindromes.
    """
    mats = lpal_linear_system(params)
    top = numkit.orthonormal_extend([mats[s] for s in (CENT, *AB, DOLLAR)]).scale
    scale = 2.0 ** math.ceil(math.log2(top))
    machine, _ = embed_linear_system(mats, AB, _LA, _LR, scale=scale)
    return machine


def lpal_complement_cutpoint_zero(params: LpalParams = LpalParams()) -> QfaMachine:
    """QFA accepting exactly the nonpalindromes with nonzero probability."""
    rq = kwqfa_restart_to_qfa_restart(build_lpal(params))
    return rq.qfa.with_accept(rq.reject)


# ---------------------------------------------------------------- regular languages

def dfa_to_zero_error_post(d: Dfa) -> PostMachine:
    """Zero-error postselection machine: accepting DFA states postselect-accept, the rest reject."""
    pfa = _dfa_as_pfa(d)
    everything = frozenset(range(1, pfa.states + 1))
    return PostMachine(pfa, pfa.accept, everything - pfa.accept)


def trivial_pfa(accepting: bool = True, alphabet=AB) -> PfaMachine:
    """One-state machine; accepts everything iff ``accepting``."""
    one = [[Fraction(1)]]
    mats = {s: one for s in (CENT, *alphabet, DOLLAR)}
    return PfaMachine(1, alphabet, mats, {1} if accepting else set())


def regular_fixtures() -> dict[str, tuple[Dfa, Callable[[str], bool]]]:
    """Five regular languages over ``{a, b}`` as DFAs with independent regex oracles."""
    def dfa(n, table, accepting):
        delta = {(q, s): table[q][i] for q in range(n) for i, s in enumerate(AB)}
        return Dfa(n, AB, delta, 0, accepting)

    def rx(p):
        pat = re.compile(p)
        return lambda w: pat.fullmatch(w) is not None

    return {
        "ab-star": (dfa(3, [(1, 2), (2, 0), (2, 2)], {0}), rx("(ab)*")),
        "even-a": (dfa(2, [(1, 0), (0, 1)], {0}), lambda w: w.count("a") % 2 == 0),
        "ends-b": (dfa(2, [(0, 1), (0, 1)], {1}), rx("[ab]*b")),
        "no-bb": (dfa(3, [(0, 1), (0, 2), (2, 2)], {0, 1}), lambda w: "bb" not in w),
        "len-mod3": (dfa(3, [(1, 1), (2, 2), (0, 0)], {0}), lambda w: len(w) % 3 == 0),
    }


ZOO = {
    "leq": lambda eps: build_leq(LeqParams.for_epsilon(eps)),
    "leq-post": lambda eps: leq_post(LeqParams.for_epsilon(eps)),
    "leq-perstep": lambda eps: build_leq(LeqParams.for_epsilon(eps), HaltTiming.PER_STEP),
    "leqeq": build_leqeq,
    "lpal": lambda eps: build_lpal(LpalParams(epsilon=eps, mu=_mu_for(eps))),
    "lpal-co-cutpoint-zero": lambda eps: lpal_complement_cutpoint_zero(LpalParams(epsilon=eps, mu=_mu_for(eps))),
    "ab-star": lambda eps: dfa_to_zero_error_post(regular_fixtures()["ab-star"][0]),
}

#: Default error bound per zoo entry when none is given.
ZOO_DEFAULT_EPSILON = {
    "leq": Fraction(1, 4), "leq-post": Fraction(1, 4), "leq-perstep": Fraction(1, 4),
    "leqeq": Fraction(1, 4), "lpal": Fraction(1, 5), "lpal-co-cutpoint-zero": Fraction(1, 5),
    "ab-star": Fraction(0),
}


def _mu_for(eps) -> Fraction:
    """Largest ``mu = 2**-k`` with ``mu**2 <= eps / (1 - eps)``."""
    eps = Fraction(eps)
    if not 0 < eps < Fraction(1, 2):
        raise PreconditionError(f"epsilon must lie in (0, 1/2), got {eps}")
    mu = Fraction(1, 2)
    while mu * mu > eps / (1 - eps):
        mu /= 2
    return mu
