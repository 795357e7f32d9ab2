"""Constructive conversions between machine kinds.

Restart and postselection machines are interconvertible; postselection
machines are closed under complement, union and intersection and admit
error reduction by tensor powers; quantum restart machines compile to
Kondacs-Watrous restart machines through a linearised density evolution.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import numkit
from .dfa import Dfa, determinize
from .errors import PreconditionError, VariantMismatchError
from .models import (
    CENT,
    DOLLAR,
    HaltTiming,
    JudgmentMode,
    KwqfaMachine,
    LatvianPostMachine,
    PfaMachine,
    PostMachine,
    QfaMachine,
    RecognitionJudgment,
    RestartPfa,
    RestartQfa,
    Tau,
    tape_symbols,
)
from .semantics import RoundOutcome, tape


# ---------------------------------------------------------------- helpers

def _pair(i: int, j: int, n2: int) -> int:
    """1-based index of basis state ``q_i (x) q_j`` in a tensor product."""
    return (i - 1) * n2 + j


def _product_set(s1, s2, n2: int) -> frozenset[int]:
    return frozenset(_pair(i, j, n2) for i in s1 for j in s2)


def _all_states(n: int) -> frozenset[int]:
    return frozenset(range(1, n + 1))


def tensor_base(b1, b2):
    """Run two base machines in parallel on the same input."""
    if type(b1) is not type(b2):
        raise VariantMismatchError(
            f"cannot combine {type(b1).__name__} with {type(b2).__name__}"
        )
    if b1.alphabet != b2.alphabet:
        raise PreconditionError(f"alphabets differ: {b1.alphabet} vs {b2.alphabet}")
    n = b1.states * b2.states
    if isinstance(b1, PfaMachine):
        mats = {s: numkit.kron(b1.transitions[s], b2.transitions[s]) for s in tape_symbols(b1.alphabet)}
        return PfaMachine(n, b1.alphabet, mats)
    kraus = {
        s: tuple(numkit.kron(e1, e2) for e1 in b1.kraus[s] for e2 in b2.kraus[s])
        for s in tape_symbols(b1.alphabet)
    }
    return QfaMachine(n, b1.alphabet, kraus)


def _extend_pfa(m: PfaMachine, extra: int, dollar_route: dict[int, int] | None = None) -> dict:
    """Transition matrices with ``extra`` appended absorbing states.

    ``dollar_route`` optionally redirects, after ``$``, mass arriving at a
    state (key, 1-based) to another state (value).
    """
    n = m.states
    out = {}
    for sym in tape_symbols(m.alphabet):
        big = numkit.block_diag(m.transitions[sym], numkit.identity(extra))
        if sym == DOLLAR and dollar_route:
            route = numkit.identity(n + extra)
            for src, dst in dollar_route.items():
                route[src - 1, src - 1] = Fraction(0)
                route[dst - 1, src - 1] = Fraction(1)
            big = route @ big
        out[sym] = big
    return out


# ---------------------------------------------------------------- restart <-> postselection

def restart_to_post(m: RestartPfa | RestartQfa) -> PostMachine:
    """Accept and reject states become postselection accept and reject states."""
    if isinstance(m, RestartPfa):
        if m.halt is not HaltTiming.AT_END:
            raise PreconditionError("machine halts mid-word; apply defer_halting first")
        return PostMachine(m.pfa, m.accept, m.reject)
    if isinstance(m, RestartQfa):
        return PostMachine(m.qfa, m.accept, m.reject)
    if isinstance(m, KwqfaMachine):
        raise PreconditionError("Kondacs-Watrous machines measure every step; apply kwqfa_restart_to_qfa_restart first")
    raise TypeError(f"not a restart machine: {type(m).__name__}")


def post_to_restart(m: PostMachine) -> RestartPfa | RestartQfa:
    """Postselection accept/reject states halt; all other states restart after ``$``.

    The probabilistic version routes the final mass into three fresh sink
    states (accept, reject, restart) so that halting and restarting happen
    only after ``$``.
    """
    if isinstance(m.base, QfaMachine):
        return RestartQfa(m.base.with_accept(m.post_accept), m.post_reject)
    n = m.states
    acc, rej, res = n + 1, n + 2, n + 3
    route = {}
    for q in range(1, n + 1):
        route[q] = acc if q in m.post_accept else rej if q in m.post_reject else res
    mats = _extend_pfa(m.base, 3, route)
    base = PfaMachine(n + 3, m.alphabet, mats, {acc})
    return RestartPfa(base, {rej}, {res}, HaltTiming.AT_END)


def defer_halting(m: RestartPfa) -> RestartPfa:
    """Postpone every mid-word halt or restart to the ``$`` transition.

    Mass that would halt or restart before ``$`` is parked in one of three
    absorbing carrier states and released into the matching halting or
    restart set when ``$`` is read.
    """
    if m.halt is HaltTiming.AT_END:
        return m
    n = m.states
    ca, cr, cres = n + 1, n + 2, n + 3
    redirect = {}
    for q in m.accept:
        redirect[q] = ca
    for q in m.reject:
        redirect[q] = cr
    for q in m.restart:
        redirect[q] = cres
    release = {
        ca: min(m.accept, default=ca),
        cr: min(m.reject, default=cr),
        cres: min(m.restart, default=cres),
    }
    mats = {}
    for sym in tape_symbols(m.alphabet):
        big = numkit.block_diag(m.pfa.transitions[sym], numkit.identity(3))
        if sym == DOLLAR:
            for c, target in release.items():
                if target != c:
                    big[c - 1, c - 1] = Fraction(0)
                    big[target - 1, c - 1] = Fraction(1)
        else:
            for src, dst in redirect.items():
                row = big[src - 1, :].copy()
                big[src - 1, :] = Fraction(0)
                big[dst - 1, :] = big[dst - 1, :] + row
        mats[sym] = big
    base = PfaMachine(n + 3, m.alphabet, mats, m.accept)
    return RestartPfa(base, m.reject, m.restart, HaltTiming.AT_END)


# ---------------------------------------------------------------- closure

def post_complement(m: PostMachine) -> PostMachine:
    return PostMachine(m.base, m.post_reject, m.post_accept)


def post_union(m1: PostMachine, m2: PostMachine) -> PostMachine:
    """Tensor product whose rejecting states are exactly the jointly rejecting pairs.

    Both operands should already have error bound at most 1/4; amplify first
    if not.
    """
    n2 = m2.states
    base = tensor_base(m1.base, m2.base)
    post = _product_set(m1.post_states, m2.post_states, n2)
    rej = _product_set(m1.post_reject, m2.post_reject, n2)
    return PostMachine(base, post - rej, rej)


def post_intersection(m1: PostMachine, m2: PostMachine) -> PostMachine:
    """Tensor product whose accepting states are exactly the jointly accepting pairs."""
    n2 = m2.states
    base = tensor_base(m1.base, m2.base)
    post = _product_set(m1.post_states, m2.post_states, n2)
    acc = _product_set(m1.post_accept, m2.post_accept, n2)
    return PostMachine(base, acc, post - acc)


def amplify(m: PostMachine, k: int) -> PostMachine:
    """``k`` parallel copies; postselection sets are the k-fold products.

    Pre-postselection probabilities become ``(p_a**k, p_r**k)``.
    """
    if k < 1:
        raise PreconditionError("k must be at least 1")
    out = m
    for _ in range(k - 1):
        n2 = m.states
        out = PostMachine(
            tensor_base(out.base, m.base),
            _product_set(out.post_accept, m.post_accept, n2),
            _product_set(out.post_reject, m.post_reject, n2),
        )
    return out


@dataclass(frozen=True)
class AmplificationPlan:
    k: int
    epsilon_in: Fraction
    epsilon_out: Fraction
    closed_form_k: int | None = None


def choose_k(epsilon, target=None) -> AmplificationPlan:
    """Smallest number of copies taking error bound ``epsilon`` to ``target`` (default ``epsilon**2``)."""
    eps = Fraction(epsilon)
    if not 0 < eps < Fraction(1, 2):
        raise PreconditionError(f"epsilon must lie in (0, 1/2), got {eps}")
    target = eps * eps if target is None else Fraction(target)
    if not 0 < target < Fraction(1, 2):
        raise PreconditionError(f"target must lie in (0, 1/2), got {target}")
    ratio = eps / (1 - eps)
    bound = target / (1 - target)
    k = 1
    while ratio**k > bound:
        k += 1
    closed = None
    if target == eps * eps:
        closed = 1 + math.ceil(math.log(1 / eps + 1) / math.log(1 / eps - 1))
        if ratio**closed > bound:
            raise ArithmeticError(f"closed-form k={closed} does not meet the bound")
    return AmplificationPlan(k, eps, target, closed)


# ---------------------------------------------------------------- postselection -> cutpoint

def post_to_cutpoint(m: PostMachine) -> PfaMachine | QfaMachine:
    """Standard machine accepting with probability ``p_a + (1 - p_a - p_r) / 2``.

    Nonpostselection mass is split evenly between two fresh sinks on ``$``;
    the accept set is the postselection accept states plus the accepting
    sink. Recognition is then with cutpoint 1/2.
    """
    n = m.states
    acc, rej = n + 1, n + 2
    nonpost = _all_states(n) - m.post_states
    if isinstance(m.base, PfaMachine):
        split = numkit.identity(n + 2)
        for q in nonpost:
            split[q - 1, q - 1] = Fraction(0)
            split[acc - 1, q - 1] = Fraction(1, 2)
            split[rej - 1, q - 1] = Fraction(1, 2)
        mats = {}
        for sym in tape_symbols(m.alphabet):
            big = numkit.block_diag(m.base.transitions[sym], numkit.identity(2))
            mats[sym] = split @ big if sym == DOLLAR else big
        return PfaMachine(n + 2, m.alphabet, mats, m.post_accept | {acc})

    keep = np.zeros((n + 2, n + 2), dtype=np.complex128)
    for q in m.post_states | {acc, rej}:
        keep[q - 1, q - 1] = 1.0
    split = [keep]
    h = 1 / math.sqrt(2)
    for q in sorted(nonpost):
        for sink in (acc, rej):
            e = np.zeros((n + 2, n + 2), dtype=np.complex128)
            e[sink - 1, q - 1] = h
            split.append(e)
    kraus = {}
    for sym in tape_symbols(m.alphabet):
        coll = []
        for i, e in enumerate(m.base.kraus[sym]):
            pad = np.eye(2) if i == 0 else np.zeros((2, 2))
            coll.append(numkit.block_diag(numkit.to_complex(e), pad.astype(np.complex128)))
        if sym == DOLLAR:
            coll = [s @ e for s in split for e in coll]
        kraus[sym] = tuple(coll)
    return QfaMachine(n + 2, m.alphabet, kraus, m.post_accept | {acc})


class Side(Enum):
    LANGUAGE = "language"
    COMPLEMENT = "complement"


def zero_error_post_to_cutpoint_zero(m: PostMachine, side=Side.LANGUAGE):
    """Standard machine accepting on postselection accept (or reject) states.

    Returns the machine together with the cutpoint-zero judgment it is
    meant to satisfy.
    """
    side = Side(side)
    accept = m.post_accept if side is Side.LANGUAGE else m.post_reject
    return m.base.with_accept(accept), RecognitionJudgment(JudgmentMode.CUTPOINT_ZERO)


# ---------------------------------------------------------------- quantum restart machines

def kwqfa_restart_to_qfa_restart(m: KwqfaMachine) -> RestartQfa:
    """Simulate per-step measurement by deferring it to the end of the round.

    Per symbol the Kraus collection is ``U P_n`` followed by the identity
    on restart, accept and reject states.
    """
    n = m.states
    proj = {}
    for name, states in (("n", m.nonhalting), ("res", m.restart), ("acc", m.accept), ("rej", m.reject)):
        p = np.zeros((n, n), dtype=np.complex128)
        for q in states:
            p[q - 1, q - 1] = 1.0
        proj[name] = p
    kraus = {}
    for sym, u in m.unitaries.items():
        coll = [u @ proj["n"]]
        coll += [proj[k] for k in ("res", "acc", "rej") if proj[k].any()]
        kraus[sym] = tuple(coll)
    return RestartQfa(QfaMachine(n, m.alphabet, kraus, m.accept), m.reject)


@dataclass(frozen=True)
class LinearizedSystem:
    """Column system of dimension ``n**2 + 2`` tracking a vectorised density matrix.

    The two trailing coordinates collect the accept and reject probability
    of the round.
    """

    n: int
    alphabet: tuple[str, ...]
    matrices: dict
    selector: np.ndarray

    @property
    def dimension(self) -> int:
        return self.n * self.n + 2

    @property
    def accept_index(self) -> int:
        return self.n * self.n + 1

    @property
    def reject_index(self) -> int:
        return self.n * self.n + 2

    def final_vector(self, w: str) -> np.ndarray:
        v = np.zeros(self.dimension, dtype=np.complex128)
        v[0] = 1.0
        for sym in tape(w):
            v = self.matrices[sym] @ v
        return v

    def outcome(self, w: str) -> RoundOutcome:
        v = self.final_vector(w)
        return RoundOutcome(float(v[-2].real), float(v[-1].real))


def linearize(m: RestartQfa) -> LinearizedSystem:
    """Linearise the round of a quantum restart machine.

    With row-major vectorisation, ``vec(E rho E^dagger) = (E (x) conj(E)) vec(rho)``
    and the diagonal entry ``rho[i, i]`` sits at 1-based position ``(i-1)n + i``.
    """
    n = m.states
    d = n * n
    sel = np.zeros((2, d), dtype=np.complex128)
    for q in m.accept:
        sel[0, (q - 1) * n + q - 1] = 1.0
    for q in m.reject:
        sel[1, (q - 1) * n + q - 1] = 1.0
    mats = {}
    for sym, coll in m.qfa.kraus.items():
        a = sum(np.kron(e, e.conj()) for e in coll)
        big = numkit.block_diag(a, np.eye(2, dtype=np.complex128))
        if sym == DOLLAR:
            collect = np.zeros((d + 2, d + 2), dtype=np.complex128)
            collect[d:, :d] = sel
            collect[d:, d:] = np.eye(2)
            big = collect @ big
        mats[sym] = big
    return LinearizedSystem(n, m.alphabet, mats, sel)


def embed_linear_system(
    matrices: dict,
    alphabet: Sequence[str],
    accept: int,
    reject: int,
    scale: float | None = None,
    tol: float = numkit.VALIDATION_TOL,
) -> tuple[KwqfaMachine, float]:
    """Turn a family of ``m x m`` linear maps into a ``3m``-state restart KWQFA.

    Each map is divided by a common scale and completed to a unitary. The
    first ``m`` states mirror the linear system: ``accept`` and ``reject``
    (1-based) halt, the others are nonhalting; the ``2m`` padding states
    restart.
    """
    symbols = tape_symbols(alphabet)
    family = [matrices[s] for s in symbols]
    ext = numkit.orthonormal_extend(family, scale)
    m = family[0].shape[0]
    unitaries = {}
    for k, s in enumerate(symbols):
        iso = ext.stacked(k, family[k])
        unitaries[s] = numkit.unitary_complete(iso, tol)
    restart = frozenset(range(m + 1, 3 * m + 1))
    machine = KwqfaMachine(3 * m, tuple(alphabet), unitaries, {accept}, {reject}, restart)
    return machine, ext.scale


@dataclass(frozen=True)
class CompiledKwqfa:
    machine: KwqfaMachine
    scale: float
    epsilon_out: float | None


def compiled_error_bound(epsilon):
    """Error bound after compilation: ``eps**2 / (1 - 2 eps + 2 eps**2)``."""
    return epsilon * epsilon / (1 - 2 * epsilon + 2 * epsilon * epsilon)


def qfa_restart_to_kwqfa_restart(m: RestartQfa, epsilon=None, tol: float = numkit.VALIDATION_TOL) -> CompiledKwqfa:
    """Compile an ``n``-state quantum restart machine to a ``3n**2 + 6``-state KWQFA.

    Single-round amplitudes on the new accept/reject states are the old
    round probabilities times ``scale**-(|w| + 2)``, so new round
    probabilities are their squares (up to that factor).
    """
    lin = linearize(m)
    machine, scale = embed_linear_system(
        lin.matrices, m.alphabet, lin.accept_index, lin.reject_index, tol=tol
    )
    eps_out = None if epsilon is None else compiled_error_bound(epsilon)
    return CompiledKwqfa(machine, scale, eps_out)


# ---------------------------------------------------------------- Latvian machines

def _post_of(m) -> PostMachine:
    return m.post if isinstance(m, LatvianPostMachine) else m


def zero_support_dfa(m: PostMachine | LatvianPostMachine) -> Dfa:
    """DFA over the input alphabet accepting the strings with zero postselection mass.

    Determinises the support automaton (positive-probability transitions)
    whose accepting subsets are those reaching a postselection state after
    ``$``, then complements.
    """
    post = _post_of(m)
    if not isinstance(post.base, PfaMachine):
        raise PreconditionError("zero-support automaton needs a probabilistic base")
    cols = post.base.columns
    targets = {q - 1 for q in post.post_states}

    def successors(subset, sym):
        return {i for j in subset for i, _ in cols[sym][j]}

    def zero_mass(subset):
        return not (successors(subset, DOLLAR) & targets)

    start = frozenset(i for i, _ in cols[CENT][0])
    return determinize(post.alphabet, start, successors, zero_mass)


def _dfa_as_pfa(d: Dfa) -> PfaMachine:
    """Deterministic 0/1 machine; ``¢`` and ``$`` act as the identity.

    States are renumbered so the DFA start state is state 1.
    """
    order = [d.start] + [q for q in range(d.states) if q != d.start]
    pos = {q: i for i, q in enumerate(order)}
    mats = {}
    for sym in tape_symbols(d.alphabet):
        if sym in (CENT, DOLLAR):
            mats[sym] = numkit.identity(d.states)
            continue
        mat = numkit.zeros(d.states, d.states)
        for q in range(d.states):
            mat[pos[d.delta[(q, sym)]], pos[q]] = Fraction(1)
        mats[sym] = mat
    return PfaMachine(d.states, d.alphabet, mats, frozenset(pos[q] + 1 for q in d.accepting))


def latvian_to_post(m: LatvianPostMachine) -> PostMachine:
    """Equivalent plain postselection machine, by running the zero-support DFA in parallel."""
    post = m.post
    if not isinstance(post.base, PfaMachine):
        raise PreconditionError("only probabilistic Latvian machines convert to plain postselection")
    d = _dfa_as_pfa(zero_support_dfa(post))
    nd = d.states
    base = tensor_base(post.base, d)
    a_d = d.accept
    not_a_d = _all_states(nd) - a_d
    nonpost = _all_states(post.states) - post.post_states
    silent = _product_set(nonpost, a_d, nd)
    post_set = silent | _product_set(post.post_states, not_a_d, nd)
    acc = _product_set(post.post_accept, not_a_d, nd)
    if m.tau is Tau.ACCEPT:
        acc = acc | silent
    return PostMachine(base, acc, post_set - acc)


def cutpoint_zero_to_latvian(m: QfaMachine | PfaMachine, side: str = "nqal") -> LatvianPostMachine:
    """Zero-error Latvian machine from a cutpoint-zero recognizer.

    ``nqal``: ``m`` recognizes L; its accept states postselect-accept, tau = R.
    ``conqal``: ``m`` recognizes the complement; its accept states
    postselect-reject, tau = A.
    """
    if side == "nqal":
        return LatvianPostMachine(PostMachine(m, m.accept, frozenset()), Tau.REJECT)
    if side == "conqal":
        return LatvianPostMachine(PostMachine(m, frozenset(), m.accept), Tau.ACCEPT)
    raise ValueError(f"side must be 'nqal' or 'conqal', got {side!r}")
