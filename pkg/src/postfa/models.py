"""Machine definitions.

State indices are 1-based and the initial state is always state 1. Every
machine reads ``¢ w $``; transition data is keyed by symbol, with the
end-markers stored under :data:`CENT` and :data:`DOLLAR`.
"""
from __future__ import annotations

from dataclasses import dataclass, fields
from enum import Enum
from fractions import Fraction
from functools import cached_property
from typing import Mapping, Union

import numpy as np

from . import numkit
from .errors import InvariantError, PreconditionError

CENT = "¢"
DOLLAR = "$"
RESERVED = frozenset({CENT, DOLLAR})

#: Tolerance for float unitarity / admissibility checks.
MODEL_TOL = 1e-9


def check_alphabet(symbols) -> tuple[str, ...]:
    symbols = tuple(symbols)
    if not symbols:
        raise InvariantError("alphabet must be nonempty")
    if len(set(symbols)) != len(symbols):
        raise InvariantError(f"duplicate symbols in alphabet {symbols}")
    for s in symbols:
        if not isinstance(s, str) or len(s) != 1 or s.isspace() or s == "#":
            raise InvariantError(f"alphabet symbols must be single visible characters, got {s!r}")
        if s in RESERVED:
            raise InvariantError(f"end-marker {s!r} cannot be an input symbol")
    return symbols


def tape_symbols(alphabet) -> tuple[str, ...]:
    return (CENT, *alphabet, DOLLAR)


def _index_set(states: int, indices, what: str) -> frozenset[int]:
    out = frozenset(int(i) for i in indices)
    bad = sorted(i for i in out if not 1 <= i <= states)
    if bad:
        raise InvariantError(f"{what} indices {bad} outside 1..{states}")
    return out


def _freeze(m: np.ndarray) -> np.ndarray:
    m = np.array(m, copy=True)
    m.flags.writeable = False
    return m


def _field_equal(a, b) -> bool:
    if isinstance(a, np.ndarray) or isinstance(b, np.ndarray):
        return (
            isinstance(a, np.ndarray)
            and isinstance(b, np.ndarray)
            and a.dtype == b.dtype
            and a.shape == b.shape
            and bool(np.all(a == b))
        )
    if isinstance(a, Mapping) and isinstance(b, Mapping):
        return a.keys() == b.keys() and all(_field_equal(a[k], b[k]) for k in a)
    if isinstance(a, tuple) and isinstance(b, tuple):
        return len(a) == len(b) and all(_field_equal(x, y) for x, y in zip(a, b))
    return a == b


class _ArrayEq:
    """Field-wise equality that understands numpy arrays."""

    def __eq__(self, other):
        if type(self) is not type(other):
            return NotImplemented
        return all(
            _field_equal(getattr(self, f.name), getattr(other, f.name)) for f in fields(self)
        )

    __hash__ = None


@dataclass(frozen=True, eq=False)
class PfaMachine(_ArrayEq):
    """Real-time probabilistic automaton with exact rational column-stochastic matrices."""

    states: int
    alphabet: tuple[str, ...]
    transitions: Mapping[str, np.ndarray]
    accept: frozenset[int] = frozenset()

    def __post_init__(self):
        alphabet = check_alphabet(self.alphabet)
        object.__setattr__(self, "alphabet", alphabet)
        object.__setattr__(self, "accept", _index_set(self.states, self.accept, "accept"))
        trans = {}
        for sym in tape_symbols(alphabet):
            if sym not in self.transitions:
                raise InvariantError(f"missing transition matrix for symbol {sym!r}")
            m = self.transitions[sym]
            if not isinstance(m, np.ndarray) or not numkit.is_rational(m):
                m = numkit.rational_matrix(m)
            if m.shape != (self.states, self.states):
                raise InvariantError(f"matrix for {sym!r} has shape {m.shape}, expected {self.states}x{self.states}")
            report = numkit.validate_family("columnStochastic", [m], 0)
            if not report.passed:
                raise InvariantError(
                    f"matrix for symbol {sym!r} is not column stochastic (violation {report.worst})"
                )
            trans[sym] = _freeze(m)
        extra = set(self.transitions) - set(trans)
        if extra:
            raise InvariantError(f"transition matrices for unknown symbols {sorted(extra)}")
        object.__setattr__(self, "transitions", trans)

    @cached_property
    def columns(self) -> dict[str, list[list[tuple[int, Fraction]]]]:
        """Sparse column lists (0-based) used by the exact evaluators."""
        out = {}
        for sym, m in self.transitions.items():
            cols = []
            for j in range(self.states):
                cols.append([(i, m[i, j]) for i in range(self.states) if m[i, j] != 0])
            out[sym] = cols
        return out

    def with_accept(self, accept) -> "PfaMachine":
        return PfaMachine(self.states, self.alphabet, self.transitions, frozenset(accept))


@dataclass(frozen=True, eq=False)
class QfaMachine(_ArrayEq):
    """Real-time quantum automaton driven by one admissible operator per symbol."""

    states: int
    alphabet: tuple[str, ...]
    kraus: Mapping[str, tuple[np.ndarray, ...]]
    accept: frozenset[int] = frozenset()

    def __post_init__(self):
        alphabet = check_alphabet(self.alphabet)
        object.__setattr__(self, "alphabet", alphabet)
        object.__setattr__(self, "accept", _index_set(self.states, self.accept, "accept"))
        kraus = {}
        for sym in tape_symbols(alphabet):
            if sym not in self.kraus:
                raise InvariantError(f"missing Kraus collection for symbol {sym!r}")
            coll = tuple(numkit.to_complex(e) for e in self.kraus[sym])
            if not coll:
                raise InvariantError(f"empty Kraus collection for symbol {sym!r}")
            for e in coll:
                if e.shape != (self.states, self.states):
                    raise InvariantError(f"Kraus element for {sym!r} has shape {e.shape}")
            report = numkit.validate_family("admissible", coll, MODEL_TOL)
            if not report.passed:
                raise InvariantError(
                    f"Kraus collection for symbol {sym!r} is not admissible (violation {report.worst:.3g})"
                )
            kraus[sym] = tuple(_freeze(e) for e in coll)
        extra = set(self.kraus) - set(kraus)
        if extra:
            raise InvariantError(f"Kraus collections for unknown symbols {sorted(extra)}")
        object.__setattr__(self, "kraus", kraus)

    @cached_property
    def stacked_kraus(self) -> dict[str, np.ndarray]:
        return {sym: np.stack(coll) for sym, coll in self.kraus.items()}

    def with_accept(self, accept) -> "QfaMachine":
        return QfaMachine(self.states, self.alphabet, self.kraus, frozenset(accept))


@dataclass(frozen=True, eq=False)
class KwqfaMachine(_ArrayEq):
    """Kondacs-Watrous automaton: a unitary step, then a projective measurement.

    States outside ``accept | reject | restart`` are nonhalting. An empty
    ``restart`` set gives the plain (non-restart) machine.
    """

    states: int
    alphabet: tuple[str, ...]
    unitaries: Mapping[str, np.ndarray]
    accept: frozenset[int] = frozenset()
    reject: frozenset[int] = frozenset()
    restart: frozenset[int] = frozenset()

    def __post_init__(self):
        alphabet = check_alphabet(self.alphabet)
        object.__setattr__(self, "alphabet", alphabet)
        acc = _index_set(self.states, self.accept, "accept")
        rej = _index_set(self.states, self.reject, "reject")
        res = _index_set(self.states, self.restart, "restart")
        _check_disjoint(acc=acc, rej=rej, res=res)
        if 1 in acc | rej | res:
            raise InvariantError("the initial state must be nonhalting")
        object.__setattr__(self, "accept", acc)
        object.__setattr__(self, "reject", rej)
        object.__setattr__(self, "restart", res)
        us = {}
        for sym in tape_symbols(alphabet):
            if sym not in self.unitaries:
                raise InvariantError(f"missing unitary for symbol {sym!r}")
            u = numkit.to_complex(self.unitaries[sym])
            if u.shape != (self.states, self.states):
                raise InvariantError(f"unitary for {sym!r} has shape {u.shape}")
            report = numkit.validate_family("unitary", [u], MODEL_TOL)
            if not report.passed:
                raise InvariantError(f"matrix for symbol {sym!r} is not unitary (violation {report.worst:.3g})")
            us[sym] = _freeze(u)
        extra = set(self.unitaries) - set(us)
        if extra:
            raise InvariantError(f"unitaries for unknown symbols {sorted(extra)}")
        object.__setattr__(self, "unitaries", us)

    @property
    def nonhalting(self) -> frozenset[int]:
        return frozenset(range(1, self.states + 1)) - self.accept - self.reject - self.restart


def _check_disjoint(**sets) -> None:
    names = list(sets)
    for i, a in enumerate(names):
        for b in names[i + 1:]:
            common = sets[a] & sets[b]
            if common:
                raise InvariantError(f"{a} and {b} sets overlap at {sorted(common)}")


class HaltTiming(Enum):
    PER_STEP = "per-step"
    AT_END = "at-end"


def reachable_before_end(pfa: PfaMachine) -> frozenset[int]:
    """States holding positive mass at some point after ``¢`` and before ``$``."""
    cols = pfa.columns
    frontier = {i for i, _ in cols[CENT][0]}
    seen = set(frontier)
    while frontier:
        nxt = set()
        for j in frontier:
            for sym in pfa.alphabet:
                for i, _ in cols[sym][j]:
                    if i not in seen:
                        nxt.add(i)
        seen |= nxt
        frontier = nxt
    return frozenset(i + 1 for i in seen)


@dataclass(frozen=True, eq=False)
class RestartPfa(_ArrayEq):
    """Probabilistic automaton with restart.

    ``pfa.accept`` is the accept set; states outside accept, reject and
    restart are nonhalting. With ``AT_END`` timing the state is examined
    only after ``$``.
    """

    pfa: PfaMachine
    reject: frozenset[int] = frozenset()
    restart: frozenset[int] = frozenset()
    halt: HaltTiming = HaltTiming.AT_END

    def __post_init__(self):
        n = self.pfa.states
        rej = _index_set(n, self.reject, "reject")
        res = _index_set(n, self.restart, "restart")
        _check_disjoint(acc=self.pfa.accept, rej=rej, res=res)
        object.__setattr__(self, "reject", rej)
        object.__setattr__(self, "restart", res)
        object.__setattr__(self, "halt", HaltTiming(self.halt))
        if self.halt is HaltTiming.AT_END:
            early = reachable_before_end(self.pfa) & (self.accept | rej | res)
            if early:
                raise InvariantError(
                    f"at-end machine reaches halting/restart states {sorted(early)} before $"
                )

    @property
    def accept(self) -> frozenset[int]:
        return self.pfa.accept

    @property
    def states(self) -> int:
        return self.pfa.states

    @property
    def alphabet(self) -> tuple[str, ...]:
        return self.pfa.alphabet

    @property
    def nonhalting(self) -> frozenset[int]:
        return frozenset(range(1, self.states + 1)) - self.accept - self.reject - self.restart


@dataclass(frozen=True, eq=False)
class RestartQfa(_ArrayEq):
    """Quantum automaton with restart, measured once per round after ``$``.

    Every state outside ``qfa.accept`` and ``reject`` is a restart state.
    """

    qfa: QfaMachine
    reject: frozenset[int] = frozenset()

    def __post_init__(self):
        rej = _index_set(self.qfa.states, self.reject, "reject")
        _check_disjoint(acc=self.qfa.accept, rej=rej)
        object.__setattr__(self, "reject", rej)

    @property
    def accept(self) -> frozenset[int]:
        return self.qfa.accept

    @property
    def states(self) -> int:
        return self.qfa.states

    @property
    def alphabet(self) -> tuple[str, ...]:
        return self.qfa.alphabet

    @property
    def restart(self) -> frozenset[int]:
        return frozenset(range(1, self.states + 1)) - self.accept - self.reject


Base = Union[PfaMachine, QfaMachine]


@dataclass(frozen=True, eq=False)
class PostMachine(_ArrayEq):
    """Automaton with postselection on ``post_accept | post_reject`` after ``$``.

    The base machine's own accept set is ignored.
    """

    base: Base
    post_accept: frozenset[int] = frozenset()
    post_reject: frozenset[int] = frozenset()

    def __post_init__(self):
        if not isinstance(self.base, (PfaMachine, QfaMachine)):
            raise TypeError("postselection base must be a PfaMachine or QfaMachine")
        if self.base.accept:
            object.__setattr__(self, "base", self.base.with_accept(()))
        n = self.base.states
        pa = _index_set(n, self.post_accept, "postaccept")
        pr = _index_set(n, self.post_reject, "postreject")
        _check_disjoint(postaccept=pa, postreject=pr)
        object.__setattr__(self, "post_accept", pa)
        object.__setattr__(self, "post_reject", pr)

    @property
    def states(self) -> int:
        return self.base.states

    @property
    def alphabet(self) -> tuple[str, ...]:
        return self.base.alphabet

    @property
    def post_states(self) -> frozenset[int]:
        return self.post_accept | self.post_reject

    @property
    def exact(self) -> bool:
        return isinstance(self.base, PfaMachine)


class Tau(Enum):
    ACCEPT = "A"
    REJECT = "R"


@dataclass(frozen=True, eq=False)
class LatvianPostMachine(_ArrayEq):
    """Postselection machine that decides by ``tau`` when postselection mass is zero."""

    post: PostMachine
    tau: Tau = Tau.REJECT

    def __post_init__(self):
        object.__setattr__(self, "tau", Tau(self.tau))

    @property
    def states(self) -> int:
        return self.post.states

    @property
    def alphabet(self) -> tuple[str, ...]:
        return self.post.alphabet


Machine = Union[
    PfaMachine, QfaMachine, KwqfaMachine, RestartPfa, RestartQfa, PostMachine, LatvianPostMachine
]


class JudgmentMode(Enum):
    STRICT = "strict"
    NONSTRICT = "nonstrict"
    BOUNDED = "bounded"
    ZERO = "zero"
    CUTPOINT_ZERO = "cutpoint-zero"


@dataclass(frozen=True)
class RecognitionJudgment:
    mode: JudgmentMode
    value: Fraction = Fraction(0)

    def __post_init__(self):
        mode = JudgmentMode(self.mode)
        object.__setattr__(self, "mode", mode)
        value = Fraction(self.value)
        if mode is JudgmentMode.BOUNDED and not 0 <= value < Fraction(1, 2):
            raise PreconditionError(f"bounded error needs 0 <= epsilon < 1/2, got {value}")
        if mode in (JudgmentMode.ZERO, JudgmentMode.CUTPOINT_ZERO):
            value = Fraction(0)
        object.__setattr__(self, "value", value)

    @classmethod
    def strict(cls, cutpoint) -> "RecognitionJudgment":
        return cls(JudgmentMode.STRICT, cutpoint)

    @classmethod
    def nonstrict(cls, cutpoint) -> "RecognitionJudgment":
        return cls(JudgmentMode.NONSTRICT, cutpoint)

    @classmethod
    def bounded(cls, epsilon) -> "RecognitionJudgment":
        return cls(JudgmentMode.BOUNDED, epsilon)

    @classmethod
    def zero_error(cls) -> "RecognitionJudgment":
        return cls(JudgmentMode.ZERO)

    @classmethod
    def cutpoint_zero(cls) -> "RecognitionJudgment":
        return cls(JudgmentMode.CUTPOINT_ZERO)


def pfa_from_function(states: int, alphabet, step) -> dict[str, np.ndarray]:
    """Build transition matrices from ``step(symbol, state) -> {target: prob}`` (1-based)."""
    out = {}
    for sym in tape_symbols(check_alphabet(alphabet)):
        m = numkit.zeros(states, states)
        for j in range(1, states + 1):
            for i, p in step(sym, j).items():
                m[i - 1, j - 1] += Fraction(p)
        out[sym] = m
    return out


def is_exact(m: Machine) -> bool:
    """True for machines whose arithmetic is exact rational."""
    if isinstance(m, PfaMachine):
        return True
    if isinstance(m, RestartPfa):
        return True
    if isinstance(m, PostMachine):
        return m.exact
    if isinstance(m, LatvianPostMachine):
        return m.post.exact
    return False
