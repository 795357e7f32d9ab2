"""Deterministic automata and subset construction."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping

from .errors import InvariantError


@dataclass(frozen=True)
class Dfa:
    """Complete DFA over 0-based states; ``delta[(state, symbol)] -> state``."""

    states: int
    alphabet: tuple[str, ...]
    delta: Mapping[tuple[int, str], int]
    start: int = 0
    accepting: frozenset[int] = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "alphabet", tuple(self.alphabet))
        object.__setattr__(self, "accepting", frozenset(self.accepting))
        object.__setattr__(self, "delta", dict(self.delta))
        if not 0 <= self.start < self.states:
            raise InvariantError(f"start state {self.start} out of range")
        for q in range(self.states):
            for s in self.alphabet:
                t = self.delta.get((q, s))
                if t is None:
                    raise InvariantError(f"transition function is incomplete at ({q}, {s!r})")
                if not 0 <= t < self.states:
                    raise InvariantError(f"transition ({q}, {s!r}) -> {t} out of range")

    def run(self, w: str) -> int:
        q = self.start
        for c in w:
            q = self.delta[(q, c)]
        return q

    def accepts(self, w: str) -> bool:
        return self.run(w) in self.accepting

    def __call__(self, w: str) -> bool:
        return self.accepts(w)


def determinize(alphabet: Iterable[str], start: frozenset, successors, accepting) -> Dfa:
    """Subset construction from an initial state set.

    ``successors(subset, symbol)`` gives the successor subset and
    ``accepting(subset)`` decides acceptance of a subset. Only reachable
    subsets become DFA states; the start subset is state 0.
    """
    alphabet = tuple(alphabet)
    index = {start: 0}
    order = [start]
    delta = {}
    i = 0
    while i < len(order):
        subset = order[i]
        for s in alphabet:
            nxt = frozenset(successors(subset, s))
            if nxt not in index:
                index[nxt] = len(order)
                order.append(nxt)
            delta[(i, s)] = index[nxt]
        i += 1
    acc = frozenset(k for k, subset in enumerate(order) if accepting(subset))
    return Dfa(len(order), alphabet, delta, 0, acc)


def complement(d: Dfa) -> Dfa:
    return Dfa(d.states, d.alphabet, d.delta, d.start, frozenset(range(d.states)) - d.accepting)


def ab_star() -> Dfa:
    """``(ab)*`` over ``{a, b}``, with a dead state."""
    delta = {(0, "a"): 1, (0, "b"): 2, (1, "a"): 2, (1, "b"): 0, (2, "a"): 2, (2, "b"): 2}
    return Dfa(3, ("a", "b"), delta, 0, {0})
