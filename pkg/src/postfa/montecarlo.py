"""Sampling simulator for restart machines.

Trials are simulated in lockstep with numpy. Every random draw is a pure
function of ``(seed, trial, counter)`` (a splitmix64 hash), so a trial's
trajectory does not depend on which other trials run alongside it.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import semantics
from .errors import DivergenceError, PreconditionError
from .models import HaltTiming, KwqfaMachine, PostMachine, RestartPfa, RestartQfa
from .semantics import check_word, tape
from .transforms import post_to_restart

DEFAULT_ROUND_CAP = 10**6
LOW_CONFIDENCE_TRIALS = 30

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_MASK64 = (1 << 64) - 1

# roles for sampled PFA states
_CONTINUE, _ACCEPT, _REJECT, _RESTART = 0, 1, 2, 3


def _mix(x: np.ndarray) -> np.ndarray:
    x = x ^ (x >> np.uint64(30))
    x = x * _M1
    x = x ^ (x >> np.uint64(27))
    x = x * _M2
    return x ^ (x >> np.uint64(31))


def trial_keys(seed: int, trials: np.ndarray) -> np.ndarray:
    """Per-trial stream keys derived from ``(seed, trial)``."""
    with np.errstate(over="ignore"):
        t = np.asarray(trials, dtype=np.uint64)
        return _mix(np.uint64(seed & _MASK64) ^ _mix(t + _GOLDEN))


def draws(keys: np.ndarray, counters) -> np.ndarray:
    """Uniform draws in [0, 1) for each trial key at the given counters."""
    with np.errstate(over="ignore"):
        bits = _mix(keys + np.asarray(counters, dtype=np.uint64) * _GOLDEN)
    return (bits >> np.uint64(11)).astype(np.float64) * 2.0**-53


def uniforms(seed: int, trials, counters) -> np.ndarray:
    """Uniform draws keyed by ``(seed, trial, counter)``."""
    return draws(trial_keys(seed, trials), counters)


@dataclass(frozen=True)
class TrialStats:
    trials: int
    accepts: int
    rejects: int
    total_steps: int
    seed: int

    def __post_init__(self):
        if self.accepts + self.rejects != self.trials:
            raise ValueError("every trial must end in accept or reject")

    @property
    def accept_rate(self) -> float:
        return self.accepts / self.trials

    @property
    def mean_steps(self) -> float:
        return self.total_steps / self.trials


@dataclass(frozen=True)
class Comparison:
    """Empirical statistics next to their exact counterparts."""

    stats: TrialStats
    exact_f_accept: float
    exact_mean_steps: float
    low_confidence: bool

    @property
    def accept_error(self) -> float:
        return abs(self.stats.accept_rate - self.exact_f_accept)

    @property
    def accept_sigma(self) -> float:
        f = self.exact_f_accept
        return math.sqrt(f * (1 - f) / self.stats.trials)

    @property
    def steps_relative_error(self) -> float:
        return abs(self.stats.mean_steps - self.exact_mean_steps) / self.exact_mean_steps

    def within(self, sigmas: float = 4.0) -> bool:
        """Accept frequency inside the binomial ``sigmas``-interval around the exact value."""
        return self.accept_error <= sigmas * self.accept_sigma + 1e-12

    def rows(self) -> list[tuple[str, str, str]]:
        s = self.stats
        return [
            ("trials", str(s.trials), ""),
            ("accept frequency", f"{s.accept_rate:.6f}", f"{self.exact_f_accept:.6f}"),
            ("mean steps", f"{s.mean_steps:.3f}", f"{self.exact_mean_steps:.3f}"),
            ("low confidence", "yes" if self.low_confidence else "no", ""),
        ]


# ---------------------------------------------------------------- per-kind samplers

class _PfaSampler:
    def __init__(self, m: RestartPfa, w: str):
        pfa = m.pfa
        self.symbols = tape(w)
        self.per_step = m.halt is HaltTiming.PER_STEP
        role = np.zeros(pfa.states, dtype=np.int8)
        for q in pfa.accept:
            role[q - 1] = _ACCEPT
        for q in m.reject:
            role[q - 1] = _REJECT
        for q in m.restart:
            role[q - 1] = _RESTART
        self.role = role
        # per symbol: targets[j, r] and cumulative thresholds[j, r] over the support of column j
        self.tables = {}
        for sym in set(self.symbols):
            cols = pfa.columns[sym]
            width = max(len(c) for c in cols)
            targets = np.zeros((pfa.states, width), dtype=np.intp)
            cum = np.ones((pfa.states, width), dtype=np.float64)
            for j, col in enumerate(cols):
                acc = 0.0
                for r, (i, p) in enumerate(col):
                    acc += float(p)
                    targets[j, r] = i
                    cum[j, r] = acc
                targets[j, len(col):] = col[-1][0]
                cum[j, len(col) - 1:] = 2.0
            self.tables[sym] = (targets, cum[:, :-1])
        self.slots = len(self.symbols) + 1

    def round(self, keys, rounds):
        """One round for each trial; returns (role reached, steps used)."""
        k = len(keys)
        state = np.zeros(k, dtype=np.intp)
        base = rounds * np.uint64(self.slots)
        if not self.per_step:
            # nothing halts before the last symbol, so every trial walks the whole tape
            for t, sym in enumerate(self.symbols):
                state = self._move(sym, state, draws(keys, base + np.uint64(t)))
            outcome = self.role[state]
            outcome[outcome == _CONTINUE] = _RESTART
            return outcome, np.full(k, len(self.symbols), dtype=np.int64)
        outcome = np.full(k, _CONTINUE, dtype=np.int8)
        steps = np.zeros(k, dtype=np.int64)
        idx = np.arange(k)
        for t, sym in enumerate(self.symbols):
            sub = self._move(sym, state[idx], draws(keys[idx], base[idx] + np.uint64(t)))
            state[idx] = sub
            steps[idx] += 1
            r = self.role[sub]
            halted = r != _CONTINUE
            outcome[idx[halted]] = r[halted]
            idx = idx[~halted]
        outcome[outcome == _CONTINUE] = _RESTART
        return outcome, steps

    def _move(self, sym, state, u):
        targets, cum = self.tables[sym]
        if cum.shape[1] == 0:
            return targets[state, 0]
        slot = (u[:, None] >= cum[state]).sum(axis=1)
        return targets[state, slot]


class _KwqfaSampler:
    """Uses the exact per-step outcome masses; the surviving branch is the same for every trial."""

    def __init__(self, m: KwqfaMachine, w: str):
        masses = semantics.kwqfa_step_masses(m, w)
        self.conditional = []
        alive = 1.0
        for acc, rej, res, remaining in masses:
            if alive <= 0:
                self.conditional.append((0.0, 0.0, 1.0))
                continue
            self.conditional.append((acc / alive, rej / alive, res / alive))
            alive = remaining
        self.slots = len(masses) + 1

    def round(self, keys, rounds):
        k = len(keys)
        outcome = np.full(k, _CONTINUE, dtype=np.int8)
        steps = np.zeros(k, dtype=np.int64)
        live = np.ones(k, dtype=bool)
        base = rounds * np.uint64(self.slots)
        for t, (pa, pr, pres) in enumerate(self.conditional):
            idx = np.nonzero(live)[0]
            if len(idx) == 0:
                break
            u = draws(keys[idx], base[idx] + np.uint64(t))
            steps[idx] += 1
            r = np.full(len(idx), _CONTINUE, dtype=np.int8)
            r[u < pa + pr + pres] = _RESTART
            r[u < pa + pr] = _REJECT
            r[u < pa] = _ACCEPT
            halted = r != _CONTINUE
            outcome[idx[halted]] = r[halted]
            live[idx[halted]] = False
        outcome[outcome == _CONTINUE] = _RESTART
        return outcome, steps


class _QfaSampler:
    """Kraus trajectory sampling followed by the end-of-round measurement."""

    def __init__(self, m: RestartQfa, w: str):
        self.symbols = tape(w)
        self.kraus = {s: np.asarray(m.qfa.stacked_kraus[s]) for s in set(self.symbols)}
        n = m.states
        self.n = n
        self.accept = np.array(sorted(q - 1 for q in m.accept), dtype=np.intp)
        self.reject = np.array(sorted(q - 1 for q in m.reject), dtype=np.intp)
        self.slots = len(self.symbols) + 1

    def round(self, keys, rounds):
        k = len(keys)
        psi = np.zeros((k, self.n), dtype=np.complex128)
        psi[:, 0] = 1.0
        base = rounds * np.uint64(self.slots)
        for t, sym in enumerate(self.symbols):
            ops = self.kraus[sym]
            branches = np.einsum("kij,tj->tki", ops, psi)
            weights = np.einsum("tki,tki->tk", branches, branches.conj()).real
            weights /= weights.sum(axis=1, keepdims=True)
            u = draws(keys, base + np.uint64(t))
            choice = np.minimum((u[:, None] >= np.cumsum(weights, axis=1)).sum(axis=1), len(ops) - 1)
            psi = branches[np.arange(k), choice]
            psi /= np.linalg.norm(psi, axis=1, keepdims=True)
        prob = np.abs(psi) ** 2
        pa = prob[:, self.accept].sum(axis=1)
        pr = prob[:, self.reject].sum(axis=1)
        u = draws(keys, base + np.uint64(len(self.symbols)))
        outcome = np.full(k, _RESTART, dtype=np.int8)
        outcome[u < pa + pr] = _REJECT
        outcome[u < pa] = _ACCEPT
        return outcome, np.full(k, len(self.symbols), dtype=np.int64)


def _as_restart(m):
    return post_to_restart(m) if isinstance(m, PostMachine) else m


def _sampler(m, w):
    check_word(m.alphabet, w)
    m = _as_restart(m)
    if isinstance(m, RestartPfa):
        return _PfaSampler(m, w)
    if isinstance(m, RestartQfa):
        return _QfaSampler(m, w)
    if isinstance(m, KwqfaMachine):
        return _KwqfaSampler(m, w)
    raise PreconditionError(f"sampling needs a restart machine, got {type(m).__name__}")


def _simulate(m, w, trial_ids: np.ndarray, seed: int, round_cap: int):
    sampler = _sampler(m, w)
    k = len(trial_ids)
    final = np.full(k, _CONTINUE, dtype=np.int8)
    steps = np.zeros(k, dtype=np.int64)
    rounds = np.zeros(k, dtype=np.uint64)
    active = np.arange(k)
    keys = trial_keys(seed, trial_ids)
    while len(active):
        over = rounds[active] >= round_cap
        if over.any():
            bad = int(trial_ids[active[np.argmax(over)]])
            raise DivergenceError(f"trial {bad} exceeded {round_cap} rounds", trial=bad)
        outcome, used = sampler.round(keys[active], rounds[active])
        steps[active] += used
        rounds[active] += np.uint64(1)
        done = outcome != _RESTART
        final[active[done]] = outcome[done]
        active = active[~done]
    return final, steps


def sample_run(m, w: str, seed: int = 0, trial: int = 0, round_cap: int = DEFAULT_ROUND_CAP) -> tuple[str, int]:
    """Run one trial to completion; returns ``("accept" | "reject", steps)``."""
    final, steps = _simulate(m, w, np.array([trial]), seed, round_cap)
    return ("accept" if final[0] == _ACCEPT else "reject"), int(steps[0])


def estimate(
    m,
    w: str,
    trials: int,
    seed: int = 0,
    round_cap: int = DEFAULT_ROUND_CAP,
    chunk: int = 200_000,
) -> Comparison:
    """Run ``trials`` independent trials and compare against the exact values."""
    if trials < 1:
        raise PreconditionError("trials must be at least 1")
    accepts = rejects = total = 0
    for start in range(0, trials, chunk):
        ids = np.arange(start, min(trials, start + chunk))
        final, steps = _simulate(m, w, ids, seed, round_cap)
        accepts += int((final == _ACCEPT).sum())
        rejects += int((final == _REJECT).sum())
        total += int(steps.sum())
    stats = TrialStats(trials, accepts, rejects, total, seed)
    f_accept, runtime = exact_reference(m, w)
    return Comparison(stats, float(f_accept), float(runtime), trials < LOW_CONFIDENCE_TRIALS)


def exact_reference(m, w: str) -> tuple[Fraction | float, Fraction | float]:
    """Exact overall acceptance and expected steps for ``m`` on ``w``."""
    m = _as_restart(m)
    r = semantics.restart_round(m, w)
    length = semantics.expected_round_length(m, w)
    return semantics.restart_overall(r).f_accept, semantics.expected_runtime(r.total, length)
