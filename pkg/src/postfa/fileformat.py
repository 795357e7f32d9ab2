"""Line-oriented text format for machines.

::

    kind: pfa-restart
    states: 3
    alphabet: a b
    accept: 2
    reject: 3
    restart:
    halt: at-end
    matrix cent:
      0 0 0
      ...

Rational entries are written ``p/q`` (or as integers), complex entries as
``(re,im)``. Quantum kinds carry a 1-based Kraus index after the symbol.
``#`` starts a comment.
"""
from __future__ import annotations

import re
from fractions import Fraction
from typing import Iterable

import numpy as np

from .errors import InvariantError, MachineFormatError
from .models import (
    CENT,
    DOLLAR,
    HaltTiming,
    KwqfaMachine,
    LatvianPostMachine,
    Machine,
    PfaMachine,
    PostMachine,
    QfaMachine,
    RestartPfa,
    RestartQfa,
    Tau,
    tape_symbols,
)

KINDS = (
    "pfa", "qfa", "kwqfa", "pfa-restart", "qfa-restart", "kwqfa-restart",
    "post-pfa", "post-qfa", "lpost-pfa", "lpost-qfa",
)

# Keys each kind carries, in canonical emission order.
_KEYS = {
    "pfa": ("accept",),
    "qfa": ("accept",),
    "kwqfa": ("accept", "reject"),
    "kwqfa-restart": ("accept", "reject", "restart"),
    "pfa-restart": ("accept", "reject", "restart", "halt"),
    "qfa-restart": ("accept", "reject"),
    "post-pfa": ("postaccept", "postreject"),
    "post-qfa": ("postaccept", "postreject"),
    "lpost-pfa": ("postaccept", "postreject", "tau"),
    "lpost-qfa": ("postaccept", "postreject", "tau"),
}
_HEADER = ("kind", "states", "alphabet")
_ALL_KEYS = set(_HEADER) | {k for keys in _KEYS.values() for k in keys}
_MARKER_NAMES = {"cent": CENT, "dollar": DOLLAR}
_COMPLEX_RE = re.compile(r"^\(([^,()]+),([^,()]+)\)$")


def kind_of(m: Machine) -> str:
    if isinstance(m, PfaMachine):
        return "pfa"
    if isinstance(m, QfaMachine):
        return "qfa"
    if isinstance(m, KwqfaMachine):
        return "kwqfa-restart" if m.restart else "kwqfa"
    if isinstance(m, RestartPfa):
        return "pfa-restart"
    if isinstance(m, RestartQfa):
        return "qfa-restart"
    if isinstance(m, PostMachine):
        return "post-pfa" if m.exact else "post-qfa"
    if isinstance(m, LatvianPostMachine):
        return "lpost-pfa" if m.post.exact else "lpost-qfa"
    raise TypeError(f"not a machine: {type(m).__name__}")


def _quantum(kind: str) -> bool:
    return kind in ("qfa", "kwqfa", "kwqfa-restart", "qfa-restart", "post-qfa", "lpost-qfa")


def _kraus_indexed(kind: str) -> bool:
    return kind in ("qfa", "qfa-restart", "post-qfa", "lpost-qfa")


# ---------------------------------------------------------------- parsing

def _parse_rational(tok: str, line: int) -> Fraction:
    try:
        if "/" in tok:
            p, q = tok.split("/")
            return Fraction(int(p), int(q))
        return Fraction(int(tok))
    except (ValueError, ZeroDivisionError):
        raise MachineFormatError(f"bad rational entry {tok!r}", line) from None


def _parse_complex(tok: str, line: int) -> complex:
    m = _COMPLEX_RE.match(tok)
    try:
        if m:
            return complex(float(m.group(1)), float(m.group(2)))
        if "/" in tok:
            return complex(float(_parse_rational(tok, line)))
        return complex(float(tok))
    except ValueError:
        raise MachineFormatError(f"bad complex entry {tok!r}", line) from None


def _parse_indices(value: str, line: int) -> frozenset[int]:
    try:
        return frozenset(int(t) for t in value.split())
    except ValueError:
        raise MachineFormatError(f"bad index list {value!r}", line) from None


def parse_machine(text: str | Iterable[str]) -> Machine:
    """Parse a machine description, checking every model invariant."""
    if not isinstance(text, str):
        text = "".join(text)
    lines = text.splitlines()
    header: dict[str, tuple[str, int]] = {}
    blocks: list[tuple[str, int | None, int, list[tuple[list[str], int]]]] = []
    current = None
    for lineno, raw in enumerate(lines, start=1):
        body = raw.split("#", 1)[0].rstrip()
        if not body.strip():
            continue
        stripped = body.strip()
        if stripped.startswith("matrix"):
            m = re.match(r"^matrix\s+(\S+)(?:\s+(\d+))?\s*:$", stripped)
            if not m:
                raise MachineFormatError(f"malformed matrix header {stripped!r}", lineno)
            sym = _MARKER_NAMES.get(m.group(1), m.group(1))
            idx = int(m.group(2)) if m.group(2) else None
            current = (sym, idx, lineno, [])
            blocks.append(current)
            continue
        if current is not None and body[:1].isspace():
            current[3].append((stripped.split(), lineno))
            continue
        if ":" not in stripped:
            raise MachineFormatError(f"expected 'key: value', got {stripped!r}", lineno)
        current = None
        key, value = (s.strip() for s in stripped.split(":", 1))
        if key not in _ALL_KEYS:
            raise MachineFormatError(f"unknown key {key!r}", lineno)
        if key in header:
            raise MachineFormatError(f"duplicate key {key!r}", lineno)
        header[key] = (value, lineno)

    for key in _HEADER:
        if key not in header:
            raise MachineFormatError(f"missing required key {key!r}")
    kind, kline = header["kind"]
    if kind not in KINDS:
        raise MachineFormatError(f"unknown machine kind {kind!r}", kline)
    allowed = set(_HEADER) | set(_KEYS[kind])
    for key, (_, line) in header.items():
        if key not in allowed:
            raise MachineFormatError(f"key {key!r} is not valid for kind {kind}", line)
    for key in _KEYS[kind]:
        if key not in header:
            raise MachineFormatError(f"kind {kind} requires key {key!r}")
    try:
        n = int(header["states"][0])
    except ValueError:
        raise MachineFormatError("states must be an integer", header["states"][1]) from None
    if n < 1:
        raise MachineFormatError("states must be positive", header["states"][1])
    alphabet = tuple(header["alphabet"][0].split())

    quantum = _quantum(kind)
    mats: dict[str, dict[int, np.ndarray]] = {}
    for sym, idx, line, rows in blocks:
        if _kraus_indexed(kind):
            if idx is None:
                raise MachineFormatError(f"kind {kind} needs a Kraus index on matrix headers", line)
        elif idx is not None:
            raise MachineFormatError(f"kind {kind} takes no Kraus index", line)
        idx = idx or 1
        if len(rows) != n:
            raise MachineFormatError(f"matrix {sym!r} has {len(rows)} rows, expected {n}", line)
        if quantum:
            mat = np.empty((n, n), dtype=np.complex128)
        else:
            mat = np.empty((n, n), dtype=object)
        for r, (toks, tline) in enumerate(rows):
            if len(toks) != n:
                raise MachineFormatError(f"row has {len(toks)} entries, expected {n}", tline)
            for c, tok in enumerate(toks):
                mat[r, c] = _parse_complex(tok, tline) if quantum else _parse_rational(tok, tline)
        slot = mats.setdefault(sym, {})
        if idx in slot:
            raise MachineFormatError(f"duplicate matrix for {sym!r} index {idx}", line)
        slot[idx] = mat

    def ids(key):
        value, line = header[key]
        return _parse_indices(value, line)

    try:
        symbols = tape_symbols(alphabet)
    except InvariantError as exc:
        raise MachineFormatError(str(exc), header["alphabet"][1]) from None
    for sym in mats:
        if sym not in symbols:
            raise MachineFormatError(f"matrix for symbol {sym!r} not in the alphabet")
    for sym in symbols:
        if sym not in mats:
            raise MachineFormatError(f"missing matrix for symbol {sym!r}")
        if sorted(mats[sym]) != list(range(1, len(mats[sym]) + 1)):
            raise MachineFormatError(f"Kraus indices for {sym!r} must be 1..k")

    def single():
        return {s: mats[s][1] for s in symbols}

    def kraus():
        return {s: tuple(mats[s][i] for i in sorted(mats[s])) for s in symbols}

    try:
        if kind == "pfa":
            return PfaMachine(n, alphabet, single(), ids("accept"))
        if kind == "qfa":
            return QfaMachine(n, alphabet, kraus(), ids("accept"))
        if kind in ("kwqfa", "kwqfa-restart"):
            restart = ids("restart") if kind == "kwqfa-restart" else frozenset()
            return KwqfaMachine(n, alphabet, single(), ids("accept"), ids("reject"), restart)
        if kind == "pfa-restart":
            halt_value, hline = header["halt"]
            try:
                halt = HaltTiming(halt_value)
            except ValueError:
                raise MachineFormatError(f"halt must be per-step or at-end, got {halt_value!r}", hline) from None
            base = PfaMachine(n, alphabet, single(), ids("accept"))
            return RestartPfa(base, ids("reject"), ids("restart"), halt)
        if kind == "qfa-restart":
            return RestartQfa(QfaMachine(n, alphabet, kraus(), ids("accept")), ids("reject"))
        base = PfaMachine(n, alphabet, single()) if kind.endswith("pfa") else QfaMachine(n, alphabet, kraus())
        post = PostMachine(base, ids("postaccept"), ids("postreject"))
        if kind.startswith("lpost"):
            tau_value, tline = header["tau"]
            try:
                tau = Tau(tau_value)
            except ValueError:
                raise MachineFormatError(f"tau must be A or R, got {tau_value!r}", tline) from None
            return LatvianPostMachine(post, tau)
        return post
    except InvariantError as exc:
        raise MachineFormatError(f"invariant violation: {exc}") from exc


# ---------------------------------------------------------------- emission

def _fmt_rational(x: Fraction) -> str:
    x = Fraction(x)
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def _fmt_float(x: float) -> str:
    return f"{x:.17g}"


def _fmt_complex(z: complex) -> str:
    return f"({_fmt_float(z.real)},{_fmt_float(z.imag)})"


def _fmt_indices(s) -> str:
    return " ".join(str(i) for i in sorted(s))


def _sym_name(sym: str) -> str:
    return {CENT: "cent", DOLLAR: "dollar"}.get(sym, sym)


def _emit_matrix(lines: list[str], sym: str, idx: int | None, m: np.ndarray, quantum: bool) -> None:
    head = f"matrix {_sym_name(sym)}" + (f" {idx}" if idx is not None else "") + ":"
    lines.append(head)
    fmt = _fmt_complex if quantum else _fmt_rational
    for row in m:
        lines.append("  " + " ".join(fmt(x) for x in row))


def emit_machine(m: Machine) -> str:
    """Canonical text for ``m``; ``parse_machine(emit_machine(m)) == m``."""
    kind = kind_of(m)
    lines = [f"kind: {kind}", f"states: {m.states}", f"alphabet: {' '.join(m.alphabet)}"]
    values = {}
    if isinstance(m, (PfaMachine, QfaMachine)):
        values["accept"] = m.accept
    elif isinstance(m, KwqfaMachine):
        values.update(accept=m.accept, reject=m.reject, restart=m.restart)
    elif isinstance(m, RestartPfa):
        values.update(accept=m.accept, reject=m.reject, restart=m.restart)
        values["halt"] = m.halt.value
    elif isinstance(m, RestartQfa):
        values.update(accept=m.accept, reject=m.reject)
    else:
        post = m.post if isinstance(m, LatvianPostMachine) else m
        values.update(postaccept=post.post_accept, postreject=post.post_reject)
        if isinstance(m, LatvianPostMachine):
            values["tau"] = m.tau.value
    for key in _KEYS[kind]:
        v = values[key]
        text = v if isinstance(v, str) else _fmt_indices(v)
        lines.append(f"{key}: {text}".rstrip())

    quantum = _quantum(kind)
    symbols = tape_symbols(m.alphabet)
    if isinstance(m, PfaMachine):
        data = {s: [m.transitions[s]] for s in symbols}
    elif isinstance(m, QfaMachine):
        data = {s: list(m.kraus[s]) for s in symbols}
    elif isinstance(m, KwqfaMachine):
        data = {s: [m.unitaries[s]] for s in symbols}
    elif isinstance(m, RestartPfa):
        data = {s: [m.pfa.transitions[s]] for s in symbols}
    elif isinstance(m, RestartQfa):
        data = {s: list(m.qfa.kraus[s]) for s in symbols}
    else:
        post = m.post if isinstance(m, LatvianPostMachine) else m
        base = post.base
        if isinstance(base, PfaMachine):
            data = {s: [base.transitions[s]] for s in symbols}
        else:
            data = {s: list(base.kraus[s]) for s in symbols}
    indexed = _kraus_indexed(kind)
    for s in symbols:
        for i, mat in enumerate(data[s], start=1):
            _emit_matrix(lines, s, i if indexed else None, mat, quantum)
    return "\n".join(lines) + "\n"


def load_machine(path) -> Machine:
    with open(path, encoding="utf-8") as fh:
        return parse_machine(fh.read())


def save_machine(m: Machine, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(emit_machine(m))


def emit_linearized(ls) -> str:
    """Text dump of a linearized round system in the matrix syntax above.

    The ``linearized`` kind is an output-only format: the system is not
    a machine and ``parse_machine`` does not read it back.
    """
    lines = [
        "kind: linearized",
        f"states: {ls.dimension}",
        f"alphabet: {' '.join(ls.alphabet)}",
        f"accept: {ls.accept_index}",
        f"reject: {ls.reject_index}",
    ]
    for s in tape_symbols(ls.alphabet):
        _emit_matrix(lines, s, None, ls.matrices[s], True)
    return "\n".join(lines) + "\n"
