"""Command-line front end: ``postfa <verb> ...``.

Reports go to stdout, diagnostics to stderr. Exit status is 0 on success,
1 when a check fails and 2 on usage or input errors.
"""
from __future__ import annotations

import argparse
import re
import sys
from fractions import Fraction

from . import acceptance, montecarlo, semantics, transforms, zoo
from .errors import DivergenceError, MachineFormatError
from .fileformat import emit_linearized, emit_machine, parse_machine
from .models import (
    JudgmentMode,
    KwqfaMachine,
    LatvianPostMachine,
    PostMachine,
    RecognitionJudgment,
    RestartPfa,
    RestartQfa,
)

EXIT_OK, EXIT_CHECK, EXIT_USAGE = 0, 1, 2

CONVERSIONS = (
    "post", "restart", "defer", "kwqfa-restart", "qfa-restart", "linearized",
    "complement", "union", "intersection", "amplify:<k>", "cutpoint",
    "cutpoint-zero[:complement]", "latvian:<nqal|conqal>", "latvian-to-post",
)


class UsageError(Exception):
    """Bad command-line input; reported with exit status 2."""


# ---------------------------------------------------------------- helpers

_RATIONAL_RE = re.compile(r"^-?\d+(/\d+)?$")


def rational(text: str) -> Fraction:
    """``p/q`` or an integer; decimals are refused so comparisons stay exact."""
    if not _RATIONAL_RE.match(text.strip()):
        raise argparse.ArgumentTypeError(f"expected a rational p/q, got {text!r}")
    try:
        return Fraction(text.strip())
    except ZeroDivisionError:
        raise argparse.ArgumentTypeError(f"zero denominator in {text!r}") from None


def _read_machine(path: str):
    try:
        if path == "-":
            return parse_machine(sys.stdin.read())
        with open(path, encoding="utf-8") as fh:
            return parse_machine(fh.read())
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None
    except MachineFormatError as exc:
        raise UsageError(f"{path}: {exc}") from None


def _write(text: str, out: str | None) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
        return
    with open(out, "w", encoding="utf-8") as fh:
        fh.write(text)


def fmt(x) -> str:
    if isinstance(x, Fraction):
        return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"
    if isinstance(x, bool):
        return "yes" if x else "no"
    if isinstance(x, float):
        return f"{x:.12g}"
    return str(x)


def table(rows, tsv: bool) -> str:
    rows = [tuple(fmt(c) for c in r) for r in rows]
    if tsv:
        return "".join("\t".join(r) + "\n" for r in rows)
    width = max(len(r[0]) for r in rows)
    return "".join(f"{r[0].ljust(width)} = {'  '.join(r[1:])}\n" for r in rows)


def columns(rows) -> str:
    """Left-aligned columns, two spaces apart."""
    rows = [[fmt(c) for c in r] for r in rows]
    widths = [max(len(r[i]) for r in rows) for i in range(len(rows[0]))]
    return "".join("  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() + "\n" for r in rows)


def _is_restart(m) -> bool:
    return isinstance(m, (RestartPfa, RestartQfa)) or (isinstance(m, KwqfaMachine) and bool(m.restart))


# ---------------------------------------------------------------- verbs

def cmd_eval(args) -> int:
    m = _read_machine(args.machine)
    v = semantics.evaluate(m, args.word)
    rows = []
    if v.rounds is not None:
        rows += [("p^a", v.rounds.p_accept), ("p^r", v.rounds.p_reject)]
    rows += [("f^a", v.f_accept), ("f^r", v.f_reject), ("valid", v.valid)]
    if _is_restart(m):
        rows.append(("expected steps", semantics.expected_runtime(v.rounds.total, semantics.round_steps(args.word))))
    sys.stdout.write(table(rows, args.tsv))
    return EXIT_OK


def _judgment(args) -> RecognitionJudgment:
    mode = JudgmentMode(args.mode)
    if mode in (JudgmentMode.STRICT, JudgmentMode.NONSTRICT):
        if args.cutpoint is None:
            raise UsageError(f"--mode {args.mode} needs --lambda")
        return RecognitionJudgment(mode, args.cutpoint)
    if mode is JudgmentMode.BOUNDED:
        if args.epsilon is None:
            raise UsageError("--mode bounded needs --epsilon")
        return RecognitionJudgment.bounded(args.epsilon)
    if mode is JudgmentMode.ZERO:
        return RecognitionJudgment.zero_error()
    return RecognitionJudgment.cutpoint_zero()


def cmd_classify(args) -> int:
    m = _read_machine(args.machine)
    try:
        lang = zoo.language(args.lang)
    except (ValueError, re.error) as exc:
        raise UsageError(str(exc)) from None
    report = semantics.check_recognition(m, lang, _judgment(args), args.max_len)
    out = [report.summary() + "\n"]
    if report.counterexamples:
        rows = [("word", "member", "f^a", "f^r", "reason")]
        rows += [(repr(c.word), c.member, c.f_accept, c.f_reject, c.reason) for c in report.counterexamples[: args.show]]
        out.append(table(rows, True) if args.tsv else columns(rows))
    if report.criterion_mismatches:
        out.append("ratio-criterion mismatches: " + " ".join(repr(w) for w in report.criterion_mismatches[: args.show]) + "\n")
    sys.stdout.write("".join(out))
    return EXIT_OK if report.passed else EXIT_CHECK


def _convert(m, target: str, other):
    if target == "post":
        return transforms.restart_to_post(m)
    if target == "restart":
        return transforms.post_to_restart(_need(m, PostMachine, target))
    if target == "defer":
        return transforms.defer_halting(_need(m, RestartPfa, target))
    if target == "kwqfa-restart":
        compiled = transforms.qfa_restart_to_kwqfa_restart(_need(m, RestartQfa, target))
        print(f"scale l = {compiled.scale:.17g}", file=sys.stderr)
        return compiled.machine
    if target == "qfa-restart":
        return transforms.kwqfa_restart_to_qfa_restart(_need(m, KwqfaMachine, target))
    if target == "linearized":
        return transforms.linearize(_need(m, RestartQfa, target))
    if target == "complement":
        return transforms.post_complement(_need(m, PostMachine, target))
    if target in ("union", "intersection"):
        if other is None:
            raise UsageError(f"--to {target} needs --with <machine>")
        op = transforms.post_union if target == "union" else transforms.post_intersection
        return op(_need(m, PostMachine, target), _need(other, PostMachine, target))
    if target.startswith("amplify:"):
        try:
            k = int(target.split(":", 1)[1])
        except ValueError:
            raise UsageError(f"bad amplification count in {target!r}") from None
        if k < 1:
            raise UsageError("amplification count must be at least 1")
        return transforms.amplify(_need(m, PostMachine, target), k)
    if target == "cutpoint":
        return transforms.post_to_cutpoint(_need(m, PostMachine, target))
    if target in ("cutpoint-zero", "cutpoint-zero:complement"):
        side = transforms.Side.COMPLEMENT if target.endswith("complement") else transforms.Side.LANGUAGE
        return transforms.zero_error_post_to_cutpoint_zero(_need(m, PostMachine, target), side)[0]
    if target in ("latvian:nqal", "latvian:conqal"):
        return transforms.cutpoint_zero_to_latvian(m, target.split(":")[1])
    if target == "latvian-to-post":
        return transforms.latvian_to_post(_need(m, LatvianPostMachine, target))
    raise UsageError(f"unknown conversion {target!r}; choose from {', '.join(CONVERSIONS)}")


def _need(m, kind, target):
    if not isinstance(m, kind):
        raise UsageError(f"--to {target} needs a {kind.__name__}, got {type(m).__name__}")
    return m


def cmd_convert(args) -> int:
    m = _read_machine(args.machine)
    other = _read_machine(args.other) if args.other else None
    out = _convert(m, args.to, other)
    text = emit_linearized(out) if isinstance(out, transforms.LinearizedSystem) else emit_machine(out)
    _write(text, args.output)
    return EXIT_OK


def cmd_verify(args) -> int:
    numbers = args.only or sorted(acceptance.CHECKS)
    unknown = [k for k in numbers if k not in acceptance.CHECKS]
    if unknown:
        raise UsageError(f"unknown check numbers {unknown}; valid are 1-{len(acceptance.CHECKS)}")
    ok = True
    for k in numbers:
        res = acceptance.CHECKS[k]()
        ok &= res.passed
        if args.tsv:
            sys.stdout.write(f"{res.number}\t{'PASS' if res.passed else 'FAIL'}\t{res.title}\n")
        else:
            sys.stdout.write(res.line() + "\n")
            if args.verbose:
                sys.stdout.write("".join(f"    {d}\n" for d in res.details))
    return EXIT_OK if ok else EXIT_CHECK


def cmd_zoo(args) -> int:
    if args.name is None or args.name == "list":
        sys.stdout.write("".join(f"{k}\n" for k in zoo.ZOO))
        return EXIT_OK
    if args.name not in zoo.ZOO:
        raise UsageError(f"unknown zoo machine {args.name!r}; choose from {', '.join(zoo.ZOO)}")
    eps = args.epsilon if args.epsilon is not None else zoo.ZOO_DEFAULT_EPSILON[args.name]
    _write(emit_machine(zoo.ZOO[args.name](eps)), args.output)
    return EXIT_OK


def cmd_mc(args) -> int:
    m = _read_machine(args.machine)
    if args.trials < 1:
        raise UsageError("--trials must be at least 1")
    try:
        cmp = montecarlo.estimate(m, args.word, args.trials, args.seed, args.round_cap)
    except DivergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CHECK
    rows = [(name, got, want) for name, got, want in cmp.rows()]
    rows.insert(0, ("quantity", "sampled", "exact"))
    if args.tsv:
        sys.stdout.write(table(rows, True))
    else:
        width = max(len(r[0]) for r in rows)
        sys.stdout.write("".join(f"{r[0].ljust(width)}  {r[1]:>14}  {r[2]:>14}\n" for r in rows))
    return EXIT_OK


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tsv", action="store_true", help="tab-separated output")

    p = argparse.ArgumentParser(prog="postfa", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="verb", required=True)

    e = sub.add_parser("eval", parents=[common], help="evaluate a machine on one word")
    e.add_argument("machine", help="machine file, or - for stdin")
    e.add_argument("word", nargs="?", default="", help="input word (default: empty)")
    e.set_defaults(func=cmd_eval)

    c = sub.add_parser("classify", parents=[common], help="check recognition of a language up to a length")
    c.add_argument("machine")
    c.add_argument("--lang", required=True, help="eq, pal, eqeq-bar, all, none or regex:<pattern>")
    c.add_argument("--mode", required=True, choices=[mo.value for mo in JudgmentMode])
    c.add_argument("--lambda", dest="cutpoint", type=rational, help="cutpoint p/q")
    c.add_argument("--epsilon", type=rational, help="error bound p/q")
    c.add_argument("--max-len", type=int, default=8)
    c.add_argument("--show", type=int, default=20, help="counterexamples to list")
    c.set_defaults(func=cmd_classify)

    v = sub.add_parser("convert", parents=[common], help="apply a construction and emit the result")
    v.add_argument("machine")
    v.add_argument("--to", required=True, help=" | ".join(CONVERSIONS))
    v.add_argument("--with", dest="other", help="second operand for union and intersection")
    v.add_argument("-o", "--output", help="output file (default: stdout)")
    v.set_defaults(func=cmd_convert)

    f = sub.add_parser("verify", parents=[common], help="run the acceptance checks")
    f.add_argument("--only", type=int, nargs="+", help="check numbers to run")
    f.add_argument("-v", "--verbose", action="store_true")
    f.set_defaults(func=cmd_verify)

    z = sub.add_parser("zoo", parents=[common], help="emit a witness machine")
    z.add_argument("name", nargs="?", help="machine name, or list")
    z.add_argument("--epsilon", type=rational)
    z.add_argument("-o", "--output")
    z.set_defaults(func=cmd_zoo)

    m = sub.add_parser("mc", parents=[common], help="Monte Carlo simulation of a restart machine")
    m.add_argument("machine")
    m.add_argument("word", nargs="?", default="")
    m.add_argument("--trials", type=int, default=10_000)
    m.add_argument("--seed", type=int, default=0)
    m.add_argument("--round-cap", type=int, default=montecarlo.DEFAULT_ROUND_CAP)
    m.set_defaults(func=cmd_mc)
    return p


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, TypeError, ArithmeticError) as exc:
        # domain errors: foreign symbols, failed preconditions, mismatched operands
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def main() -> None:
    sys.exit(run())
