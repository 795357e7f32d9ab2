"""Worst errors of union and intersection of bounded-error postselection machines.

    python3 scripts/closure_report.py --max-len 6
"""
import argparse
from fractions import Fraction

from postfa import dfa, semantics, transforms, zoo


def operands():
    leq = zoo.leq_post()
    ab = zoo.dfa_to_zero_error_post(dfa.ab_star())
    return {
        "eq": (leq, zoo.in_leq),
        "not-eq": (transforms.post_complement(leq), lambda w: not zoo.in_leq(w)),
        "eqeq-bar": (zoo.build_leqeq(), zoo.in_leqeq),
        "ab-star": (ab, lambda w: zoo.language("regex:(ab)*")(w)),
    }


def worst(m, member, max_len):
    err = Fraction(0)
    for w, v in semantics.iter_verdicts(m, max_len):
        err = max(err, v.f_reject if member(w) else v.f_accept)
    return err


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--max-len", type=int, default=6)
    args = ap.parse_args()
    ops = operands()
    names = sorted(ops)
    print(f"{'left':9} {'right':9} {'union':>9} {'intersection':>13}")
    for i, a in enumerate(names):
        for b in names[i + 1:]:
            (m1, l1), (m2, l2) = ops[a], ops[b]
            u = worst(transforms.post_union(m1, m2), lambda w: l1(w) or l2(w), args.max_len)
            n = worst(transforms.post_intersection(m1, m2), lambda w: l1(w) and l2(w), args.max_len)
            print(f"{a:9} {b:9} {float(u):9.5f} {float(n):13.5f}")


if __name__ == "__main__":
    main()
