"""Copies needed to square an error bound, and the error the tensor power actually reaches on L_eq.

    python3 scripts/amplification_table.py
"""
from fractions import Fraction

from postfa import semantics, transforms, zoo


def worst_error(m, max_len):
    worst = Fraction(0)
    for w, v in semantics.iter_verdicts(m, max_len):
        worst = max(worst, v.f_reject if zoo.in_leq(w) else v.f_accept)
    return worst


def main():
    print(f"{'epsilon':>8} {'target':>8} {'k':>3} {'closed form':>11}")
    for eps in (Fraction(1, 3), Fraction(1, 4), Fraction(1, 5), Fraction(1, 10), Fraction(2, 5)):
        plan = transforms.choose_k(eps)
        print(f"{str(eps):>8} {str(plan.epsilon_out):>8} {plan.k:3d} {plan.closed_form_k:11d}")

    print("\nL_eq, epsilon = 1/4, worst error over strings up to length 6")
    post = zoo.leq_post()
    for k in (1, 2, 3):
        err = worst_error(transforms.amplify(post, k), 6)
        print(f"  k = {k}: {err} ~ {float(err):.5f}")


if __name__ == "__main__":
    main()
