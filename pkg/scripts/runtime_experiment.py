"""Monte Carlo runtime of the L_eq restart machine against the exact s/p.

    python3 scripts/runtime_experiment.py --trials 20000
"""
import argparse

from postfa import montecarlo, zoo


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--trials", type=int, default=20_000)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--words", nargs="+", default=["", "a", "ab", "ba", "aab"])
    args = ap.parse_args()

    m = zoo.build_leq()
    print(f"{'word':6} {'exact f_a':>10} {'sampled':>10} {'exact steps':>12} {'sampled':>12} {'rel err':>8}")
    for w in args.words:
        c = montecarlo.estimate(m, w, args.trials, seed=args.seed)
        print(f"{w or '(empty)':6} {c.exact_f_accept:10.4f} {c.stats.accept_rate:10.4f} "
              f"{c.exact_mean_steps:12.1f} {c.stats.mean_steps:12.1f} {c.steps_relative_error:8.2%}")


if __name__ == "__main__":
    main()
