import math

import numpy as np
import pytest

from postfa import fixtures, montecarlo as mc, zoo
from postfa.errors import DivergenceError, PreconditionError
from postfa.models import HaltTiming

MASK = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15


def splitmix_reference(x: int) -> int:
    """Scalar splitmix64 finalizer in plain integers."""
    x ^= x >> 30
    x = (x * 0xBF58476D1CE4E5B9) & MASK
    x ^= x >> 27
    x = (x * 0x94D049BB133111EB) & MASK
    return x ^ (x >> 31)


def uniform_reference(seed, trial, counter):
    key = splitmix_reference(seed ^ splitmix_reference((trial + GOLDEN) & MASK))
    return (splitmix_reference((key + counter * GOLDEN) & MASK) >> 11) * 2.0**-53


def test_uniform_stream_matches_scalar_reference():
    trials = np.array([0, 1, 2, 1000, 2**40])
    for seed in (0, 7, 20240611):
        for counter in (0, 1, 99):
            got = mc.uniforms(seed, trials, counter)
            want = [uniform_reference(seed, int(t), counter) for t in trials]
            assert got.tolist() == want


def test_uniforms_in_unit_interval():
    u = mc.uniforms(3, np.arange(10_000), 5)
    assert u.min() >= 0 and u.max() < 1
    assert abs(u.mean() - 0.5) < 0.02


def test_sample_run_is_deterministic(leq):
    a = [mc.sample_run(leq, "ab", seed=5, trial=t) for t in range(5)]
    b = [mc.sample_run(leq, "ab", seed=5, trial=t) for t in range(5)]
    assert a == b


def test_trial_results_do_not_depend_on_chunking():
    m = fixtures.split_restart()
    one = mc.estimate(m, "ab", 500, seed=9)
    many = mc.estimate(m, "ab", 500, seed=9, chunk=37)
    assert one.stats == many.stats


def test_half_accept_mean_steps_is_geometric():
    m = fixtures.half_accept_restart()
    w = "abab"
    c = mc.estimate(m, w, 20_000, seed=1)
    assert c.exact_mean_steps == 2 * (len(w) + 2)
    assert c.steps_relative_error < 0.03
    assert c.within()


@pytest.mark.parametrize("name", ["split", "early-halting", "random-rational", "embedded-split", "random-qfa"])
def test_small_fixtures_hit_exact_acceptance(restart_machines, name):
    c = mc.estimate(restart_machines[name], "ab", 4000, seed=2)
    assert c.within(), c.rows()
    assert c.steps_relative_error < 0.1


def test_per_step_halting_cuts_rounds_short():
    # on "ab": halt after 2 steps with 1/3, otherwise accept after the full 4
    c = mc.estimate(fixtures.early_halting_restart(), "ab", 4000, seed=2)
    assert c.exact_mean_steps == pytest.approx(10 / 3)
    assert c.stats.mean_steps == pytest.approx(10 / 3, rel=0.03)


def test_kwqfa_mean_steps():
    c = mc.estimate(fixtures.random_kwqfa(2, 5), "ba", 4000, seed=8)
    assert c.within(), c.rows()
    assert c.steps_relative_error < 0.05


def test_kwqfa_sampling():
    m = fixtures.random_kwqfa(5, 4)
    c = mc.estimate(m, "ab", 4000, seed=3)
    assert c.within(), c.rows()


def test_postselection_machines_are_sampled_through_restart(leq_post):
    c = mc.estimate(zoo.leq_post(zoo.LeqParams(alpha=1 / 2 ** 5)), "", 2000, seed=6)
    assert c.within()


def test_divergence_raises_with_trial_index():
    m = fixtures.half_accept_restart()
    with pytest.raises(DivergenceError) as info:
        mc.estimate(m, "a", 50, seed=0, round_cap=1)
    assert info.value.trial is not None


def test_single_trial_is_low_confidence():
    c = mc.estimate(fixtures.always_accept_restart(), "ab", 1)
    assert c.low_confidence and c.stats.accepts == 1 and c.stats.mean_steps == 4


def test_zero_trials_refused():
    with pytest.raises(PreconditionError):
        mc.estimate(fixtures.always_accept_restart(), "ab", 0)


def test_stats_consistency_check():
    with pytest.raises(ValueError):
        mc.TrialStats(3, 1, 1, 10, 0)


def test_exact_reference_values(leq):
    f, steps = mc.exact_reference(leq, "ab")
    assert f == pytest.approx(0.75) and steps == 4096
