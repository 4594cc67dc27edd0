"""
Randomized-response polls
=========================

A respondent tells the truth with probability p and otherwise answers at
random according to the question's weights.  The collector only sees the
randomized answers and inverts the noise to estimate how common the target
answer is.
"""

import numpy as np

from rrdoe import ScenarioParams, assign_truth, build_spine_poll, run_setting, save_poll
from rrdoe.simulator import collect_responses, estimate_target

# A poll with three nested questions and six alternatives each; only the
# first alternative leads on to the next question.
poll = build_spine_poll(depth=3, n_alts=6, target_weight=0.5)
print(save_poll(poll)[:400], "...")

# Half of 1000 people truly end at the target leaf.
population = assign_truth(poll, 1000, 0.5)
print("true fraction:", population.true_fraction)

rng = np.random.default_rng(1)
tally = collect_responses(poll, population, pr_truth=0.5, rng=rng)
for q, alt in poll.chain():
    print(f"{q.id}: {tally.reported(q.id, alt.id)} of {tally.answered(q.id)} reported {alt.id}")
print("estimate:", estimate_target(poll, tally, 0.5))

# More truthfulness means less error; p = 1 is exact.
for p in (0.1, 0.5, 0.9, 1.0):
    s = ScenarioParams(p, 3, 6, 0.5, 50500, 0.5)
    print(f"p={p:.1f}  MAPE over 30 repetitions: {run_setting(s, 30, seed=0).mape:10.4f}")

# Larger populations average the noise away.
for n in (1000, 10000, 100000):
    s = ScenarioParams(0.5, 3, 6, 0.5, n, 0.5)
    print(f"population {n:>6}: MAPE {run_setting(s, 30, seed=0).mape:.4f}")
