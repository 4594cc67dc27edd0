"""
Two-level designs and coded values
==================================

Every factor is studied on a coded scale where the low level is -1, the
high level is +1 and the baseline sits at 0.
"""

import numpy as np

from rrdoe import DEFAULT_SPACE, Factor, full_factorial, to_actual, to_coded

# A population factor between 100 and 1000 respondents: 550 is the middle,
# 450 the half-range, so 500 people sit a little below the baseline.
pop = Factor("pop", 100, 1000, kind="integer")
print("coded(500) =", to_coded(pop, 500))
print("actual(-1/9) =", to_actual(pop, -1 / 9))

# The six factors of the polling study, and what the baseline looks like.
for f in DEFAULT_SPACE:
    print(f"{f.name:8s} {f.low_actual:>8g} .. {f.high_actual:<8g} baseline {to_actual(f, 0)}")

# A 2^3 design in standard order: the first factor flips every run.
design = full_factorial(3)
print(design.to_csv(["a", "b", "c"]))

# Shrinking the design to half scale keeps it balanced and orthogonal.
x = full_factorial(6, scale=0.5).as_array()
print("runs:", len(x), " column sums:", x.sum(axis=0))
print("max off-diagonal of X'X:", np.abs(np.triu(x.T @ x, 1)).max())

# Half-scale corners expressed in actual units.
print("most cautious corner:", DEFAULT_SPACE.to_actual(x[0]))
print("most generous corner:", DEFAULT_SPACE.to_actual(x[-1]))
