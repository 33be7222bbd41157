"""
Decay of the symmetry-reduced kernel
====================================

For vorticity that is odd in x1, the horizontal velocity reduces to a
lattice sum of four rational terms.  Each complete shell of the lattice
contributes less and less; this script measures how fast.
"""

import numpy as np

from cornerflow.experiments import DECAY_PAIRS, kernel_decay, u1_shell_increments

# %%
# Shell contributions for one pair, printed at a few radii.
x, y = DECAY_PAIRS[0]
inc = np.abs(u1_shell_increments(x, y, 64))
for r in (1, 2, 4, 8, 16, 32, 64):
    print(f"shell {r:2d}: {inc[r]:.3e}")

# %%
# Fit a power law over shells 4 to 64, worst case over the test pairs.
res = kernel_decay()
print(f"log-log slope {res.slope:.2f}")

# %%
# On the symmetry axis the u1 integrand carries a factor x1 and vanishes.
print("axis increments:", res.axis_max)
