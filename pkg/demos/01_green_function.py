"""
The Dirichlet Green function of the rotated square
==================================================

The square stands on its corner at the origin.  Its Green function is a
lattice sum of logarithms over reflected and translated copies of the
source.  Here we evaluate it two ways and watch them agree.
"""

import numpy as np

from cornerflow import OracleConfig, Point, ShellPolicy, green_image, green_oracle

# %%
# A pair of interior points, one on each side of the symmetry axis.
x, y = Point(0.1, 0.6), Point(-0.2, 0.8)
g, shells = green_image(x, y)
print(f"image sum   G = {g:.15f}  ({shells} shells)")
print(f"sine series G = {green_oracle(x, y):.15f}")

# %%
# The raw image series converges slowly: each complete shell of images
# adds a contribution of order r^-3.  Adding the Taylor remainder of the
# missing shells fixes that, so a handful of shells is enough.
for tail in (False, True):
    pol = ShellPolicy(r_min=4, tol=1e-9, r_max=256, tail_correction=tail)
    g_, used = green_image(x, y, pol)
    print(f"remainder={tail!s:5}  shells={used:3d}  error={abs(g_ - g):.1e}")

# %%
# On the edge x2 = x1 the reflected images pair off exactly, so the value
# is an exact zero.  Near the far edge it fades continuously.
print("diagonal edge:", green_image((0.3, 0.3), (0.1, 0.5))[0])
for d in (1e-1, 1e-2, 1e-3):
    p = Point((1 - d - 0.5) / np.sqrt(2), (1 - d + 0.5) / np.sqrt(2))
    print(f"distance {d:g} from the upper-right edge: G = {green_image(p, (0.1, 0.7))[0]:.3e}")

# %%
# Fewer sine modes in the oracle means a visibly worse answer.
for k in (10, 50, 400):
    print(f"k_max={k:3d}: oracle error {abs(green_oracle(x, y, OracleConfig(k_max=k)) - g):.1e}")
