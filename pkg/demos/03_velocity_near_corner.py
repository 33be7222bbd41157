"""
Velocity near the corner
========================

The corner at the origin is a stagnation point.  The key estimate says
|u_j(x) / x_j| stays bounded by a constant times the sup of the vorticity
inside a cone around the edge.  We sample it on a fan of rays.
"""

from cornerflow import KernelConfig, preset_omega0, ratio_sweep, velocity_dense

omega = preset_omega0("sinpatch")
cfg = KernelConfig()

# %%
# Along the edge x2 = x1 the flow points at the corner.
for s in (0.4, 0.2, 0.1):
    v = velocity_dense((s, s), omega, cfg)
    print(f"x = ({s}, {s}): u = ({v.u1:+.5f}, {v.u2:+.5f})")

# %%
# Ratios at four scales in the cone below x2 = 2 x1.  sinpatch vanishes
# to third order at the corner, so the ratios decay rather than grow.
rep = ratio_sweep(omega, 2.0, [2.0**-2, 2.0**-4, 2.0**-6, 2.0**-8], cfg, sup_norm=omega.sup_norm)
for scale, m in sorted(rep.max_by_scale().items(), reverse=True):
    print(f"|x| = {scale:.4f}: max ratio {m:.3e}")
print(f"empirical c1 = {rep.c1_empirical:.4f}")

# %%
# ramppatch vanishes only linearly at the corner, so its ratios stay
# larger and shrink far more slowly; the bound is comfortably uniform.
ramp = preset_omega0("ramppatch")
rep = ratio_sweep(ramp, 2.0, [2.0**-2, 2.0**-5, 2.0**-8], cfg, sup_norm=ramp.sup_norm)
for scale, m in sorted(rep.max_by_scale().items(), reverse=True):
    print(f"ramppatch |x| = {scale:.4f}: max ratio {m:.3e}")
