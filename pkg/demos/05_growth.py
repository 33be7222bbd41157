"""
Growth of the vorticity gradient on the boundary
================================================

Boundary vorticity divided by the distance to the corner measures the
gradient there.  It may grow, but no faster than a single exponential in
time.  ramppatch makes the effect visible on a coarse mesh.
"""

from cornerflow import KernelConfig
from cornerflow.experiments import assess_growth, run_ratio_sweep
from cornerflow.geometry import BoundaryMarker, Edge
from cornerflow.transport import init_particles, simulate

h = 1.0 / 32
cfg = KernelConfig(blob_radius=0.8 * h)

# %%
# The constant c1 comes from a cheap ratio sweep.
c1 = run_ratio_sweep("ramppatch", 2.0, [2.0**-2, 2.0**-5, 2.0**-8], cfg, check_convergence=False).report.c1_empirical
print(f"c1 = {c1:.4f}")

# %%
markers = [BoundaryMarker(Edge.LOWER_RIGHT, 2.0**-k) for k in range(3, 7)]
sim = simulate(init_particles("ramppatch", h), markers, 0.02, 2.0, cfg)
report = assess_growth(sim, c1, every=5)

times = sorted({r.t for r in report.rows})
for t in times[::4]:
    q = max(r.q for r in report.rows if r.t == t)
    print(f"t = {t:4.2f}: max q = {q:7.3f}")
print(f"fitted rate {report.fitted_rate:.3f}, admissible {report.c * report.sup_norm:.3f}, bound holds: {report.bound_satisfied}")
