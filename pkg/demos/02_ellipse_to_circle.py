# An ellipse flows to a circle.
#
# With constant density the only fixed points of the normalized flow are
# circles, and the flow keeps Phi = int f h fixed.  So the limit circle has
# radius Phi(h0) / (2 pi), known before the run starts.  Along the way the
# torsional rigidity never decreases.

# %%
import math

import numpy as np

from torsionflow import DensityField, FlowConfig, SphereGrid, ellipse, run

grid = SphereGrid.circle(64)
h0 = ellipse(grid, 1.5, 1.0)
f = DensityField.constant(grid)
r_star = grid.integrate(h0.values) / (2 * math.pi)
print(f"predicted limit radius R* = {r_star:.10f}")

# %%
res = run(h0, f, 1, FlowConfig(), snapshot_every=1000)
print(f"converged: {res.converged} after {res.steps} steps, t = {res.final.t:.3f}")

print(f"\n{'t':>7} {'Phi':>14} {'T~':>14} {'residual':>10} {'max h - min h':>14}")
for rep in res.reports[:: max(1, len(res.reports) // 12)] + [res.reports[-1]]:
    print(f"{rep.t:7.3f} {rep.phi:14.10f} {rep.T_tilde:14.10f} {rep.residual:10.2e} {rep.max_h - rep.min_h:14.2e}")

# %%
T = np.array([r.T_tilde for r in res.reports])
phi = np.array([r.phi for r in res.reports])
print(f"\nsmallest relative step change of T~: {(np.diff(T) / T[:-1]).min():.2e}  (rounding level)")
print(f"largest Phi drift: {abs(phi - phi[0]).max() / phi[0]:.2e}")
print(f"max |h_final - R*| = {abs(res.h.values - r_star).max():.2e}")

# %%
# Snapshots are (step, time, support function) triples; the boundary curve of
# each one is a parametrized convex curve.
from torsionflow import boundary_embedding  # noqa: E402

for step, t, h in res.snapshots:
    X = boundary_embedding(h)
    print(f"step {step:5d}  t = {t:6.3f}  width/height = {np.ptp(X[:, 0]) / np.ptp(X[:, 1]):.6f}")
