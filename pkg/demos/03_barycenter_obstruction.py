# Which densities can the flow reach?
#
# The torsional rigidity does not change when the body is translated.  Moving
# the body by v changes h by v.x, and by the variational formula the rate of
# change of T~ is (1/k) int (v.x) dmu.  That rate is zero for every v, so the
# torsional measure of any body has its barycenter at the origin:
#
#     int x dmu = 0.
#
# A density f can only be a multiple of dmu if int x f dx = 0 as well.
# f = 1 + 0.1 cos(t) fails this test; f = 1 + 0.1 cos(3t) passes it.

# %%
import numpy as np

from torsionflow import DensityField, FlowConfig, SphereGrid, ellipse, evaluate, fourier_body, run

grid = SphereGrid.circle(128)
for label, body in [
    ("ellipse 1.5 x 1", ellipse(grid, 1.5, 1.0)),
    ("lopsided body", fourier_body(grid, [1.0, 0.3, -0.2, 0.05, 0.04, 0.02, -0.01])),
]:
    ev = evaluate(body, DensityField.constant(grid), 1)
    moment = [
        grid.integrate(ev.density * grid.directions[:, i]) for i in range(2)
    ]
    print(f"{label:>16}: int x dmu = ({moment[0]: .2e}, {moment[1]: .2e}),  mu(S^1) = {grid.integrate(ev.density):.4f}")

# %%
# First moments of the two candidate densities.
lopsided = DensityField(grid, 1 + 0.1 * np.cos(grid.angles), "1+0.1cos t")
balanced = DensityField(grid, 1 + 0.1 * np.cos(3 * grid.angles), "1+0.1cos 3t")
for f in (lopsided, balanced):
    print(f"{f.tag:>20}: int x f = {grid.integrate(f.values * grid.directions[:, 0]): .4f}")

# %%
# Run both for the same (short) time.  The balanced density settles; the
# lopsided one drives a steady drift and its residual stalls near 0.1.
cfg = FlowConfig(max_steps=3000)
for f in (lopsided, balanced):
    res = run(ellipse(grid, 1.5, 1.0), f, 1, cfg)
    h = res.h.values
    print(
        f"{f.tag:>20}: t = {res.final.t:.2f}, residual {res.final.residual:.2e}, "
        f"h(0) - h(pi) = {h[0] - h[len(h) // 2]: .4f}"
    )
