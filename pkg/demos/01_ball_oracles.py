# Torsional rigidity of balls, three ways.
#
# On a ball of radius R the k-Hessian problem S_k(D^2 u) = 1, u = 0 on the
# boundary, has the radial solution u = c (|y|^2 - R^2).  The torsional
# rigidity can then be read off from the volume integral -int u or from the
# boundary formula 1/(k(n+2)) int h dmu.  Both should agree with the closed
# form to rounding.

# %%
import math

from torsionflow import SphereGrid, ball, functional_report
from torsionflow.lab import ball_torsion

print(f"{'n':>2} {'k':>2} {'R':>5}  {'closed form':>14} {'volume':>14} {'boundary':>14}")
for n, k in [(2, 1), (3, 1), (3, 2)]:
    grid = SphereGrid.make(n, 64)
    for R in (0.5, 1.0, 2.0):
        rep, sol, _ = functional_report(ball(grid, R), None, k)
        print(
            f"{n:>2} {k:>2} {R:>5}  {ball_torsion(n, k, R):14.10f} "
            f"{rep.T_volume ** (1 / k):14.10f} {rep.T_boundary:14.10f}   [{sol.backend}]"
        )

# %%
# The planar value pi R^4 / 8 at R = 1:
print("\npi/8 =", math.pi / 8)

# %%
# For k = 1 the general solver is the method of fundamental solutions.  Feed
# it a disk directly and it lands on the same number, up to the exponential
# convergence of the charge expansion.
from torsionflow.interior import solve_poisson_mfs  # noqa: E402

for N in (16, 32, 64, 128):
    body = ball(SphereGrid.circle(N), 1.0)
    sol = solve_poisson_mfs(body)
    print(f"N = {N:4d}   max | |Du| - 1/2 | = {abs(sol.boundary_gradient - 0.5).max():.2e}")
