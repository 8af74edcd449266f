# The Hessian of the torsion function at the boundary.
#
# On the boundary the level set {u = 0} has outer normal x and the Hessian
# splits into a tangential block and a normal-normal entry.  Differentiating
# u(X(x)) = 0 twice along the boundary gives the tangential block exactly:
#
#     (D^2 u e_i) . e_j = |Du| (W^-1)_ij,
#
# and for k = 1, the trace condition then pins down the normal entry:
#
#     (D^2 u x) . x = 1 - |Du| tr W^-1.
#
# The lab evaluates the stated formulas next to these, on closed-form cases.

# %%
from torsionflow import SphereGrid, ball, ellipse, interior_solve
from torsionflow.lab import lemma45_identities

cases = [
    ("disk", ball(SphereGrid.circle(64), 1.0), 1),
    ("ellipse 2:1", ellipse(SphereGrid.circle(256), 2.0, 1.0), 1),
    ("ball, n=3 k=1", ball(SphereGrid.axisymmetric(64), 1.0), 1),
    ("spheroid 1.5:1", ellipse(SphereGrid.axisymmetric(128), 1.5, 1.0), 1),
    ("ball, n=3 k=2", ball(SphereGrid.axisymmetric(64), 1.0), 2),
]

# %%
for label, body, k in cases:
    print(f"\n{label}  (backend: {interior_solve(body, k).backend})")
    for rep in lemma45_identities(body, interior_solve(body, k), k):
        print(f"   {rep.name:<30} relerr {rep.relerr:9.2e}   {rep.variant}")

# %%
# On the (3, 2) ball the stated normal entry is off by exactly a factor 2.
body = ball(SphereGrid.axisymmetric(64), 1.0)
iii = {r.name: r for r in lemma45_identities(body, interior_solve(body, 2), 2)}["boundary-hessian(iii)"]
print(f"\n(3,2) ball: lhs {iii.lhs[0]:.6f}, stated rhs {iii.rhs[0]:.6f}, ratio {iii.lhs[0] / iii.rhs[0]:.6f}")
