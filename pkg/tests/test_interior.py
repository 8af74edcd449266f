import math
from dataclasses import replace

import numpy as np
import pytest

from torsionflow.errors import CapabilityError, ConvexityError, SolverError
from torsionflow.interior import (
    InteriorSolution,
    MfsConfig,
    ball_solution,
    boundary_gradient,
    hessian_constant,
    hessian_residual,
    interior_samples,
    interior_solve,
    solve_poisson_mfs,
)
from torsionflow.sphere import (
    SphereGrid,
    SupportField,
    ball,
    boundary_embedding,
    curvature_radii,
    ellipse,
    fourier_body,
)

ORIGIN2 = np.zeros((1, 2))
ORIGIN3 = np.zeros((1, 3))


def test_hessian_constants():
    assert hessian_constant(2, 1) == pytest.approx(0.25)
    assert hessian_constant(3, 1) == pytest.approx(1.0 / 6.0)
    assert 2 * hessian_constant(3, 2) == pytest.approx(3**-0.5)
    with pytest.raises(ValueError):
        hessian_constant(2, 3)


@pytest.mark.parametrize(
    "n,k,grad", [(2, 1, 0.5), (3, 1, 1.0 / 3.0), (3, 2, 3**-0.5)]
)
def test_ball_closed_form(n, k, grad):
    body = ball(SphereGrid.make(n, 32), 1.0)
    sol = ball_solution(n, k, 1.0, body)
    np.testing.assert_allclose(sol.boundary_gradient, grad, rtol=1e-14)
    assert hessian_residual(sol, interior_samples(body)) == 0.0
    with pytest.raises(ValueError):
        ball_solution(n, n, 1.0)


def test_mfs_disk():
    body = ball(SphereGrid.circle(128), 1.0)
    sol = solve_poisson_mfs(body)
    assert sol.backend == "mfs-poisson"
    assert sol.u(ORIGIN2)[0] == pytest.approx(-0.25, abs=1e-8)
    np.testing.assert_allclose(sol.boundary_gradient, 0.5, atol=1e-8)


def test_mfs_ball_3d():
    body = ball(SphereGrid.axisymmetric(64), 1.0)
    sol = solve_poisson_mfs(body)
    assert sol.u(ORIGIN3)[0] == pytest.approx(-1.0 / 6.0, abs=1e-6)
    np.testing.assert_allclose(sol.boundary_gradient, 1.0 / 3.0, atol=1e-6)


def test_mfs_ellipse_closed_form():
    # u = (x^2/4 + y^2 - 1) * 0.4
    body = ellipse(SphereGrid.circle(256), 2.0, 1.0)
    sol = interior_solve(body, 1)
    assert sol.u(ORIGIN2)[0] == pytest.approx(-0.4, abs=1e-6)
    assert sol.boundary_gradient[0] == pytest.approx(0.4, abs=1e-6)
    X = boundary_embedding(body)
    exact = 0.4 * np.linalg.norm(np.column_stack([X[:, 0] / 2.0, 2.0 * X[:, 1]]), axis=1)
    np.testing.assert_allclose(sol.boundary_gradient, exact, rtol=1e-5)
    np.testing.assert_allclose(sol.hessian(ORIGIN2)[0], np.diag([0.2, 0.8]), atol=1e-6)


def test_mfs_spheroid_closed_form():
    # u = (r^2/a^2 + z^2/b^2 - 1) / (2 (2/a^2 + 1/b^2))
    a, b = 1.5, 1.0
    body = ellipse(SphereGrid.axisymmetric(96), a, b)
    sol = interior_solve(body, 1)
    exact = -1.0 / (2.0 * (2.0 / a**2 + 1.0 / b**2))
    assert sol.u(ORIGIN3)[0] == pytest.approx(exact, abs=1e-6)


def test_gradient_trace_agrees_with_norm():
    body = ellipse(SphereGrid.circle(256), 1.5, 1.0)
    sol = interior_solve(body, 1)
    assert sol.tangential_defect < 1e-6
    np.testing.assert_array_equal(boundary_gradient(sol, body), sol.boundary_gradient)


def test_comparison_bounds_hold():
    body = fourier_body(SphereGrid.circle(128), [1.0, 0.1, 0.0, 0.05, 0.02])
    sol = interior_solve(body, 1)
    lam = curvature_radii(body)
    assert np.all(sol.boundary_gradient >= 0.5 * lam.min() * (1 - 1e-3))
    assert np.all(sol.boundary_gradient <= 0.5 * lam.max() * (1 + 1e-3))


def test_translation_equivariance():
    g = SphereGrid.circle(256, derivative="spectral")
    body = ellipse(g, 1.5, 1.0)
    moved = body.translated([0.2, -0.1])
    a = interior_solve(body, 1)
    b = interior_solve(moved, 1)
    np.testing.assert_allclose(b.boundary_gradient, a.boundary_gradient, atol=1e-8)
    shift = np.array([[0.2, -0.1]])
    assert b.u(shift)[0] == pytest.approx(a.u(ORIGIN2)[0], abs=1e-8)


def test_dispatch_and_capability():
    g3 = SphereGrid.axisymmetric(32)
    assert interior_solve(ellipse(SphereGrid.circle(64), 1.2, 1.0), 1).backend == "mfs-poisson"
    assert interior_solve(ball(g3, 1.0), 2).backend == "ball-closed-form"
    assert interior_solve(ball(SphereGrid.circle(64), 1.0), 1).backend == "ball-closed-form"
    nearly = SupportField(SphereGrid.circle(64), 1.0 + 1e-9 * np.cos(SphereGrid.circle(64).angles))
    assert interior_solve(nearly, 1).backend == "mfs-poisson"
    with pytest.raises(CapabilityError, match="interior_solve"):
        interior_solve(ellipse(g3, 1.2, 1.0), 2)
    with pytest.raises(ValueError):
        interior_solve(ball(g3, 1.0), 3)


def test_nonconvex_body_rejected():
    with pytest.raises(ConvexityError):
        solve_poisson_mfs(fourier_body(SphereGrid.circle(64), [1.0, 0, 0, 0.5, 0]))


def test_ill_conditioned_collocation():
    body = ellipse(SphereGrid.circle(128), 1.5, 1.0)
    with pytest.raises(SolverError, match="regularization"):
        solve_poisson_mfs(body, MfsConfig(regularization=0.0, max_condition=1e3))


def test_config_validation():
    with pytest.raises(ValueError):
        MfsConfig(charge_dilation=1.1)
    with pytest.raises(ValueError):
        MfsConfig(oversampling=0.5)
    with pytest.raises(ValueError):
        MfsConfig(placement="random")
    with pytest.raises(ValueError):
        MfsConfig(n_charges=100).charges_for(64)


def test_hessian_residual_machine_precision_and_negative_control():
    body = ellipse(SphereGrid.circle(128), 2.0, 1.0)
    sol = interior_solve(body, 1)
    assert sol.residual_report <= 1e-12
    broken = replace(sol, quadratic=sol.quadratic * 1.01)
    assert hessian_residual(broken, interior_samples(body)) > 1e-3
    with pytest.raises(ValueError, match="outside"):
        hessian_residual(sol, np.array([[5.0, 0.0]]), body)


def test_mfs_converges_with_more_charges():
    body = ellipse(SphereGrid.circle(256), 1.5, 1.0)
    res = [solve_poisson_mfs(body, MfsConfig(n_charges=m)).boundary_residual for m in (8, 16, 32, 64)]
    assert all(b < a for a, b in zip(res, res[1:]))


def test_normal_placement_on_elongated_body():
    body = ellipse(SphereGrid.circle(128), 2.0, 1.0)
    sol = solve_poisson_mfs(body, MfsConfig(placement="normal"))
    X = boundary_embedding(body)
    np.testing.assert_allclose(sol.hessian(X), np.broadcast_to(np.diag([0.2, 0.8]), (128, 2, 2)), atol=1e-6)


@pytest.mark.parametrize("dim", [2, 3])
def test_solution_snapshot_round_trip(dim):
    body = ellipse(SphereGrid.make(dim, 32), 1.3, 1.0)
    sol = interior_solve(body, 1)
    back = InteriorSolution.from_json(sol.to_json())
    pts = 0.5 * boundary_embedding(body)
    assert np.array_equal(back.u(pts), sol.u(pts))
    assert np.array_equal(back.boundary_gradient, sol.boundary_gradient)
    keys = set(sol.to_dict())
    assert {"backend", "centroid", "charges", "coefficients", "boundary_gradient"} <= keys


def test_solution_is_immutable():
    sol = interior_solve(ball(SphereGrid.circle(16), 1.0), 1)
    with pytest.raises(Exception):
        sol.constant = 0.0
    with pytest.raises(ValueError):
        sol.boundary_gradient[0] = 1.0
    assert math.isfinite(sol.condition)
