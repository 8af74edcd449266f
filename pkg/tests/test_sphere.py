import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from torsionflow.errors import ConvexityError, GridMismatchError, GridSizeError
from torsionflow.sphere import (
    SphereGrid,
    SupportField,
    angular_derivatives,
    ball,
    boundary_embedding,
    check_convex,
    convexity_margin,
    curvature_data,
    curvature_radii,
    elementary_symmetric,
    ellipse,
    fejer_weights,
    fourier_body,
    is_certified_convex,
    minkowski_combination,
    radial_from_support,
    support_derivatives,
)


# ------------------------------------------------------------------ grids


def test_circle_grid_nodes_and_weights():
    g = SphereGrid.circle(16)
    assert g.dim == 2 and g.n_nodes == 16
    np.testing.assert_allclose(np.linalg.norm(g.directions, axis=1), 1.0)
    assert g.integrate(np.ones(16)) == pytest.approx(2 * math.pi, rel=1e-15)


def test_axisymmetric_weights_integrate_polynomials_exactly():
    g = SphereGrid.axisymmetric(12)
    assert g.integrate(np.ones(12)) == pytest.approx(4 * math.pi, rel=1e-14)
    z = g.directions[:, 2]
    # int_{S^2} z^2 = 4 pi / 3, int z^4 = 4 pi / 5
    assert g.integrate(z**2) == pytest.approx(4 * math.pi / 3, rel=1e-13)
    assert g.integrate(z**4) == pytest.approx(4 * math.pi / 5, rel=1e-13)
    assert fejer_weights(7).sum() == pytest.approx(2.0, rel=1e-14)


def test_grid_too_small_and_bad_dim():
    with pytest.raises(GridSizeError):
        SphereGrid.circle(3)
    with pytest.raises(GridSizeError):
        SphereGrid.axisymmetric(2)
    with pytest.raises(ValueError):
        SphereGrid.make(4, 16)
    with pytest.raises(ValueError):
        SphereGrid.circle(16, derivative="cubic")


def test_field_shape_and_grid_mismatch():
    with pytest.raises(ValueError):
        SupportField(SphereGrid.circle(8), np.ones(9))
    a = ball(SphereGrid.circle(8), 1.0)
    b = ball(SphereGrid.circle(16), 1.0)
    with pytest.raises(GridMismatchError):
        a + b


# ------------------------------------------------------------ derivatives


def _ellipse_exact(a, b, t):
    h = np.sqrt((a * np.cos(t)) ** 2 + (b * np.sin(t)) ** 2)
    radius = (a * b) ** 2 / h**3  # h'' + h
    return h, radius


@pytest.mark.parametrize("mode,tol", [("fd4", 1e-6), ("spectral", 1e-10)])
def test_ellipse_curvature_radius(mode, tol):
    g = SphereGrid.circle(256, derivative=mode)
    h = ellipse(g, 1.5, 1.0)
    _, exact = _ellipse_exact(1.5, 1.0, g.angles)
    np.testing.assert_allclose(curvature_radii(h)[:, 0], exact, rtol=tol)


def test_fd4_is_fourth_order():
    errs = []
    for n in (32, 64, 128):
        g = SphereGrid.circle(n)
        v = np.exp(np.cos(g.angles))
        _, d2 = angular_derivatives(g, v)
        exact = np.exp(np.cos(g.angles)) * (np.sin(g.angles) ** 2 - np.cos(g.angles))
        errs.append(np.max(np.abs(d2 - exact)))
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(orders > 3.7)


def test_spheroid_radii_closed_form():
    a, b = 1.5, 1.0
    g = SphereGrid.axisymmetric(128, derivative="spectral")
    h = ellipse(g, a, b)
    t = g.angles
    hh = np.sqrt((a * np.sin(t)) ** 2 + (b * np.cos(t)) ** 2)
    lam = curvature_radii(h)
    np.testing.assert_allclose(lam[:, 0], (a * b) ** 2 / hh**3, rtol=1e-9)  # meridian
    np.testing.assert_allclose(lam[:, 1], a**2 / hh, rtol=1e-9)  # parallel


def test_ball_data_is_exact():
    for g in (SphereGrid.circle(16), SphereGrid.axisymmetric(16)):
        h = ball(g, 2.0)
        cd = curvature_data(h, 1)
        np.testing.assert_allclose(cd.eigenvalues, 2.0, rtol=1e-13)
        n = g.dim
        np.testing.assert_allclose(cd.sigma, 2.0 ** (n - 1), rtol=1e-13)
        d = support_derivatives(h)
        np.testing.assert_allclose(d.gradient, 0.0, atol=1e-12)


def test_cofactor_is_derivative_of_sigma():
    g = SphereGrid.axisymmetric(32)
    h = ellipse(g, 1.3, 0.9)
    cd = curvature_data(h, 1)  # sigma_2 in dim 3
    lam = cd.eigenvalues
    # sigma_2 = l1 l2; d sigma_2 / d l1 = l2
    np.testing.assert_allclose(cd.cofactor[:, 0, 0], lam[:, 1])
    np.testing.assert_allclose(cd.cofactor[:, 1, 1], lam[:, 0])
    np.testing.assert_allclose(cd.cofactor[:, 0, 1], 0.0)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(0.1, 3.0), min_size=1, max_size=5), st.integers(0, 5))
def test_elementary_symmetric_matches_brute_force(vals, m):
    from itertools import combinations

    lam = np.array([vals])
    brute = sum(math.prod(c) for c in combinations(vals, m)) if m <= len(vals) else 0.0
    assert elementary_symmetric(lam, m)[0] == pytest.approx(brute, rel=1e-12, abs=1e-12)


# -------------------------------------------------------------- convexity


def test_convexity_margin_and_error_carries_location():
    g = SphereGrid.circle(256)
    h = fourier_body(g, [1.0, 0, 0, 0.5, 0.0])  # 1 + 0.5 cos 2t
    assert convexity_margin(h) == pytest.approx(-0.5, rel=1e-5)
    assert not is_certified_convex(h)
    with pytest.raises(ConvexityError) as ei:
        check_convex(h)
    assert ei.value.node in (0, 128)  # minima at theta = 0 and pi
    assert ei.value.margin == pytest.approx(-0.5, rel=1e-5)


def test_ellipse_margin_and_certification():
    h = ellipse(SphereGrid.circle(256), 2.0, 1.0)
    assert convexity_margin(h) == pytest.approx(0.5, rel=1e-7)  # b^2 / a
    assert is_certified_convex(h)


def test_minkowski_combination_of_balls():
    g = SphereGrid.circle(32)
    out = minkowski_combination(ball(g, 1.0), ball(g, 2.0), 0.5)
    np.testing.assert_allclose(out.values, 2.0)
    with pytest.raises(ConvexityError):
        minkowski_combination(ball(g, 1.0), fourier_body(g, [0, 0, 0, 1.0, 0]), 1.0)


# ------------------------------------------------------------- embedding


def test_embedding_of_unit_circle_with_four_nodes():
    X = boundary_embedding(ball(SphereGrid.circle(4), 1.0))
    np.testing.assert_allclose(X, [[1, 0], [0, 1], [-1, 0], [0, -1]], atol=1e-15)


def test_embedding_of_ellipse_lies_on_ellipse():
    h = ellipse(SphereGrid.circle(256), 2.0, 1.0)
    X = boundary_embedding(h)
    np.testing.assert_allclose((X[:, 0] / 2.0) ** 2 + X[:, 1] ** 2, 1.0, atol=1e-7)
    np.testing.assert_allclose(X[0], [2.0, 0.0], atol=1e-12)


def test_radial_relation():
    h = ellipse(SphereGrid.circle(128), 1.5, 1.0)
    rho = radial_from_support(h)
    X = boundary_embedding(h)
    np.testing.assert_allclose(rho, np.linalg.norm(X, axis=1), rtol=1e-12)


@settings(max_examples=25, deadline=None)
@given(
    st.floats(-0.3, 0.3),
    st.floats(-0.3, 0.3),
    st.floats(0.0, 0.04),
    st.floats(0.0, 0.02),
)
def test_translation_and_scaling_covariance(vx, vy, a2, a3):
    # spectral differentiation annihilates the linear modes exactly
    g = SphereGrid.circle(64, derivative="spectral")
    h = fourier_body(g, [1.0, 0.0, 0.0, a2, 0.0, a3, 0.0])
    moved = h.translated([vx, vy])
    np.testing.assert_allclose(curvature_radii(moved), curvature_radii(h), atol=1e-11)
    np.testing.assert_allclose(boundary_embedding(moved), boundary_embedding(h) + [vx, vy], atol=1e-11)
    np.testing.assert_allclose(curvature_radii(h.scaled(2.0)), 2.0 * curvature_radii(h), rtol=1e-12)


# ----------------------------------------------------------- serialization


@pytest.mark.parametrize("dim,n", [(2, 33), (3, 17)])
def test_snapshot_round_trip_bit_exact(dim, n):
    g = SphereGrid.make(dim, n)
    rng = np.random.default_rng(7)
    h = SupportField(g, 1.0 + 0.01 * rng.standard_normal(n))
    back = SupportField.from_json(h.to_json())
    assert back.grid.matches(g)
    assert np.array_equal(back.values, h.values)
    d = json.loads(h.to_json())
    assert set(d) == {"dim", "n_nodes", "angles", "h"}


def test_snapshot_rejects_foreign_angles():
    d = ball(SphereGrid.circle(8), 1.0).to_dict()
    d["angles"] = [a + 0.1 for a in d["angles"]]
    with pytest.raises(ValueError):
        SupportField.from_dict(d)
