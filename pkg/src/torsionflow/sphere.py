"""Support-function calculus on S^1 and on axisymmetric S^2.

A convex body is stored through its support function ``h`` sampled on a
:class:`SphereGrid`.  For ``dim == 2`` the grid is the uniform periodic grid
``theta_i = 2 pi i / N``; for ``dim == 3`` it is an open grid of polar angles
``theta_j = (j + 1/2) pi / M`` and ``h`` is assumed invariant under rotation
about the z axis.  In that case the curvature matrix ``W = Hess h + h I`` is
diagonal in the frame ``(e_theta, e_phi)`` with eigenvalues
``h_tt + h`` and ``h_t cot(theta) + h``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ConvexityError, GridMismatchError, GridSizeError

MIN_NODES = 4
CONVEXITY_RTOL = 1e-8

DERIVATIVE_MODES = ("fd4", "spectral")


def fejer_weights(m: int) -> np.ndarray:
    """Fejer's first rule on the midpoint nodes ``cos((j + 1/2) pi / m)``.

    Returns weights for integrating over ``[-1, 1]`` in ``mu = cos(theta)``;
    they sum to 2 and are exact for polynomials of degree ``m - 1``.
    """
    theta = (np.arange(m) + 0.5) * np.pi / m
    ell = np.arange(1, m // 2 + 1)
    series = np.cos(2.0 * np.outer(theta, ell)) / (4.0 * ell**2 - 1.0)
    return (2.0 / m) * (1.0 - 2.0 * series.sum(axis=1))


@dataclass(frozen=True, eq=False)
class SphereGrid:
    """Discretization of S^{n-1} with unit directions and quadrature weights.

    Use :meth:`circle` or :meth:`axisymmetric` rather than the raw
    constructor.  ``derivative`` selects 4th-order periodic central
    differences (``"fd4"``) or trigonometric interpolation (``"spectral"``).
    """

    dim: int
    angles: np.ndarray
    directions: np.ndarray
    weights: np.ndarray
    derivative: str = "fd4"

    @classmethod
    def circle(cls, n_nodes: int, derivative: str = "fd4") -> "SphereGrid":
        if n_nodes < MIN_NODES:
            raise GridSizeError(f"circle grid needs >= {MIN_NODES} nodes, got {n_nodes}")
        theta = 2.0 * np.pi * np.arange(n_nodes) / n_nodes
        dirs = np.column_stack([np.cos(theta), np.sin(theta)])
        w = np.full(n_nodes, 2.0 * np.pi / n_nodes)
        return cls._build(2, theta, dirs, w, derivative)

    @classmethod
    def axisymmetric(cls, n_nodes: int, derivative: str = "fd4") -> "SphereGrid":
        if n_nodes < MIN_NODES:
            raise GridSizeError(
                f"axisymmetric grid needs >= {MIN_NODES} interior polar nodes, got {n_nodes}"
            )
        theta = (np.arange(n_nodes) + 0.5) * np.pi / n_nodes
        dirs = np.column_stack([np.sin(theta), np.zeros_like(theta), np.cos(theta)])
        w = 2.0 * np.pi * fejer_weights(n_nodes)
        return cls._build(3, theta, dirs, w, derivative)

    @classmethod
    def make(cls, dim: int, n_nodes: int, derivative: str = "fd4") -> "SphereGrid":
        if dim == 2:
            return cls.circle(n_nodes, derivative)
        if dim == 3:
            return cls.axisymmetric(n_nodes, derivative)
        raise ValueError(f"dim must be 2 or 3, got {dim}")

    @classmethod
    def _build(cls, dim, theta, dirs, w, derivative):
        if derivative not in DERIVATIVE_MODES:
            raise ValueError(f"derivative must be one of {DERIVATIVE_MODES}, got {derivative!r}")
        for a in (theta, dirs, w):
            a.setflags(write=False)
        return cls(dim, theta, dirs, w, derivative)

    @property
    def n_nodes(self) -> int:
        return len(self.angles)

    @property
    def spacing(self) -> float:
        return 2.0 * np.pi / self.n_nodes if self.dim == 2 else np.pi / self.n_nodes

    @property
    def tangents(self) -> np.ndarray:
        """Unit tangent ``e_1`` (d/dtheta of the direction) at each node."""
        t = self.angles
        if self.dim == 2:
            return np.column_stack([-np.sin(t), np.cos(t)])
        return np.column_stack([np.cos(t), np.zeros_like(t), -np.sin(t)])

    def integrate(self, values) -> float:
        return float(np.dot(self.weights, values))

    def matches(self, other: "SphereGrid") -> bool:
        return (
            self is other
            or (
                self.dim == other.dim
                and self.n_nodes == other.n_nodes
                and np.array_equal(self.angles, other.angles)
            )
        )

    def with_derivative(self, derivative: str) -> "SphereGrid":
        return SphereGrid._build(
            self.dim, self.angles.copy(), self.directions.copy(), self.weights.copy(), derivative
        )


def _require_same_grid(a: SphereGrid, b: SphereGrid):
    if not a.matches(b):
        raise GridMismatchError(
            f"fields live on different grids (dim {a.dim}/{b.dim}, nodes {a.n_nodes}/{b.n_nodes})"
        )


@dataclass(frozen=True, eq=False)
class SupportField:
    """Support function values ``h_i`` on a grid."""

    grid: SphereGrid
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != (self.grid.n_nodes,):
            raise ValueError(f"expected {self.grid.n_nodes} values, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("support values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def dim(self) -> int:
        return self.grid.dim

    def scaled(self, lam: float) -> "SupportField":
        return SupportField(self.grid, lam * self.values)

    def translated(self, v) -> "SupportField":
        """Support function of the body shifted by the vector ``v``."""
        return SupportField(self.grid, self.values + self.grid.directions @ np.asarray(v, float))

    def __add__(self, other: "SupportField") -> "SupportField":
        _require_same_grid(self.grid, other.grid)
        return SupportField(self.grid, self.values + other.values)

    # snapshot format: {dim, n_nodes, angles[], h[]}
    def to_dict(self) -> dict:
        return {
            "dim": self.dim,
            "n_nodes": self.grid.n_nodes,
            "angles": self.grid.angles.tolist(),
            "h": self.values.tolist(),
        }

    def to_json(self, **extra) -> str:
        d = self.to_dict()
        d.update(extra)
        return json.dumps(d)

    @classmethod
    def from_dict(cls, d: dict, derivative: str = "fd4") -> "SupportField":
        grid = SphereGrid.make(int(d["dim"]), int(d["n_nodes"]), derivative)
        angles = np.asarray(d["angles"], dtype=float)
        if angles.shape != grid.angles.shape or not np.allclose(angles, grid.angles, atol=1e-12):
            raise ValueError("snapshot angles do not match the standard grid for its dim/n_nodes")
        return cls(grid, np.asarray(d["h"], dtype=float))

    @classmethod
    def from_json(cls, text: str, derivative: str = "fd4") -> "SupportField":
        return cls.from_dict(json.loads(text), derivative)


# ---------------------------------------------------------------- bodies


def ball(grid: SphereGrid, radius: float, center=None) -> SupportField:
    h = np.full(grid.n_nodes, float(radius))
    if center is not None:
        h = h + grid.directions @ np.asarray(center, dtype=float)
    return SupportField(grid, h)


def ellipse(grid: SphereGrid, a: float, b: float) -> SupportField:
    """Ellipse with semi-axes ``a`` (x) and ``b`` (y) for dim 2.

    For dim 3 this is the spheroid with equatorial semi-axis ``a`` and polar
    semi-axis ``b``.
    """
    x = grid.directions
    if grid.dim == 2:
        return SupportField(grid, np.sqrt((a * x[:, 0]) ** 2 + (b * x[:, 1]) ** 2))
    return SupportField(grid, np.sqrt((a * x[:, 0]) ** 2 + (b * x[:, 2]) ** 2))


def fourier_field(grid: SphereGrid, coeffs) -> np.ndarray:
    """Evaluate a trigonometric series on the grid.

    dim 2: ``coeffs = [a0, a1, b1, a2, b2, ...]`` gives
    ``a0 + sum a_m cos(m t) + b_m sin(m t)``.
    dim 3: ``coeffs = [a0, a1, a2, ...]`` gives ``sum a_m cos(m theta)``
    (smooth on S^2 since ``cos(m theta)`` is a polynomial in ``cos theta``).
    """
    c = np.asarray(coeffs, dtype=float)
    t = grid.angles
    out = np.full(grid.n_nodes, c[0] if c.size else 0.0)
    if grid.dim == 2:
        for i in range(1, c.size):
            m = (i + 1) // 2
            out = out + c[i] * (np.cos(m * t) if i % 2 else np.sin(m * t))
    else:
        for m in range(1, c.size):
            out = out + c[m] * np.cos(m * t)
    return out


def fourier_body(grid: SphereGrid, coeffs) -> SupportField:
    return SupportField(grid, fourier_field(grid, coeffs))


# ------------------------------------------------------------ derivatives


def _periodic_derivatives(v: np.ndarray, dx: float, mode: str):
    if mode == "spectral":
        n = v.size
        vh = np.fft.rfft(v)
        kk = np.fft.rfftfreq(n, d=dx / (2.0 * np.pi))
        ik = 1j * kk
        if n % 2 == 0:
            ik[-1] = 0.0
        d1 = np.fft.irfft(ik * vh, n)
        d2 = np.fft.irfft(-(kk**2) * vh, n)
        return d1, d2
    p1, p2 = np.roll(v, -1), np.roll(v, -2)
    m1, m2 = np.roll(v, 1), np.roll(v, 2)
    d1 = (-p2 + 8.0 * p1 - 8.0 * m1 + m2) / (12.0 * dx)
    d2 = (-p2 + 16.0 * p1 - 30.0 * v + 16.0 * m1 - m2) / (12.0 * dx * dx)
    return d1, d2


def angular_derivatives(grid: SphereGrid, values) -> tuple[np.ndarray, np.ndarray]:
    """First and second derivatives in the grid angle.

    For dim 3 the field is extended evenly across both poles, which is the
    parity of any smooth axisymmetric function of the polar angle.
    """
    v = np.asarray(values, dtype=float)
    if grid.n_nodes < MIN_NODES:
        raise GridSizeError(f"need >= {MIN_NODES} nodes for derivatives, got {grid.n_nodes}")
    if grid.dim == 2:
        return _periodic_derivatives(v, grid.spacing, grid.derivative)
    ext = np.concatenate([v, v[::-1]])
    d1, d2 = _periodic_derivatives(ext, grid.spacing, grid.derivative)
    m = grid.n_nodes
    return d1[:m], d2[:m]


@dataclass(frozen=True)
class SupportDerivatives:
    gradient: np.ndarray  # h_theta (covariant derivative along e_1)
    second: np.ndarray  # h_theta_theta
    cot_term: Optional[np.ndarray] = None  # dim 3: h_theta * cot(theta)


def support_derivatives(h: SupportField) -> SupportDerivatives:
    g = h.grid
    d1, d2 = angular_derivatives(g, h.values)
    if g.dim == 2:
        return SupportDerivatives(d1, d2)
    return SupportDerivatives(d1, d2, d1 / np.tan(g.angles))


# ---------------------------------------------------------- curvature data


def elementary_symmetric(lam: np.ndarray, m: int) -> np.ndarray:
    """``sigma_m`` of the rows of ``lam`` (shape ``(N, d)``)."""
    lam = np.atleast_2d(lam)
    if m < 0:
        return np.zeros(lam.shape[0])
    e = [np.ones(lam.shape[0])] + [np.zeros(lam.shape[0]) for _ in range(m)]
    for col in lam.T:
        for j in range(m, 0, -1):
            e[j] = e[j] + col * e[j - 1]
    return e[m]


@dataclass(frozen=True, eq=False)
class CurvatureData:
    """Principal curvature radii and derived symmetric functions per node.

    ``sigma`` holds ``sigma_{n-k}`` and ``cofactor`` the matrices
    ``d_ij = d sigma_{n-k} / d omega_ij`` in the frame ``(e_theta[, e_phi])``.
    """

    k: int
    eigenvalues: np.ndarray  # (N, n-1)
    sigma: np.ndarray  # (N,)
    cofactor: np.ndarray  # (N, n-1, n-1)

    @property
    def order(self) -> int:
        return self.eigenvalues.shape[1] + 1 - self.k

    def sigma_m(self, m: int) -> np.ndarray:
        return elementary_symmetric(self.eigenvalues, m)

    @property
    def curvature_matrix(self) -> np.ndarray:
        lam = self.eigenvalues
        out = np.zeros(lam.shape + (lam.shape[1],))
        idx = np.arange(lam.shape[1])
        out[:, idx, idx] = lam
        return out


def curvature_radii(h: SupportField) -> np.ndarray:
    """Eigenvalues of ``W = Hess h + h I``, shape ``(N, n-1)``."""
    der = support_derivatives(h)
    if h.dim == 2:
        return (der.second + h.values)[:, None]
    return np.column_stack([der.second + h.values, der.cot_term + h.values])


def convexity_margin(h: SupportField) -> float:
    """Smallest curvature-radius eigenvalue over all nodes (may be negative)."""
    return float(curvature_radii(h).min())


def is_certified_convex(h: SupportField) -> bool:
    return convexity_margin(h) > CONVEXITY_RTOL * float(np.max(np.abs(h.values))) and (
        h.values.min() > 0
    )


def check_convex(h: SupportField, what: str = "support function"):
    """Raise :class:`ConvexityError` unless ``h`` is positive and certified convex."""
    if h.values.min() <= 0:
        i = int(np.argmin(h.values))
        raise ConvexityError(
            f"{what} is not positive at node {i} (h={h.values[i]:.3e}); origin not interior",
            node=i,
            margin=float(h.values[i]),
        )
    lam = curvature_radii(h)
    worst = lam.min(axis=1)
    i = int(np.argmin(worst))
    if worst[i] <= CONVEXITY_RTOL * float(h.values.max()):
        raise ConvexityError(
            f"{what} lost convexity at node {i}: smallest curvature radius {worst[i]:.3e}",
            node=i,
            margin=float(worst[i]),
        )
    return lam


def curvature_data(h: SupportField, k: int) -> CurvatureData:
    n = h.dim
    if not 1 <= k <= n - 1:
        raise ValueError(f"k must satisfy 1 <= k <= {n - 1}, got {k}")
    lam = check_convex(h)
    m = n - k
    sigma = elementary_symmetric(lam, m)
    d = lam.shape[1]
    cof = np.zeros((lam.shape[0], d, d))
    for p in range(d):
        others = np.delete(lam, p, axis=1)
        cof[:, p, p] = elementary_symmetric(others, m - 1) if others.shape[1] else (m == 1) * 1.0
    return CurvatureData(k=k, eigenvalues=lam, sigma=sigma, cofactor=cof)


# ------------------------------------------------------------- embeddings


def boundary_embedding(h: SupportField) -> np.ndarray:
    """Boundary points ``X = grad h + h x`` (inverse Gauss map), shape ``(N, n)``."""
    der = support_derivatives(h)
    g = h.grid
    return der.gradient[:, None] * g.tangents + h.values[:, None] * g.directions


def radial_from_support(h: SupportField) -> np.ndarray:
    """``rho = sqrt(h^2 + |grad h|^2)``, the radial function at the points ``X_i``."""
    der = support_derivatives(h)
    return np.sqrt(h.values**2 + der.gradient**2)


def minkowski_combination(h: SupportField, g: SupportField, t: float) -> SupportField:
    """Support function ``h + t g`` of ``Omega + t Omega'``; checked for convexity."""
    _require_same_grid(h.grid, g.grid)
    out = SupportField(h.grid, h.values + t * g.values)
    check_convex(out, what=f"Minkowski combination at t={t}")
    return out
