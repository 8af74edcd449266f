"""Interior Dirichlet problem ``S_k(D^2 u) = 1`` in a convex body, ``u = 0`` on its boundary.

Sign convention: ``u <= 0`` inside (``u`` convex), so on a ball of radius ``R``
``u = c_{n,k} (|y|^2 - R^2)`` with ``2 c_{n,k} = binom(n, k)^(-1/k)``.  The
boundary trace ``|Du|`` equals ``Du . x`` at the point with outer normal ``x``.

Two backends ship:

* ``mfs-poisson`` (k = 1, any smooth convex body): ``u = |y - y0|^2 / (2n) + w``
  where ``w`` is a combination of fundamental solutions centred on charges
  outside the body plus a constant, fitted by least squares so that ``u = 0``
  at the boundary points.  Tikhonov regularization damps the charge
  strengths; the constant is left unpenalized.  In dim 3 the body is
  axisymmetric and each charge is a ring, discretized by ``ring_points``
  equal point charges.
* ``ball-closed-form`` (any k, origin-centred balls; for k = 1 only when
  ``h`` is constant to rounding).

General-geometry solvers for ``k >= 2`` plug in behind :func:`interior_solve`.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field, replace
from math import comb
from typing import Optional

import numpy as np

from .errors import CapabilityError, SolverError
from .sphere import (
    SupportField,
    boundary_embedding,
    check_convex,
    elementary_symmetric,
)

logger = logging.getLogger(__name__)

BALL_RTOL = 1e-8
BOUND_TOL = 1e-3
N_RADIAL = 16


@dataclass(frozen=True)
class MfsConfig:
    charge_dilation: float = 1.8
    n_charges: Optional[int] = None  # default: n_collocation / oversampling
    regularization: float = 1e-12  # Tikhonov parameter relative to s_max^2
    oversampling: float = 2.0
    ring_points: int = 64  # point charges per ring (dim 3 only)
    max_condition: float = 1e12
    # "dilation": X_i scaled about the centroid by charge_dilation;
    # "normal": X_i + normal_offset * mean(h) * x_i (better on elongated bodies)
    placement: str = "dilation"
    normal_offset: float = 1.0

    def __post_init__(self):
        if not self.charge_dilation >= 1.2:
            raise ValueError("charge_dilation must be >= 1.2")
        if self.placement not in ("dilation", "normal"):
            raise ValueError(f"placement must be 'dilation' or 'normal', got {self.placement!r}")
        if not self.normal_offset > 0:
            raise ValueError("normal_offset must be positive")
        if self.oversampling < 1.0:
            raise ValueError("oversampling must be >= 1")
        if self.regularization < 0:
            raise ValueError("regularization must be non-negative")
        if self.n_charges is not None and self.n_charges < 1:
            raise ValueError("n_charges must be positive")
        if self.ring_points < 4:
            raise ValueError("ring_points must be >= 4")

    def charges_for(self, n_collocation: int) -> int:
        m = self.n_charges if self.n_charges is not None else int(n_collocation // self.oversampling)
        if m > n_collocation:
            raise ValueError(f"n_charges={m} exceeds the {n_collocation} collocation points")
        return max(m, 1)


def hessian_constant(n: int, k: int) -> float:
    """``c_{n,k}`` with ``S_k(2 c I_n) = 1``."""
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= n, got n={n}, k={k}")
    return 0.5 * comb(n, k) ** (-1.0 / k)


# ------------------------------------------------------------ kernels


def _ring_charges(rings: np.ndarray, ring_points: int) -> np.ndarray:
    phi = 2.0 * np.pi * (np.arange(ring_points) + 0.5) / ring_points
    r, z = rings[:, 0:1], rings[:, 1:2]
    pts = np.stack(
        [r * np.cos(phi), r * np.sin(phi), np.broadcast_to(z, r.shape[:1] + phi.shape)], axis=-1
    )
    return pts.reshape(-1, 3)


def _point_charges(dim, charges, ring_points):
    if dim == 2:
        return charges, 1
    return _ring_charges(charges, ring_points), ring_points


def _basis(dim, y, q, order):
    """Fundamental solutions at points ``y`` for charges ``q``.

    Returns value ``(m, Q)``, and for ``order >= 1`` gradient ``(m, Q, n)``,
    for ``order >= 2`` Hessian ``(m, Q, n, n)``.
    """
    d = y[:, None, :] - q[None, :, :]
    r2 = np.einsum("mqi,mqi->mq", d, d)
    out = []
    if dim == 2:
        out.append(0.5 * np.log(r2))
        if order >= 1:
            out.append(d / r2[..., None])
        if order >= 2:
            eye = np.eye(2)
            out.append(
                eye / r2[..., None, None] - 2.0 * d[..., :, None] * d[..., None, :] / (r2**2)[..., None, None]
            )
        return out
    r = np.sqrt(r2)
    c = 1.0 / (4.0 * np.pi)
    out.append(-c / r)
    if order >= 1:
        out.append(c * d / (r2 * r)[..., None])
    if order >= 2:
        r3 = (r2 * r)[..., None, None]
        r5 = (r2 * r2 * r)[..., None, None]
        out.append(c * (np.eye(3) / r3 - 3.0 * d[..., :, None] * d[..., None, :] / r5))
    return out


def _design_matrix(dim, y, charges, ring_points):
    q, per = _point_charges(dim, charges, ring_points)
    (val,) = _basis(dim, y, q, 0)
    if per > 1:
        val = val.reshape(len(y), -1, per).mean(axis=2)
    return val


# ------------------------------------------------------------ solution


@dataclass(frozen=True, eq=False)
class InteriorSolution:
    """Solution of ``S_k(D^2 u) = 1`` with evaluators for ``u``, ``Du``, ``D^2 u``.

    ``u(y) = quadratic * |y - centroid|^2 + constant + sum_j coefficients[j] * phi_j(y)``.
    """

    backend: str
    dim: int
    k: int
    centroid: np.ndarray
    quadratic: float
    constant: float
    charges: np.ndarray  # dim 2: (Q, 2) points; dim 3: (Q, 2) ring (radius, z)
    coefficients: np.ndarray
    boundary_gradient: np.ndarray
    ring_points: int = 64
    boundary_points: Optional[np.ndarray] = None
    boundary_residual: float = 0.0
    tangential_defect: float = 0.0
    residual_report: float = 0.0
    condition: float = 1.0
    body: Optional[SupportField] = field(default=None, repr=False)

    def _expand(self, y, order):
        y = np.atleast_2d(np.asarray(y, dtype=float))
        if y.shape[1] != self.dim:
            raise ValueError(f"points must have {self.dim} coordinates")
        rel = y - self.centroid
        res = [self.quadratic * np.einsum("mi,mi->m", rel, rel) + self.constant]
        if order >= 1:
            res.append(2.0 * self.quadratic * rel)
        if order >= 2:
            res.append(np.broadcast_to(2.0 * self.quadratic * np.eye(self.dim), (len(y), self.dim, self.dim)).copy())
        if self.coefficients.size:
            q, per = _point_charges(self.dim, self.charges, self.ring_points)
            coef = np.repeat(self.coefficients / per, per)
            parts = _basis(self.dim, y, q, order)
            res[0] = res[0] + parts[0] @ coef
            if order >= 1:
                res[1] = res[1] + np.einsum("mqi,q->mi", parts[1], coef)
            if order >= 2:
                res[2] = res[2] + np.einsum("mqij,q->mij", parts[2], coef)
        return res

    def u(self, y) -> np.ndarray:
        return self._expand(y, 0)[0]

    def gradient(self, y) -> np.ndarray:
        return self._expand(y, 1)[1]

    def hessian(self, y) -> np.ndarray:
        return self._expand(y, 2)[2]

    # snapshot: {backend, centroid, charges[], coefficients[], boundary_gradient[]} + evaluation extras
    def to_dict(self) -> dict:
        return {
            "backend": self.backend,
            "centroid": self.centroid.tolist(),
            "charges": self.charges.tolist(),
            "coefficients": self.coefficients.tolist(),
            "boundary_gradient": self.boundary_gradient.tolist(),
            "dim": self.dim,
            "k": self.k,
            "quadratic": self.quadratic,
            "constant": self.constant,
            "ring_points": self.ring_points,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict) -> "InteriorSolution":
        dim = int(d["dim"])
        charges = np.asarray(d["charges"], dtype=float).reshape(-1, 2)
        return cls(
            backend=d["backend"],
            dim=dim,
            k=int(d["k"]),
            centroid=np.asarray(d["centroid"], dtype=float),
            quadratic=float(d["quadratic"]),
            constant=float(d["constant"]),
            charges=charges,
            coefficients=np.asarray(d["coefficients"], dtype=float),
            boundary_gradient=np.asarray(d["boundary_gradient"], dtype=float),
            ring_points=int(d.get("ring_points", 64)),
        )

    @classmethod
    def from_json(cls, text: str) -> "InteriorSolution":
        return cls.from_dict(json.loads(text))


def _check_gradient_bounds(sol_grad, lam, n, k):
    """Comparison with rolling balls of the extreme curvature radii."""
    two_c = 2.0 * hessian_constant(n, k)
    lo = two_c * lam.min() * (1.0 - BOUND_TOL)
    hi = two_c * lam.max() * (1.0 + BOUND_TOL)
    bad = (sol_grad < lo) | (sol_grad > hi)
    if np.any(bad):
        i = int(np.argmax(bad))
        raise SolverError(
            f"boundary gradient {sol_grad[i]:.6g} at node {i} outside comparison bounds "
            f"[{lo:.6g}, {hi:.6g}]"
        )


def _finish(sol: InteriorSolution, body: SupportField, lam) -> InteriorSolution:
    X = boundary_embedding(body)
    x = body.grid.directions
    uX, Du = sol._expand(X, 1)
    grad = np.einsum("mi,mi->m", Du, x)
    if np.any(grad <= 0):
        i = int(np.argmin(grad))
        raise SolverError(f"non-positive boundary gradient {grad[i]:.3e} at node {i}: failed solve")
    norm = np.linalg.norm(Du, axis=1)
    defect = float(np.max(np.abs(norm - grad) / norm))
    resid = float(np.max(np.abs(uX)))
    _check_gradient_bounds(grad, lam, body.dim, sol.k)
    grad.setflags(write=False)
    return replace(
        sol,
        boundary_gradient=grad,
        boundary_points=X,
        boundary_residual=resid,
        tangential_defect=defect,
        body=body,
    )


def solve_poisson_mfs(body: SupportField, cfg: Optional[MfsConfig] = None) -> InteriorSolution:
    """Torsion function (k = 1) by the method of fundamental solutions."""
    cfg = cfg or MfsConfig()
    lam = check_convex(body, what="body")
    n = body.dim
    X = boundary_embedding(body)
    w = body.grid.weights
    centroid = (w @ X) / w.sum()
    if n == 3:
        centroid = np.array([0.0, 0.0, centroid[2]])
    m = cfg.charges_for(len(X))
    idx = np.unique(np.round(np.linspace(0, len(X), m, endpoint=False)).astype(int))
    if cfg.placement == "dilation":
        src = centroid + cfg.charge_dilation * (X[idx] - centroid)
    else:
        src = X[idx] + cfg.normal_offset * float(np.mean(body.values)) * body.grid.directions[idx]
    charges = src if n == 2 else np.column_stack([src[:, 0], src[:, 2]])

    quad = 1.0 / (2.0 * n)
    rel = X - centroid
    rhs = -quad * np.einsum("mi,mi->m", rel, rel)
    G = _design_matrix(n, X, charges, cfg.ring_points)
    # The additive constant is eliminated exactly (columns centred) so the
    # filter acts on the charge strengths only; otherwise a near-constant
    # combination of charges competes with it under regularization.
    G_mean, rhs_mean = G.mean(axis=0), rhs.mean()
    U, s, Vt = np.linalg.svd(G - G_mean, full_matrices=False)
    lam_t = cfg.regularization * s[0] ** 2
    cond = s[0] / max(s[-1], np.sqrt(lam_t))
    if not np.isfinite(cond) or cond > cfg.max_condition:
        raise SolverError(
            f"ill-conditioned collocation (condition ~{cond:.2e}); increase regularization "
            "or reduce n_charges"
        )
    filt = s / (s**2 + lam_t)
    strengths = Vt.T @ (filt * (U.T @ (rhs - rhs_mean)))
    coef = np.append(strengths, rhs_mean - G_mean @ strengths)
    sol = InteriorSolution(
        backend="mfs-poisson",
        dim=n,
        k=1,
        centroid=centroid,
        quadratic=quad,
        constant=float(coef[-1]),
        charges=charges,
        coefficients=coef[:-1],
        boundary_gradient=np.empty(0),
        ring_points=cfg.ring_points,
        condition=float(cond),
    )
    sol = _finish(sol, body, lam)
    logger.debug("mfs solve: %d charges, residual %.2e, cond %.2e", len(idx), sol.boundary_residual, cond)
    return sol


def ball_solution(n: int, k: int, R: float, body: Optional[SupportField] = None) -> InteriorSolution:
    """Closed-form radial solution ``c_{n,k}(|y|^2 - R^2)`` on the origin-centred ball."""
    if not 1 <= k <= n - 1:
        raise ValueError(f"need 1 <= k <= n-1, got n={n}, k={k}")
    if not R > 0:
        raise ValueError("radius must be positive")
    c = hessian_constant(n, k)
    sol = InteriorSolution(
        backend="ball-closed-form",
        dim=n,
        k=k,
        centroid=np.zeros(n),
        quadratic=c,
        constant=-c * R * R,
        charges=np.zeros((0, 2)),
        coefficients=np.zeros(0),
        boundary_gradient=np.empty(0),
    )
    if body is None:
        return replace(sol, boundary_gradient=np.array([2.0 * c * R]))
    return _finish(sol, body, check_convex(body, what="body"))


def ball_radius(body: SupportField, rtol: float = BALL_RTOL) -> Optional[float]:
    """Radius if ``h`` is constant within ``rtol`` (origin-centred ball), else None."""
    mean = float(np.mean(body.values))
    if np.max(np.abs(body.values - mean)) <= rtol * mean:
        return mean
    return None


def interior_solve(body: SupportField, k: int, cfg: Optional[MfsConfig] = None) -> InteriorSolution:
    n = body.dim
    if not 1 <= k <= n - 1:
        raise ValueError(f"need 1 <= k <= {n - 1}, got {k}")
    if k == 1:
        # an exact centred ball gets the closed form so that it is stationary
        # to rounding; anything else, however round, goes through MFS
        R = ball_radius(body, rtol=8 * np.finfo(float).eps)
        sol = solve_poisson_mfs(body, cfg) if R is None else ball_solution(n, 1, R, body)
    else:
        R = ball_radius(body)
        if R is None:
            raise CapabilityError(
                f"no interior solver for k={k} on a non-ball body in dim {n}; "
                "a fully nonlinear backend must be registered at interior_solve"
            )
        sol = ball_solution(n, k, R, body)
    return replace(sol, residual_report=hessian_residual(sol, interior_samples(body)))


def boundary_gradient(sol: InteriorSolution, body: SupportField) -> np.ndarray:
    """``|Du|`` at each boundary point ``X_i`` computed as ``Du(X_i) . x_i``."""
    X = boundary_embedding(body)
    g = np.einsum("mi,mi->m", sol.gradient(X), body.grid.directions)
    if np.any(g <= 0):
        i = int(np.argmin(g))
        raise SolverError(f"non-positive boundary gradient at node {i}: failed solve")
    return g


# --------------------------------------------------------- checks/quadrature


def interior_samples(body: SupportField, levels=(0.2, 0.5, 0.8), max_per_level: int = 16) -> np.ndarray:
    """A small cloud of strictly interior points on shrunken copies of the boundary."""
    X = boundary_embedding(body)
    stride = max(1, len(X) // max_per_level)
    return np.concatenate([s * X[::stride] for s in levels])


def contains(body: SupportField, points, rtol: float = 1e-12) -> np.ndarray:
    """True for points strictly inside the polygon cut out by the support half-spaces."""
    p = np.atleast_2d(points)
    return np.all(p @ body.grid.directions.T < body.values * (1.0 - rtol), axis=1)


def hessian_operator(H: np.ndarray, k: int) -> np.ndarray:
    """``S_k`` of a stack of symmetric matrices."""
    if k == 1:
        return np.trace(H, axis1=-2, axis2=-1)
    return elementary_symmetric(np.linalg.eigvalsh(H), k)


def hessian_residual(sol: InteriorSolution, sample_points, body: Optional[SupportField] = None) -> float:
    """``max |S_k(D^2 u) - 1|`` over points that must lie strictly inside the body."""
    body = body if body is not None else sol.body
    pts = np.atleast_2d(sample_points)
    if body is not None and not np.all(contains(body, pts)):
        raise ValueError("hessian_residual: sample point outside the body")
    return float(np.max(np.abs(hessian_operator(sol.hessian(pts), sol.k) - 1.0)))


def body_quadrature(body: SupportField, n_radial: int = N_RADIAL):
    """Nodes and weights for ``int_Omega g dy``.

    Parametrizes the body by ``y = s X(x)`` with ``s in (0, 1)`` and
    ``x`` on the sphere: ``dy = s^{n-1} h(x) sigma_{n-1}(x) ds dx``.
    """
    n = body.dim
    lam = check_convex(body, what="body")
    area = elementary_symmetric(lam, n - 1)
    X = boundary_embedding(body)
    s, ws = np.polynomial.legendre.leggauss(n_radial)
    s, ws = 0.5 * (s + 1.0), 0.5 * ws
    pts = (s[:, None, None] * X[None, :, :]).reshape(-1, n)
    wts = (ws[:, None] * s[:, None] ** (n - 1) * (body.grid.weights * body.values * area)[None, :]).ravel()
    return pts, wts


def integrate_over_body(body: SupportField, g, n_radial: int = N_RADIAL) -> float:
    pts, wts = body_quadrature(body, n_radial)
    return float(wts @ g(pts))
