"""Independent checks of the variational and pointwise identities.

Each check returns an :class:`IdentityReport` that records both sides, the
relative error and the exact formula variant evaluated.  Mismatches are
reported as found; nothing is rescaled to make a check pass.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Optional, Sequence

import numpy as np

from .functionals import (
    functional_report,
    torsional_measure_density,
    torsional_rigidity_boundary,
)
from .interior import InteriorSolution, MfsConfig, hessian_constant, interior_solve
from .sphere import (
    SphereGrid,
    SupportField,
    angular_derivatives,
    ball,
    ellipse,
    boundary_embedding,
    curvature_data,
    minkowski_combination,
)

MONOTONE_RTOL = 1e-9
PHI_DRIFT_TOL = 1e-5


@dataclass(frozen=True)
class IdentityReport:
    name: str
    lhs: object
    rhs: object
    relerr: float
    params: dict = field(default_factory=dict)
    variant: str = ""
    tol: float = math.inf
    gating: bool = True

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.relerr) and self.relerr <= self.tol)

    def to_dict(self) -> dict:
        def plain(v):
            if isinstance(v, np.ndarray):
                return v.tolist()
            if isinstance(v, (np.floating, np.integer)):
                return v.item()
            return v

        return {
            "identity": self.name,
            "params": {k: plain(v) for k, v in self.params.items()},
            "variant": self.variant,
            "lhs": plain(self.lhs),
            "rhs": plain(self.rhs),
            "relerr": float(self.relerr),
            "tol": float(self.tol),
            "pass": self.passed,
            "gating": self.gating,
        }


def torsion_tilde(body: SupportField, k: int, mfs: Optional[MfsConfig] = None) -> float:
    sol = interior_solve(body, k, mfs)
    return torsional_rigidity_boundary(body, sol.boundary_gradient, curvature_data(body, k), k)


# ------------------------------------------------------------- Hadamard


def hadamard_fd_check(
    body: SupportField,
    direction: SupportField,
    eps: Optional[float] = None,
    k: int = 1,
    mfs: Optional[MfsConfig] = None,
    tol: float = 1e-3,
) -> IdentityReport:
    """Central difference of ``T~_k`` along ``h + eps*theta`` against ``(1/k) int theta dmu``."""
    if eps is None:
        eps = 1e-4 * float(np.mean(body.values))
    plus = minkowski_combination(body, direction, eps)
    minus = minkowski_combination(body, direction, -eps)
    lhs = (torsion_tilde(plus, k, mfs) - torsion_tilde(minus, k, mfs)) / (2.0 * eps)
    sol = interior_solve(body, k, mfs)
    dens = torsional_measure_density(sol.boundary_gradient, curvature_data(body, k), k)
    rhs = body.grid.integrate(direction.values * dens) / k
    return IdentityReport(
        name="hadamard",
        lhs=lhs,
        rhs=rhs,
        relerr=abs(lhs - rhs) / abs(rhs),
        params={"eps": eps, "k": k, "dim": body.dim, "n_nodes": body.grid.n_nodes},
        variant="[T(h+e*th) - T(h-e*th)]/(2e) vs (1/k) int th |Du|^(k+1) sigma_(n-k) dx",
        tol=tol,
    )


def hadamard_sweep(
    body: SupportField,
    direction: SupportField,
    k: int = 1,
    eps_values: Sequence[float] = (1e-2, 1e-3, 1e-4),
    mfs: Optional[MfsConfig] = None,
) -> tuple[list, float]:
    """Hadamard check over several ``eps``; also returns the observed order
    ``log(err_0/err_1)/log(eps_0/eps_1)`` from the two largest steps."""
    reps = [hadamard_fd_check(body, direction, e, k, mfs) for e in eps_values]
    e0, e1 = reps[0].relerr, reps[1].relerr
    order = math.log(e0 / e1) / math.log(eps_values[0] / eps_values[1]) if e1 > 0 else math.inf
    return reps, order


# ----------------------------------------------------- boundary Hessian


def _frames(body: SupportField):
    g = body.grid
    x = g.directions
    e1 = g.tangents
    if body.dim == 2:
        return x, [e1]
    e2 = np.zeros_like(x)
    e2[:, 1] = 1.0
    return x, [e1, e2]


def lemma45_identities(
    body: SupportField, sol: InteriorSolution, k: int, tol: float = 1e-4
) -> list[IdentityReport]:
    """Boundary Hessian identities against curvature data.

    Items (i) and (ii) are evaluated for the interior-positive solution
    ``-u`` (the convention in which ``|Du| = -<Du, x>``); item (iii) for the
    convex solution ``u``.  Two further relations that follow from the level
    set geometry alone are reported alongside: the tangential block equals
    ``|Du| W^{-1}`` for every k, and for k = 1 the normal component equals
    ``1 - |Du| tr W^{-1}``.
    """
    n = body.dim
    curv = curvature_data(body, k)
    X = boundary_embedding(body)
    H = sol.hessian(X)
    x, frame = _frames(body)
    E = np.stack(frame, axis=1)  # (N, n-1, n)
    grad = np.einsum("mi,mi->m", sol.gradient(X), x)
    sig = curv.sigma
    d = curv.cofactor
    params = {"dim": n, "k": k, "n_nodes": body.grid.n_nodes, "backend": sol.backend}

    Hp = -H
    tan_p = np.einsum("mai,mij,mbj->mab", E, Hp, E)
    rhs_i = -(grad / sig)[:, None, None] * d
    scale = np.max(np.abs(rhs_i))
    rep_i = IdentityReport(
        "boundary-hessian(i)",
        tan_p,
        rhs_i,
        float(np.max(np.abs(tan_p - rhs_i)) / scale),
        params,
        "(D2(-u) e_i).e_j = -(1/sigma_(n-k)) |Du| d_ij",
        tol,
    )

    dg, _ = angular_derivatives(body.grid, grad)
    dgrad = np.zeros((len(grad), n - 1))
    dgrad[:, 0] = dg
    lhs_ii = np.einsum("mai,mij,mj->ma", E, Hp, x)
    rhs_ii = -np.einsum("mab,mb->ma", d, dgrad) / sig[:, None]
    rep_ii = IdentityReport(
        "boundary-hessian(ii)",
        lhs_ii,
        rhs_ii,
        float(np.max(np.abs(lhs_ii - rhs_ii)) / scale),
        params,
        "(D2(-u) e_i).x = -(1/sigma_(n-k)) |Du|_j d_ij  (error relative to max |(i) rhs|)",
        tol,
    )

    lhs_iii = np.einsum("mi,mij,mj->m", x, H, x)
    rhs_iii = (n - k) * grad / sig
    rep_iii = IdentityReport(
        "boundary-hessian(iii)",
        lhs_iii,
        rhs_iii,
        float(np.max(np.abs(lhs_iii - rhs_iii)) / np.max(np.abs(rhs_iii))),
        params,
        "(D2u x).x = (n-k)|Du|/sigma_(n-k), u convex",
        tol,
    )

    lam = curv.eigenvalues
    tan = np.einsum("mai,mij,mbj->mab", E, H, E)
    shape = np.zeros_like(tan)
    idx = np.arange(n - 1)
    shape[:, idx, idx] = grad[:, None] / lam
    rep_shape = IdentityReport(
        "level-set tangential Hessian",
        tan,
        shape,
        float(np.max(np.abs(tan - shape)) / np.max(np.abs(shape))),
        params,
        "(D2u e_i).e_j = |Du| (W^-1)_ij, u convex",
        tol,
    )
    reports = [rep_i, rep_ii, rep_iii, rep_shape]
    if k == 1:
        normal = 1.0 - grad * np.sum(1.0 / lam, axis=1)
        reports.append(
            IdentityReport(
                "k=1 normal Hessian",
                lhs_iii,
                normal,
                float(np.max(np.abs(lhs_iii - normal)) / np.max(np.abs(lhs_iii))),
                params,
                "(D2u x).x = 1 - |Du| tr(W^-1), u convex",
                tol,
            )
        )
    return reports


# ------------------------------------------------------ trajectory audits


def _series(trajectory, attr):
    rows = getattr(trajectory, "reports", trajectory)
    out = []
    for r in rows:
        out.append(float(r[attr]) if isinstance(r, dict) else float(getattr(r, attr)))
    return np.asarray(out)


def monotonicity_audit(trajectory: Iterable, rtol: float = MONOTONE_RTOL) -> IdentityReport:
    """Every step must satisfy ``dT~ >= -rtol * T~``."""
    T = _series(trajectory, "T_tilde")
    rel = np.diff(T) / T[:-1] if T.size > 1 else np.zeros(1)
    worst = float(rel.min())
    return IdentityReport(
        "monotonicity",
        worst,
        0.0,
        max(0.0, -worst) / rtol,
        {"steps": int(T.size - 1), "rtol": rtol},
        "min_j (T_(j+1) - T_j)/T_j >= -rtol; relerr is the violation in units of rtol",
        1.0,
    )


def phi_invariance_audit(trajectory: Iterable, tol: float = PHI_DRIFT_TOL) -> IdentityReport:
    phi = _series(trajectory, "phi")
    drift = float(np.max(np.abs(phi - phi[0])) / abs(phi[0]))
    return IdentityReport(
        "phi-invariance",
        float(phi[-1]),
        float(phi[0]),
        drift,
        {"steps": int(phi.size - 1)},
        "max_t |Phi(t) - Phi(0)| / Phi(0)",
        tol,
    )


# ------------------------------------------------------------ the battery

# Verbatim formulas that are known not to hold on the tested bodies.  They are
# still computed and reported, but do not decide the overall verdict.
NON_GATING = {
    "boundary-hessian(iii)": "stated normal-normal formula; disagrees with closed forms except n=2 balls",
}


def ball_torsion(n: int, k: int, R: float) -> float:
    """Closed form ``T~_k`` of the ball: ``-int c (|y|^2 - R^2) dy``."""
    c = hessian_constant(n, k)
    area = 2.0 * math.pi ** (n / 2) / math.gamma(n / 2)
    return c * area * R ** (n + 2) * 2.0 / (n * (n + 2))


def _closeness(name, value, target, params, variant, tol) -> IdentityReport:
    return IdentityReport(name, value, target, abs(value - target) / abs(target), params, variant, tol)


def ball_battery(radii=(0.5, 1.0, 2.0), cases=((2, 1), (3, 1), (3, 2)), n_nodes: int = 64) -> list:
    out = []
    for n, k in cases:
        g = SphereGrid.make(n, n_nodes)
        for R in radii:
            body = ball(g, R)
            rep, _, _ = functional_report(body, None, k)
            exact = ball_torsion(n, k, R)
            p = {"dim": n, "k": k, "R": R, "n_nodes": n_nodes}
            out.append(_closeness("ball T~ (volume)", rep.T_volume ** (1.0 / k), exact, p, "(-int u)", 1e-6))
            out.append(_closeness("ball T~ (boundary)", rep.T_boundary, exact, p, "1/(k(n+2)) int h dmu", 1e-6))
    return out


def pohozaev_battery(n_nodes: int = 256) -> list:
    g = SphereGrid.circle(n_nodes)
    body = ellipse(g, 2.0, 1.0)
    rep, sol, _ = functional_report(body, None, 1)
    p = {"dim": 2, "k": 1, "a": 2.0, "b": 1.0, "n_nodes": n_nodes}
    u0 = float(sol.u(np.zeros((1, 2)))[0])
    return [
        IdentityReport(
            "pohozaev", rep.T_volume, rep.T_boundary, rep.pohozaev_relerr, p,
            "|T_volume - T~_boundary| / T~", 1e-4,
        ),
        IdentityReport("ellipse u(0)", u0, -0.4, abs(u0 + 0.4), p, "absolute error vs -a^2 b^2/(2(a^2+b^2))", 1e-6),
    ]


def hadamard_battery(n_nodes: int = 128, eps_values=(1e-2, 1e-3, 1e-4)) -> list:
    out = []
    g2, g3 = SphereGrid.circle(n_nodes), SphereGrid.axisymmetric(max(16, n_nodes // 2))
    cases = [
        ("ball", ball(g2, 1.0), ball(g2, 1.0), 1),
        ("ball", ball(g3, 1.0), ball(g3, 1.0), 2),
        ("ellipse", ellipse(g2, 1.5, 1.0), ball(g2, 1.0, center=(0.2, 0.0)), 1),
    ]
    for label, body, direction, k in cases:
        reps, order = hadamard_sweep(body, direction, k, eps_values)
        out.append(reps[-1])
        out.append(
            IdentityReport(
                "hadamard order", order, 2.0, abs(order - 2.0) / 2.0,
                {"body": label, "dim": body.dim, "k": k, "eps": list(eps_values)},
                "log(err(eps0)/err(eps1)) / log(eps0/eps1)", 0.25,
            )
        )
    return out


def boundary_hessian_battery(n_nodes: int = 256) -> list:
    out = []
    g2, g3 = SphereGrid.circle(n_nodes), SphereGrid.axisymmetric(n_nodes // 2)
    for body, k in (
        (ellipse(g2, 2.0, 1.0), 1),
        (ellipse(g3, 1.5, 1.0), 1),
        (ball(g2, 1.0), 1),
        (ball(g3, 1.0), 1),
        (ball(g3, 1.0), 2),
    ):
        sol = interior_solve(body, k)
        for rep in lemma45_identities(body, sol, k):
            # for k >= 2 the stated (i) is off by the same factor as (iii)
            gating = rep.name not in NON_GATING and not (k >= 2 and rep.name == "boundary-hessian(i)")
            out.append(replace(rep, gating=gating))
    return out


def flow_battery(trajectory=None, n_nodes: int = 64, steps: int = 300) -> list:
    """Trajectory audits; runs a short ellipse flow when no trajectory is given."""
    from .flow import DensityField, FlowConfig, initial_state, step

    out = []
    if trajectory is None:
        g = SphereGrid.circle(n_nodes)
        f = DensityField.fourier(g, [1.0, 0.1, 0.0])
        cfg = FlowConfig()
        state = initial_state(ellipse(g, 1.2, 1.0), f, 1, cfg)
        ev = state.evaluation
        p = {"dim": 2, "k": 1, "n_nodes": n_nodes}
        phi_dot = g.integrate(f.values * ev.rhs)
        out.append(IdentityReport("f-weighted rhs", phi_dot, 0.0, abs(phi_dot) / ev.phi, p, "int f rhs dx / Phi", 1e-10))
        out.append(_closeness("eta * Phi", ev.eta * ev.phi, 4.0 * ev.T_tilde, p, "eta Phi = k(n+2) T~", 1e-12))
        trajectory = [state.last_report]
        for _ in range(steps):
            state = step(state, f, 1, cfg)
            trajectory.append(state.last_report)
    out.append(monotonicity_audit(trajectory))
    out.append(phi_invariance_audit(trajectory))
    return out


def verification_battery(trajectory=None, n_nodes: int = 256) -> list:
    """Every identity check; ``trajectory`` (reports or FlowResult) is audited if given."""
    return (
        ball_battery()
        + pohozaev_battery(n_nodes)
        + hadamard_battery(max(64, n_nodes // 2))
        + boundary_hessian_battery(n_nodes)
        + flow_battery(trajectory)
    )


def battery_passed(reports) -> bool:
    return all(r.passed for r in reports if r.gating)
