"""Normalized curvature flow for the support function.

    dh/dt = (h / f) |Du|^{k+1} sigma_{n-k} - eta(t) h,
    eta   = int h |Du|^{k+1} sigma_{n-k} dx / int h f dx.

Every right-hand-side evaluation solves the interior problem on the current
body.  Steps are explicit (Euler or Heun's RK2) with a step size limited by
the relative change of ``h``; a step whose trial state loses positivity or
convexity is retried with half the step.  The flow stops when the
stationarity residual ``max |density / eta - f| / f`` falls below
``residual_tol``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import ConvexityError, SolverError, StiffnessError
from .functionals import (
    FunctionalReport,
    eta_normalization,
    phi_functional,
    torsional_measure_density,
    torsional_rigidity_boundary,
    torsional_rigidity_volume,
)
from .interior import InteriorSolution, MfsConfig, interior_solve
from .sphere import CurvatureData, SphereGrid, SupportField, curvature_data, fourier_field

logger = logging.getLogger(__name__)

MONITOR_FACTOR = 1e-3


@dataclass(frozen=True, eq=False)
class DensityField:
    """Prescribed positive density ``f`` on the grid."""

    grid: SphereGrid
    values: np.ndarray
    tag: str = ""

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != (self.grid.n_nodes,):
            raise ValueError(f"expected {self.grid.n_nodes} density values, got shape {v.shape}")
        if not v.min() > 0:
            raise ValueError("density must be strictly positive")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def constant(cls, grid: SphereGrid, c: float = 1.0) -> "DensityField":
        return cls(grid, np.full(grid.n_nodes, float(c)), f"constant:{c!r}")

    @classmethod
    def fourier(cls, grid: SphereGrid, coeffs) -> "DensityField":
        return cls(grid, fourier_field(grid, coeffs), "fourier:" + ",".join(map(repr, coeffs)))

    def scaled(self, c: float) -> "DensityField":
        return DensityField(self.grid, c * self.values, f"{c!r}*({self.tag})")


@dataclass(frozen=True)
class FlowConfig:
    dt_init: Optional[float] = None  # default: 1e-3 x initial time scale
    dt_min: float = 1e-9
    dt_max: float = 1e-3
    safety: float = 1e-2
    residual_tol: float = 1e-6
    max_steps: int = 200_000
    integrator: str = "rk2"
    growth: float = 1.5
    mfs: MfsConfig = field(default_factory=MfsConfig)

    def __post_init__(self):
        if self.integrator not in ("euler", "rk2"):
            raise ValueError(f"integrator must be 'euler' or 'rk2', got {self.integrator!r}")
        if not 0 < self.dt_min <= self.dt_max:
            raise ValueError("need 0 < dt_min <= dt_max")
        if self.dt_init is not None and not self.dt_min <= self.dt_init <= self.dt_max:
            raise ValueError("need dt_min <= dt_init <= dt_max")
        if not self.safety > 0 or not self.residual_tol > 0 or self.max_steps < 0:
            raise ValueError("safety, residual_tol must be positive and max_steps >= 0")


@dataclass(frozen=True, eq=False)
class Evaluation:
    """Everything computed from one interior solve at one support function."""

    h: SupportField
    sol: InteriorSolution
    curv: CurvatureData
    density: np.ndarray
    eta: float
    rhs: np.ndarray
    residual: float
    T_tilde: float
    phi: float


def evaluate(h: SupportField, f: DensityField, k: int, mfs: Optional[MfsConfig] = None) -> Evaluation:
    sol = interior_solve(h, k, mfs)
    curv = curvature_data(h, k)
    dens = torsional_measure_density(sol.boundary_gradient, curv, k)
    eta = eta_normalization(h, f, dens)
    fv = f.values
    rhs = h.values * dens / fv - eta * h.values
    return Evaluation(
        h=h,
        sol=sol,
        curv=curv,
        density=dens,
        eta=eta,
        rhs=rhs,
        residual=float(np.max(np.abs(dens / eta - fv) / fv)),
        T_tilde=torsional_rigidity_boundary(h, sol.boundary_gradient, curv, k),
        phi=phi_functional(h, fv),
    )


def flow_rhs(h: SupportField, f: DensityField, k: int, mfs: Optional[MfsConfig] = None) -> np.ndarray:
    """Per-node ``dh/dt``."""
    return evaluate(h, f, k, mfs).rhs


@dataclass(frozen=True, eq=False)
class FlowState:
    t: float
    h: SupportField
    last_report: FunctionalReport
    residual: float
    dt: float
    steps: int = 0
    evaluation: Optional[Evaluation] = field(default=None, repr=False)

    @property
    def tau(self) -> float:
        return 1.0 / self.last_report.eta


def _report(ev: Evaluation, t: float, k: int, with_volume: bool) -> FunctionalReport:
    tv = math.nan
    poh = math.nan
    if with_volume:
        tv = torsional_rigidity_volume(ev.sol, ev.h, k)
        poh = abs(tv ** (1.0 / k) - ev.T_tilde) / ev.T_tilde
    lam = ev.curv.eigenvalues
    return FunctionalReport(
        T_volume=tv,
        T_boundary=ev.T_tilde,
        phi=ev.phi,
        eta=ev.eta,
        pohozaev_relerr=poh,
        t=t,
        min_h=float(ev.h.values.min()),
        max_h=float(ev.h.values.max()),
        min_lambda=float(lam.min()),
        max_lambda=float(lam.max()),
        residual=ev.residual,
    )


def _state(ev: Evaluation, t: float, dt: float, steps: int, k: int, with_volume: bool) -> FlowState:
    return FlowState(
        t=t,
        h=ev.h,
        last_report=_report(ev, t, k, with_volume),
        residual=ev.residual,
        dt=dt,
        steps=steps,
        evaluation=ev,
    )


def initial_state(
    h0: SupportField, f: DensityField, k: int, cfg: FlowConfig, with_volume: bool = False
) -> FlowState:
    ev = evaluate(h0, f, k, cfg.mfs)
    if cfg.dt_init is not None:
        dt = cfg.dt_init
    else:
        rate = float(np.max(np.abs(ev.rhs) / h0.values))
        dt = cfg.dt_max if rate == 0 else 1e-3 / rate
        dt = min(max(dt, cfg.dt_min), cfg.dt_max)
    return _state(ev, 0.0, dt, 0, k, with_volume)


def _try(h: SupportField, values: np.ndarray, f, k, mfs) -> Evaluation:
    return evaluate(SupportField(h.grid, values), f, k, mfs)


def step(
    state: FlowState, f: DensityField, k: int, cfg: FlowConfig, with_volume: bool = False
) -> FlowState:
    """Advance one accepted step; halves ``dt`` on convexity/solver failure."""
    ev0 = state.evaluation or evaluate(state.h, f, k, cfg.mfs)
    h = state.h
    k1 = ev0.rhs
    rate = float(np.max(np.abs(k1) / h.values))
    dt = min(state.dt, cfg.dt_max)
    if rate > 0:
        dt = min(dt, cfg.safety / rate)
    while True:
        if dt < cfg.dt_min:
            raise StiffnessError(
                f"time step underflow below dt_min={cfg.dt_min:g} at t={state.t:.6g}",
                diagnostics={
                    "t": state.t,
                    "steps": state.steps,
                    "min_h": float(h.values.min()),
                    "min_lambda": float(ev0.curv.eigenvalues.min()),
                    "residual": ev0.residual,
                },
            )
        try:
            ev1 = _try(h, h.values + dt * k1, f, k, cfg.mfs)
            if cfg.integrator == "rk2":
                ev1 = _try(h, h.values + 0.5 * dt * (k1 + ev1.rhs), f, k, cfg.mfs)
            break
        except (ConvexityError, SolverError) as exc:
            logger.debug("step rejected at dt=%.3e: %s", dt, exc)
            dt *= 0.5
    nxt = min(cfg.dt_max, cfg.growth * dt)
    return _state(ev1, state.t + dt, nxt, state.steps + 1, k, with_volume)


def diagnostics(state: FlowState, initial: Optional[FlowState] = None) -> dict:
    """Report row plus empirical C^0 / C^2 bound monitors.

    An alert fires when ``min h`` or the smallest curvature radius drops below
    ``1e-3`` of its initial value, or the largest grows beyond ``1e3`` times.
    """
    r = state.last_report
    ref = (initial or state).last_report
    alerts = []
    if r.min_h < MONITOR_FACTOR * ref.min_h:
        alerts.append("min_h")
    if r.max_h > ref.max_h / MONITOR_FACTOR:
        alerts.append("max_h")
    if r.min_lambda < MONITOR_FACTOR * ref.min_lambda:
        alerts.append("min_lambda")
    if r.max_lambda > ref.max_lambda / MONITOR_FACTOR:
        alerts.append("max_lambda")
    out = {c: getattr(r, c) for c in ("t", "phi", "T_tilde", "eta", "min_h", "max_h", "min_lambda", "max_lambda", "residual")}
    out["alerts"] = alerts
    return out


@dataclass
class FlowResult:
    reports: list
    snapshots: list  # (step, t, SupportField)
    final: FlowState
    converged: bool
    alerts: list

    @property
    def h(self) -> SupportField:
        return self.final.h

    @property
    def tau(self) -> float:
        return self.final.tau

    @property
    def eta(self) -> float:
        return self.final.last_report.eta

    @property
    def steps(self) -> int:
        return self.final.steps


def run(
    h0: SupportField,
    f: DensityField,
    k: int,
    cfg: Optional[FlowConfig] = None,
    snapshot_every: int = 0,
    with_volume: bool = False,
    callback: Optional[Callable[[FlowState], None]] = None,
) -> FlowResult:
    """Integrate until the stationarity residual is below ``cfg.residual_tol``.

    Returns the full time series of reports; ``converged`` is False if
    ``max_steps`` was exhausted first.
    """
    cfg = cfg or FlowConfig()
    state = initial_state(h0, f, k, cfg, with_volume)
    init = state
    reports = [state.last_report]
    snaps = [(0, 0.0, state.h)] if snapshot_every else []
    alerts = set()
    while state.residual > cfg.residual_tol and state.steps < cfg.max_steps:
        state = step(state, f, k, cfg, with_volume)
        reports.append(state.last_report)
        alerts.update(diagnostics(state, init)["alerts"])
        if snapshot_every and state.steps % snapshot_every == 0:
            snaps.append((state.steps, state.t, state.h))
        if callback is not None:
            callback(state)
    converged = state.residual <= cfg.residual_tol
    if not converged:
        logger.warning(
            "flow did not converge in %d steps (residual %.3e)", state.steps, state.residual
        )
    if snapshot_every and (not snaps or snaps[-1][0] != state.steps):
        snaps.append((state.steps, state.t, state.h))
    return FlowResult(reports, snaps, state, converged, sorted(alerts))
