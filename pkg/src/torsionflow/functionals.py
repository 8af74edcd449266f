"""Scalar functionals of a solved body: torsional rigidity (two routes), the
torsional measure density, ``Phi`` and the flow normalization ``eta``."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import GridMismatchError, SolverError
from .interior import InteriorSolution, MfsConfig, integrate_over_body, interior_solve
from .sphere import CurvatureData, SupportField, curvature_data

CSV_COLUMNS = (
    "t",
    "phi",
    "T_tilde",
    "eta",
    "pohozaev_relerr",
    "min_h",
    "max_h",
    "min_lambda",
    "max_lambda",
    "residual",
)


@dataclass(frozen=True)
class FunctionalReport:
    T_volume: float
    T_boundary: float
    phi: float
    eta: float
    pohozaev_relerr: float
    t: float = 0.0
    min_h: float = math.nan
    max_h: float = math.nan
    min_lambda: float = math.nan
    max_lambda: float = math.nan
    residual: float = math.nan

    @property
    def T_tilde(self) -> float:
        return self.T_boundary

    @property
    def tau(self) -> float:
        return 1.0 / self.eta

    def row(self) -> list:
        return [getattr(self, c) for c in CSV_COLUMNS]

    @classmethod
    def from_row(cls, row: dict) -> "FunctionalReport":
        vals = {c: float(row[c]) for c in CSV_COLUMNS}
        vals["T_boundary"] = vals.pop("T_tilde")
        vals.setdefault("T_volume", math.nan)
        return cls(**vals)


def _as_values(field):
    return field.values if hasattr(field, "values") else np.asarray(field, dtype=float)


def volume_integral_of_u(sol: InteriorSolution, body: SupportField) -> float:
    return integrate_over_body(body, sol.u)


def torsional_rigidity_volume(sol: InteriorSolution, body: SupportField, k: int) -> float:
    """``T_k = (-int_Omega u dy)^k``."""
    iu = volume_integral_of_u(sol, body)
    if not iu < 0:
        raise SolverError(f"int u = {iu:.3e} is not negative: interior solution has the wrong sign")
    return (-iu) ** k


def torsional_measure_density(grad, curv: CurvatureData, k: int) -> np.ndarray:
    """Per-node density ``|Du|^{k+1} sigma_{n-k}`` of the k-torsional measure against ``dx``."""
    g = _as_values(grad)
    return g ** (k + 1) * curv.sigma


def torsional_rigidity_boundary(body: SupportField, grad, curv: CurvatureData, k: int) -> float:
    """``T~_k = 1/(k(n+2)) int h |Du|^{k+1} sigma_{n-k} dx``."""
    g = _as_values(grad)
    if g.shape != body.values.shape or curv.sigma.shape != body.values.shape:
        raise GridMismatchError("gradient trace / curvature data not on the body's grid")
    n = body.dim
    dens = torsional_measure_density(g, curv, k)
    return body.grid.integrate(body.values * dens) / (k * (n + 2))


def phi_functional(body: SupportField, f) -> float:
    """``Phi = int h f dx``."""
    return body.grid.integrate(body.values * _as_values(f))


def eta_normalization(body: SupportField, f, density) -> float:
    """``eta = int h density dx / int h f dx`` (equals ``k (n+2) T~_k / Phi``)."""
    phi = phi_functional(body, f)
    if phi == 0:
        raise ZeroDivisionError("Phi vanishes")
    return body.grid.integrate(body.values * _as_values(density)) / phi


def pohozaev_consistency(report: FunctionalReport, k: int = 1) -> float:
    """``|T_volume^{1/k} - T_boundary| / T_boundary``."""
    return abs(report.T_volume ** (1.0 / k) - report.T_boundary) / report.T_boundary


def functional_report(
    body: SupportField,
    f,
    k: int,
    mfs: Optional[MfsConfig] = None,
    sol: Optional[InteriorSolution] = None,
    t: float = 0.0,
    with_volume: bool = True,
) -> tuple[FunctionalReport, InteriorSolution, CurvatureData]:
    """Solve (unless ``sol`` is given) and evaluate every functional of ``body``."""
    sol = sol if sol is not None else interior_solve(body, k, mfs)
    curv = curvature_data(body, k)
    grad = sol.boundary_gradient
    tb = torsional_rigidity_boundary(body, grad, curv, k)
    dens = torsional_measure_density(grad, curv, k)
    fv = _as_values(f) if f is not None else np.ones_like(body.values)
    phi = phi_functional(body, fv)
    eta = eta_normalization(body, fv, dens)
    tv = torsional_rigidity_volume(sol, body, k) if with_volume else math.nan
    rep = FunctionalReport(
        T_volume=tv,
        T_boundary=tb,
        phi=phi,
        eta=eta,
        pohozaev_relerr=abs(tv ** (1.0 / k) - tb) / tb if with_volume else math.nan,
        t=t,
        min_h=float(body.values.min()),
        max_h=float(body.values.max()),
        min_lambda=float(curv.eigenvalues.min()),
        max_lambda=float(curv.eigenvalues.max()),
        residual=float(np.max(np.abs(dens / eta - fv) / fv)),
    )
    return rep, sol, curv
