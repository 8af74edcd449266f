import math

import numpy as np
import pytest

from torsionflow.flow import DensityField, FlowConfig, run
from torsionflow.interior import MfsConfig, interior_solve
from torsionflow.lab import (
    IdentityReport,
    ball_torsion,
    battery_passed,
    hadamard_fd_check,
    hadamard_sweep,
    lemma45_identities,
    monotonicity_audit,
    phi_invariance_audit,
)
from torsionflow.sphere import SphereGrid, ball, ellipse
from torsionflow.storage import read_timeseries, write_timeseries


def _by_name(reports):
    return {r.name: r for r in reports}


# ------------------------------------------------------------- Hadamard


def test_hadamard_disk_grows_like_pi_over_two():
    g = SphereGrid.circle(64)
    rep = hadamard_fd_check(ball(g, 1.0), ball(g, 1.0), 1e-4, 1)
    assert rep.lhs == pytest.approx(math.pi / 2, abs=1e-5)
    assert rep.rhs == pytest.approx(math.pi / 2, abs=1e-5)


def test_hadamard_ball_k2():
    g = SphereGrid.axisymmetric(32)
    rep = hadamard_fd_check(ball(g, 1.0), ball(g, 1.0), 1e-4, 2)
    exact = 4 * math.pi / (3 * math.sqrt(3))
    assert rep.lhs == pytest.approx(exact, abs=1e-4)
    assert rep.rhs == pytest.approx(exact, abs=1e-4)


def test_hadamard_ellipse_with_shifted_disk_direction():
    g = SphereGrid.circle(128)
    rep = hadamard_fd_check(ellipse(g, 1.5, 1.0), ball(g, 1.0, center=(0.2, 0.0)), 1e-4, 1)
    assert rep.passed and rep.relerr <= 1e-3
    assert rep.params["eps"] == 1e-4


def test_hadamard_second_order_trend_on_ball():
    g = SphereGrid.circle(64)
    reps, order = hadamard_sweep(ball(g, 1.0), ball(g, 1.0), 1, (1e-2, 1e-3, 1e-4))
    errs = [r.relerr for r in reps]
    assert errs[0] > errs[1] > errs[2]
    assert order == pytest.approx(2.0, abs=0.25)


def test_hadamard_default_eps_scales_with_body():
    g = SphereGrid.circle(64)
    rep = hadamard_fd_check(ball(g, 2.0), ball(g, 1.0), None, 1)
    assert rep.params["eps"] == pytest.approx(2e-4)


# --------------------------------------------------- boundary Hessian


def test_boundary_hessian_disk_is_exact():
    body = ball(SphereGrid.circle(64), 1.0)
    reps = _by_name(lemma45_identities(body, interior_solve(body, 1), 1))
    assert reps["boundary-hessian(iii)"].lhs == pytest.approx(np.full(64, 0.5))
    assert reps["boundary-hessian(iii)"].relerr <= 1e-12
    assert reps["boundary-hessian(i)"].relerr <= 1e-12


def test_boundary_hessian_ball_k2_factor_two_is_reported():
    body = ball(SphereGrid.axisymmetric(32), 1.0)
    reps = _by_name(lemma45_identities(body, interior_solve(body, 2), 2))
    iii = reps["boundary-hessian(iii)"]
    np.testing.assert_allclose(iii.lhs, 1 / math.sqrt(3), rtol=1e-13)
    np.testing.assert_allclose(iii.rhs, 1 / (2 * math.sqrt(3)), rtol=1e-13)
    assert iii.relerr == pytest.approx(1.0, rel=1e-12)  # |lhs - rhs| / |rhs|
    assert not iii.passed
    assert reps["level-set tangential Hessian"].relerr <= 1e-12


def test_boundary_hessian_ellipse_item_i():
    body = ellipse(SphereGrid.circle(256), 2.0, 1.0)
    reps = _by_name(lemma45_identities(body, interior_solve(body, 1, MfsConfig(placement="normal")), 1))
    assert reps["boundary-hessian(i)"].relerr <= 1e-4
    assert reps["boundary-hessian(ii)"].relerr <= 1e-4
    assert reps["k=1 normal Hessian"].relerr <= 1e-4


def test_boundary_hessian_item_i_converges_at_least_second_order():
    cfg = MfsConfig(placement="normal")
    errs = []
    for n in (64, 128, 256):
        body = ellipse(SphereGrid.circle(n), 2.0, 1.0)
        rep = _by_name(lemma45_identities(body, interior_solve(body, 1, cfg), 1))["boundary-hessian(i)"]
        errs.append(rep.relerr)
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(orders >= 2.0), (errs, orders)


# ------------------------------------------------------------- audits


@pytest.fixture(scope="module")
def short_run():
    g = SphereGrid.circle(64)
    return run(ellipse(g, 1.2, 1.0), DensityField.constant(g), 1, FlowConfig(max_steps=60))


def test_audits_pass_on_flow(short_run):
    assert monotonicity_audit(short_run).passed
    phi = phi_invariance_audit(short_run)
    assert phi.passed and phi.relerr <= 1e-12


def test_reversed_trajectory_is_caught(short_run):
    rep = monotonicity_audit(list(reversed(short_run.reports)))
    assert not rep.passed
    assert rep.lhs < 0


def test_audits_replay_from_csv(short_run, tmp_path):
    path = tmp_path / "ts.csv"
    write_timeseries(path, short_run.reports)
    replay = read_timeseries(path)
    for audit in (monotonicity_audit, phi_invariance_audit):
        a, b = audit(short_run), audit(replay)
        assert (a.lhs, a.rhs, a.relerr) == (b.lhs, b.rhs, b.relerr)


def test_audits_on_plain_dict_rows():
    rows = [{"T_tilde": 1.0, "phi": 2.0}, {"T_tilde": 1.0, "phi": 2.0}]
    assert monotonicity_audit(rows).relerr == 0.0
    assert phi_invariance_audit(rows).relerr == 0.0


def test_euler_and_rk2_both_conserve_phi():
    # Phi is a linear functional of h and the discrete rhs has zero f-weighted
    # mean, so neither integrator drifts beyond rounding
    g = SphereGrid.circle(64)
    f = DensityField.fourier(g, [1.0, 0.1, 0.0])
    drifts = {}
    for integ in ("euler", "rk2"):
        cfg = FlowConfig(integrator=integ, dt_max=1e-2, dt_init=1e-2, safety=1.0, max_steps=10)
        drifts[integ] = phi_invariance_audit(run(ellipse(g, 1.2, 1.0), f, 1, cfg)).relerr
    assert max(drifts.values()) <= 1e-13


# ------------------------------------------------------------- battery


def test_ball_torsion_closed_forms():
    assert ball_torsion(2, 1, 1.0) == pytest.approx(math.pi / 8)
    assert ball_torsion(3, 1, 2.0) == pytest.approx(4 * math.pi * 32 / 45)
    assert ball_torsion(3, 2, 1.0) == pytest.approx(4 * math.pi / (15 * math.sqrt(3)))


def test_report_serialization_and_gating():
    ok = IdentityReport("a", 1.0, 1.0, 0.0, {"n": np.int64(3)}, "x", 1e-6)
    bad = IdentityReport("b", np.array([1.0]), np.array([2.0]), 0.5, {}, "y", 1e-6, gating=False)
    d = bad.to_dict()
    assert d["lhs"] == [1.0] and d["pass"] is False and d["gating"] is False
    assert ok.to_dict()["params"] == {"n": 3}
    assert battery_passed([ok, bad])
    assert not battery_passed([ok, IdentityReport("c", 0, 0, math.nan, tol=1.0)])
