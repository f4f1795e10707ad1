import numpy as np
import pytest

import cyclecert as cc
from cyclecert.config import PipelineConfig
from cyclecert.errors import InputError, SynchronizationLostError
from cyclecert.syncerr import TAU_SYNC, ReferenceSolution

from conftest import VDP_DELTA0, VDP_GAMMA, VDP_H, VDP_X0


def test_self_synchronization_exact(vdp):
    traj = cc.simulate(vdp, VDP_X0, 1e-3, 3000)
    ref = ReferenceSolution(traj=traj, refine=1)
    series = cc.synchronize(ref, traj, traj.nodes[0])
    assert np.abs(series.errors).max() <= 1e-12
    assert np.abs(series.thetas - series.times).max() <= 1e-12


def test_self_synchronization_with_substeps(vdp):
    # in-segment samples ride the same polyline, so errors stay zero there too
    traj = cc.simulate(vdp, VDP_X0, 1e-3, 1000)
    ref = ReferenceSolution(traj=traj, refine=1)
    series = cc.synchronize(ref, traj, traj.nodes[0], substeps=4)
    assert series.times.size == 4 * 1000 + 1
    assert np.abs(series.errors).max() <= 1e-12
    assert np.abs(series.thetas - series.times).max() <= 1e-12


def test_residual_bound_holds(vdp):
    ref = ReferenceSolution.compute(vdp, np.asarray(VDP_X0), 1e-3, 4.0, refine=50)
    traj = cc.simulate(vdp, VDP_X0, 1e-3, 3000)
    series = cc.synchronize(ref, traj, np.asarray(VDP_X0))
    f_nodes = traj.f_nodes
    scale = np.linalg.norm(f_nodes[: series.times.size], axis=1)
    assert np.all(series.residuals <= TAU_SYNC * scale * 2.0 + 1e-30)


def test_theta_nondecreasing(vdp):
    ref = ReferenceSolution.compute(vdp, np.asarray(VDP_X0), 1e-3, 4.0, refine=50)
    traj = cc.simulate(vdp, VDP_X0, 1e-3, 3000)
    series = cc.synchronize(ref, traj, np.asarray(VDP_X0))
    assert np.all(np.diff(series.thetas) >= 0)


def test_linear_flow_matches_analytic(linear):
    # radial field: the synchronized error is eps * x(t), which tracks
    # eps * exp(-t) up to O(h + h_ref) uniformly
    eps = 0.05
    h = 1e-3
    x0 = np.array([1.0, 0.0])
    y0 = np.array([1.0, eps])  # on the section through x0 (normal = -x0)
    traj = cc.simulate(linear, x0, h, int(5.0 / h))
    ref = ReferenceSolution.compute(linear, y0, h, 6.0, refine=100)
    series = cc.synchronize(ref, traj, y0)
    analytic = eps * np.exp(-series.times)
    dev = np.abs(series.errors - analytic).max()
    assert dev <= 3.0 * eps * (h + h / 100)
    assert series.errors[0] == pytest.approx(eps)
    assert np.all(np.diff(series.errors) <= 1e-12)


def test_reference_must_start_at_y0(vdp):
    traj = cc.simulate(vdp, VDP_X0, 1e-3, 100)
    ref = ReferenceSolution.compute(vdp, np.asarray(VDP_X0), 1e-3, 1.0, refine=10)
    with pytest.raises(InputError):
        cc.synchronize(ref, traj, np.array([9.9, 9.9]))


def test_synchronization_lost_reports_index(vdp):
    # reference far too short: the window runs off its horizon
    traj = cc.simulate(vdp, VDP_X0, 1e-3, 2000)
    ref = ReferenceSolution.compute(vdp, np.asarray(VDP_X0), 1e-3, 0.05, refine=10)
    with pytest.raises(SynchronizationLostError) as exc:
        cc.synchronize(ref, traj, np.asarray(VDP_X0))
    assert exc.value.sample_index > 0


def test_tube_membership_inside_disk(vdp, vdp_cert):
    tube, traj = vdp_cert.tube, vdp_cert.trajectory
    disk = tube.y0_disk
    w = np.array([-disk.normal[1], disk.normal[0]]) / np.linalg.norm(disk.normal)
    y0 = disk.center + 0.6 * disk.radius * w
    ref = ReferenceSolution.compute(vdp, y0, VDP_H, 1.1 * tube.horizon, refine=100)
    series = cc.synchronize(ref, traj, y0, t_max=tube.horizon)
    assert cc.tube_membership_check(series, tube) == []


def test_tube_membership_outside_disk_violates(vdp, vdp_cert):
    # starting at twice the disk radius breaks the precondition, so early
    # violations are expected
    tube, traj = vdp_cert.tube, vdp_cert.trajectory
    disk = tube.y0_disk
    w = np.array([-disk.normal[1], disk.normal[0]]) / np.linalg.norm(disk.normal)
    y0 = disk.center + 2.0 * disk.radius * w
    ref = ReferenceSolution.compute(vdp, y0, VDP_H, 1.1 * tube.horizon, refine=100)
    series = cc.synchronize(ref, traj, y0, t_max=tube.horizon)
    violations = cc.tube_membership_check(series, tube)
    assert violations and violations[0] == 0


def test_tube_membership_self_sync_clean(vdp, vdp_cert):
    tube, traj = vdp_cert.tube, vdp_cert.trajectory
    ref = ReferenceSolution(traj=traj, refine=1)
    series = cc.synchronize(ref, traj, traj.nodes[0], t_max=tube.horizon)
    assert cc.tube_membership_check(series, tube) == []


def test_tube_membership_requires_step_floor(vdp):
    traj = cc.simulate(vdp, VDP_X0, 1e-3, 7000)
    section = cc.Section.through(vdp, traj.nodes[0])
    R1, N1, _ = cc.return_times(
        traj, section, 1, cc.default_exclusion(1e-3, 0.1)
    ).first()
    tube = cc.build_tube(vdp, traj, R1, N1, 0.1, 0.015, 2.3, sigma_override=0.0)
    ref = ReferenceSolution(traj=traj, refine=1)
    series = cc.synchronize(ref, traj, traj.nodes[0], t_max=tube.horizon)
    with pytest.raises(InputError, match="step floor"):
        cc.tube_membership_check(series, tube)


def test_error_curves_deterministic(vdp):
    report = cc.error_curve_experiment(
        vdp,
        VDP_X0,
        (1.8037, -0.5057),
        [1e-3, 1e-3],
        horizon=6.5,
        delta0=VDP_DELTA0,
        gamma=VDP_GAMMA,
        config=PipelineConfig(lambda_stride=50),
        cert_horizon=10.0,
        refine=20,
    )
    r1, r2 = report.runs
    assert np.array_equal(r1.series.errors, r2.series.errors)
    assert np.array_equal(r1.series.thetas, r2.series.thetas)
    assert r1.D == r2.D


def test_error_curve_bounds_filled(vdp):
    report = cc.error_curve_experiment(
        vdp,
        VDP_X0,
        (1.8037, -0.5057),
        [1e-3],
        horizon=6.5,
        delta0=VDP_DELTA0,
        gamma=VDP_GAMMA,
        config=PipelineConfig(lambda_stride=50),
        refine=20,
    )
    run = report.runs[0]
    assert run.series.bounds is not None
    assert run.series.bounds.min() >= run.D * run.h - 1e-12
    summary = run.summary()
    assert set(summary) >= {"h", "tail_max", "Dh", "pass"}
