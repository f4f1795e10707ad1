import numpy as np
import pytest

import cyclecert as cc
from cyclecert.config import PipelineConfig
from cyclecert.errors import CertificateBlockedError, InputError

from conftest import VDP_DELTA0, VDP_GAMMA, VDP_H, VDP_X0


@pytest.fixture(scope="module")
def vdp_attraction(vdp, vdp_cert):
    cert = cc.certify_attraction(
        vdp_cert, vdp, PipelineConfig(), horizon=10.0, reference_d=-0.34
    )
    assert cert.certified, cert.failure
    return cert


def test_exponent_linearity(vdp):
    exp = cc.contraction_exponent(
        vdp, VDP_X0, 1e-3, VDP_GAMMA, VDP_DELTA0, PipelineConfig(), horizon=10.0
    )
    # K(z, h) - K(z, 0) = h * sigma_{N1} exactly (as represented)
    assert exp.Kh == exp.K0 + exp.h * exp.sigma_last
    assert exp.Kh - exp.K0 == pytest.approx(exp.h * exp.sigma_last, rel=1e-12)
    assert exp.K_max == max(exp.K0, exp.Kh)
    assert exp.exponent_at(0.0) == exp.K0
    assert exp.exponent_at(exp.h) == pytest.approx(exp.Kh)


def test_exponent_consistent_with_tube(vdp, vdp_cert):
    # same rate chain: K at the in-segment return offset equals the log of
    # the tube contraction ratio
    exp = cc.contraction_exponent(
        vdp, VDP_X0, VDP_H, VDP_GAMMA, VDP_DELTA0, PipelineConfig(), horizon=10.0
    )
    tube = vdp_cert.tube
    s_star = tube.R1 - (tube.N1 - 1) * tube.h
    lhs = exp.exponent_at(s_star)
    rhs = np.log(tube.delta_at(tube.R1) / tube.delta0)
    assert abs(lhs - rhs) <= 1e-10


def test_exponent_forced_constant_rate(vdp):
    traj = cc.simulate(vdp, VDP_X0, 1e-3, 7000)
    section = cc.Section.through(vdp, traj.nodes[0])
    R1, N1, _ = cc.return_times(
        traj, section, 1, cc.default_exclusion(1e-3, 0.1)
    ).first()
    c = -0.7
    tube = cc.build_tube(vdp, traj, R1, N1, 0.1, 0.015, 2.3, sigma_override=c)
    K0 = 1e-3 * c * (N1 - 1)
    assert float(1e-3 * tube.sigma[: N1 - 1].sum()) == pytest.approx(K0)
    assert np.log(tube.delta[N1] / 0.1) == pytest.approx(c * N1 * 1e-3, rel=1e-12)


def test_exponent_no_return_blocks(linear):
    with pytest.raises(CertificateBlockedError):
        cc.contraction_exponent(
            linear, (1.0, 0.0), 1e-2, 0.015, 0.1, PipelineConfig(), horizon=5.0
        )


def test_harmonic_gamma_floor_not_certifiable(harmonic):
    # neutral circle flow: transverse measure 0, the floor forces positive
    # rates, so the loop exponent is positive and certification must refuse
    exp = cc.contraction_exponent(
        harmonic, (1.0, 0.0), 1e-3, 0.015, 0.05, PipelineConfig(), horizon=10.0
    )
    assert exp.K_max > 0.0
    assert exp.K_max == pytest.approx(1.5 * 0.015 * 2 * np.pi, rel=0.05)


def test_sweep_single_sample_is_center(vdp):
    disk = cc.SectionDisk(
        np.asarray(VDP_X0), VDP_DELTA0, vdp.f_raw(np.asarray(VDP_X0))
    )
    cfg = PipelineConfig(lambda_stride=50)
    sweep = cc.sweep_Y0(vdp, disk, 1, 1e-3, VDP_GAMMA, cfg, horizon=10.0)
    solo = cc.contraction_exponent(
        vdp, VDP_X0, 1e-3, VDP_GAMMA, VDP_DELTA0, cfg, horizon=10.0
    )
    assert sweep.d == pytest.approx(solo.K_max)


def test_sweep_monotone_in_samples(vdp):
    disk = cc.SectionDisk(
        np.asarray(VDP_X0), VDP_DELTA0, vdp.f_raw(np.asarray(VDP_X0))
    )
    cfg = PipelineConfig(lambda_stride=50)
    d3 = cc.sweep_Y0(vdp, disk, 3, 2e-3, VDP_GAMMA, cfg, horizon=10.0).d
    d5 = cc.sweep_Y0(vdp, disk, 5, 2e-3, VDP_GAMMA, cfg, horizon=10.0).d
    # the 5-point grid contains the 3-point grid
    assert d5 >= d3 - 1e-15


def test_unstable_focus_sweep_positive():
    field = cc.load_system({"id": "unstable-focus", "params": {"growth": 0.05}})
    exp = cc.contraction_exponent(
        field, (1.0, 0.0), 2e-4, 0.015, 0.1, PipelineConfig(), horizon=20.0
    )
    assert exp.K_max > 0.0


def test_compute_D_values():
    # direct arithmetic on the error-floor formula
    D = cc.compute_D(2.22, 1.516, 0.015, 0.9, 1.1)
    assert D == pytest.approx(2.22 * (2 * 1.516 / (0.015 * 0.9) + 2.1), rel=1e-12)
    assert D == pytest.approx(503.26, abs=0.05)
    # degenerate constant field: only the b + 1 term remains
    assert cc.compute_D(2.0, 0.0, 0.015, 0.9, 1.1) == pytest.approx(2.0 * 2.1)
    # doubling gamma shrinks the dominant term
    assert cc.compute_D(2.22, 1.516, 0.03, 0.9, 1.1) < D
    with pytest.raises(InputError):
        cc.compute_D(2.22, 1.516, 0.015, 0.0, 1.1)
    with pytest.raises(InputError):
        cc.compute_D(2.22, 1.516, -1.0, 0.9, 1.1)


def test_integral_harmonic_zero(harmonic):
    traj = cc.simulate(harmonic, [1.0, 0.0], 1e-3, 6300)
    chk = cc.integral_criterion(harmonic, traj, 0.015, period=2 * np.pi)
    assert chk.value == pytest.approx(0.0, abs=1e-12)


def test_integral_constant_negative(linear):
    # mu_perp = -1 everywhere, below gamma: weight 1/2, integral = -T/2
    T = 2.0
    traj = cc.simulate(linear, [1.0, 0.0], 1e-3, 2000)
    chk = cc.integral_criterion(linear, traj, 0.015, period=T)
    assert chk.value == pytest.approx(-T / 2, rel=1e-6)


def test_integral_vdp_negative(vdp_attraction):
    assert vdp_attraction.integral.value < 0.0


def test_attraction_requires_certified_existence(vdp, linear):
    failed = cc.certify_existence(
        linear, (1.0, 0.0), 1e-2, 0.1, 0.015, PipelineConfig(), horizon=5.0
    )
    with pytest.raises(InputError, match="requires a certified"):
        cc.certify_attraction(failed, linear)


def test_attraction_vdp_certificate(vdp_attraction, vdp_cert):
    cert = vdp_attraction
    assert cert.d <= -0.30
    assert cert.sample_count == 11
    assert all(e.K_max <= cert.d + 1e-15 for e in cert.exponents)
    assert cert.D == pytest.approx(
        cc.compute_D(
            vdp_cert.constants.M_C,
            vdp_cert.constants.L,
            VDP_GAMMA,
            vdp_cert.constants.a,
            vdp_cert.constants.b,
        )
    )
    doc = cert.to_dict()
    assert doc["verdict"] == "certified"
    assert len(doc["samples"]) == 11
    assert doc["integral"]["four_d"] == pytest.approx(4 * cert.d)
    assert doc["reference_d"] == -0.34
    assert doc["reference_gap"] == pytest.approx(cert.d + 0.34)
    import jsonschema

    from cyclecert.output import load_schema

    jsonschema.validate(doc, load_schema("attraction_certificate.schema.json"))


def test_harmonic_attraction_refused(harmonic):
    # existence already fails for the neutral flow (tube radius grows under
    # the floor), so the basin stage refuses its precondition
    cert = cc.certify_existence(
        harmonic, (1.0, 0.0), 1e-3, 0.05, 0.015, PipelineConfig(), horizon=10.0
    )
    assert not cert.certified
    with pytest.raises(InputError):
        cc.certify_attraction(cert, harmonic)


def test_certified_implies_empirical_attraction(vdp, vdp_cert):
    # surrogate check of convergence: per-period distance to a settled
    # reference orbit strictly decreases for initial-disk starts.  Query and
    # orbit use the same fine step so both approach the same discrete cycle,
    # and the distance goes to the orbit polyline, not just its nodes;
    # otherwise step-size mismatch puts a floor under the distances.
    T = vdp_cert.eta.T_hi
    h_fine = VDP_H / 5
    settle = cc.simulate(vdp, VDP_X0, h_fine, int(10 * T / h_fine))
    orbit = settle.nodes[-int(T / h_fine) :]
    A = orbit[:-1]
    seg = orbit[1:] - A
    seg_len2 = (seg ** 2).sum(axis=1)

    def dist_to_orbit(p):
        t = np.clip(((p - A) * seg).sum(axis=1) / seg_len2, 0.0, 1.0)
        proj = A + t[:, None] * seg
        return float(np.sqrt(((proj - p) ** 2).sum(axis=1)).min())

    disk = vdp_cert.tube.y0_disk
    w = np.array([-disk.normal[1], disk.normal[0]]) / np.linalg.norm(disk.normal)
    rng = np.random.default_rng(31)
    # magnitudes bounded away from zero so the start is visibly off-cycle
    u = rng.uniform(0.5, 1.0, size=10) * rng.choice([-1.0, 1.0], size=10)
    for uk in u:
        y0 = disk.center + uk * disk.radius * w
        traj = cc.simulate(vdp, y0, h_fine, int(5 * T / h_fine))
        dists = [
            dist_to_orbit(traj.dense_point(min(p * T, traj.horizon)))
            for p in range(1, 6)
        ]
        assert all(d2 < d1 for d1, d2 in zip(dists, dists[1:])), dists
