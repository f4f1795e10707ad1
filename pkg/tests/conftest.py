import pytest

import cyclecert as cc

VDP_X0 = (1.8929, -0.5383)
VDP_H = 1e-4
VDP_DELTA0 = 0.1
VDP_GAMMA = 0.015


@pytest.fixture(scope="session")
def vdp():
    return cc.load_system({"id": "vanderpol", "params": {"p": 0.3}})


@pytest.fixture(scope="session")
def harmonic():
    return cc.load_system({"id": "harmonic"})


@pytest.fixture(scope="session")
def linear():
    return cc.load_system({"id": "linear-stable", "params": {"rate": 1.0}})


@pytest.fixture(scope="session")
def vdp_cert(vdp):
    """Certified Van der Pol run at the reference parameters; shared because
    the full pipeline costs seconds."""
    cert = cc.certify_existence(
        vdp, VDP_X0, VDP_H, VDP_DELTA0, VDP_GAMMA, cc.PipelineConfig(), horizon=10.0
    )
    assert cert.certified, cert.failure
    return cert


@pytest.fixture(scope="session")
def vdp_traj(vdp_cert):
    return cert_traj(vdp_cert)


def cert_traj(cert):
    assert cert.trajectory is not None
    return cert.trajectory
