import numpy as np
import pytest

from triquanta import ModelParams, build_space


@pytest.fixture(scope="session")
def tiny_space():
    return build_space(2, 2)


@pytest.fixture(scope="session")
def space6():
    return build_space(6, 6)


@pytest.fixture(scope="session")
def fig3a_params():
    """One-photon/one-phonon resonance with the fast dissipation set."""
    return ModelParams(
        delta_a=1.6, omega_drive=1.3, lam=0.15,
        kappa_a=0.25, kappa_b=0.25, gamma=0.025,
    )


@pytest.fixture(scope="session")
def closed_params():
    return ModelParams(delta_a=1.6, omega_drive=1.3, lam=0.15)


def rng(seed=1234):
    return np.random.default_rng(seed)


@pytest.fixture
def random_state():
    def make(space, seed=1234):
        g = np.random.default_rng(seed)
        amps = g.normal(size=space.total_dim) + 1j * g.normal(size=space.total_dim)
        from triquanta import StateVector

        return StateVector(space, amps / np.linalg.norm(amps))

    return make
