import numpy as np
import pytest

from backend.lti_model import StateSpaceModel


def pytest_addoption(parser):
    parser.addoption(
        "--run-slow",
        help="Also run the preset-scale experiments (Net1, full scenario grid).",
        action="store_true", default=False
    )


def pytest_collection_modifyitems(config, items):
    if config.getoption("run_slow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --run-slow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture(scope="session")
def run_slow(request) -> bool:
    return request.config.getoption("run_slow")


def random_stable_model(rng: np.random.Generator, n_x: int, n_u: int, n_y: int,
                        radius: float = 0.7, feedthrough: bool = True,
                        orthogonal: bool = False, dt: float = 1.0) -> StateSpaceModel:
    """Random plant with spectral radius ``radius``; ``orthogonal`` puts every
    pole on that circle with a normal A, which keeps the Hankel well conditioned."""
    if orthogonal:
        Q, _ = np.linalg.qr(rng.standard_normal((n_x, n_x)))
        A = radius * Q
    else:
        A = rng.standard_normal((n_x, n_x))
        A *= radius / np.max(np.abs(np.linalg.eigvals(A)))
    B = rng.standard_normal((n_x, n_u))
    C = rng.standard_normal((n_y, n_x))
    D = rng.standard_normal((n_y, n_u)) if feedthrough else np.zeros((n_y, n_u))
    return StateSpaceModel(A, B, C, D, dt)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240611)


@pytest.fixture
def make_plant(rng):
    def factory(n_x, n_u=1, n_y=1, **kwargs):
        return random_stable_model(rng, n_x, n_u, n_y, **kwargs)
    return factory


@pytest.fixture
def scalar_lag() -> StateSpaceModel:
    return StateSpaceModel([[0.5]], [[1.0]], [[1.0]], [[0.0]])
