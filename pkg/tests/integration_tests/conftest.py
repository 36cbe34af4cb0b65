import pytest

from backend.bench.config import METHODS, ExperimentConfig

FAST_STEPS = 1000


@pytest.fixture(scope="function", params=METHODS, ids=METHODS)
def method(request):
    return request.param


@pytest.fixture(scope="function")
def make_config():
    def factory(method, order=15, **kwargs):
        kwargs.setdefault("steps", FAST_STEPS)
        return ExperimentConfig(network="three-node", method=method, order=order, **kwargs)
    return factory
