import pytest

from circleclt import CircleMap, MapSchedule, Observable


@pytest.fixture
def doubling():
    return CircleMap(2, 0.0, 0.0)


@pytest.fixture
def perturbed():
    return CircleMap(2, 0.05, 0.3)


@pytest.fixture
def cos_obs():
    return Observable.cos()


@pytest.fixture
def alternating_pair():
    return [CircleMap(3, 0.08, 0.0), CircleMap(2, 0.05, 0.5)]


@pytest.fixture
def doubling_schedule(doubling):
    return MapSchedule.cycled([doubling], 64)
