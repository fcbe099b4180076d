"""
Shared fixtures: the packaged presets, cut down to horizons short enough for unit tests.
"""
# stdlib
import json

# third party
import pytest

# Continuum absolute
from continuum_sim.model.scenario import load_scenario, with_duration


@pytest.fixture(scope="session")
def drone():
    return load_scenario("drone_fleet")


@pytest.fixture(scope="session")
def sensor():
    return load_scenario("sensor_network")


@pytest.fixture(scope="session")
def safety():
    return load_scenario("worker_safety")


@pytest.fixture(scope="session")
def drone_hour(drone):
    return with_duration(drone, 3600.0)


@pytest.fixture(scope="session")
def drone_short(drone):
    return with_duration(drone, 600.0)


@pytest.fixture(scope="session")
def sensor_short(sensor):
    return with_duration(sensor, 60.0)


@pytest.fixture(scope="session")
def safety_short(safety):
    return with_duration(safety, 600.0)


@pytest.fixture
def write_json(tmp_path):
    def _write(name, document):
        path = tmp_path / name
        with open(path, "w") as f:
            json.dump(document, f)
        return path

    return _write
