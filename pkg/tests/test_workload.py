# third party
import numpy as np
import pandas as pd
import pytest

# Continuum absolute
from continuum_sim.exceptions.exceptions import MixtureNotNormalized, NonPositiveRate
from continuum_sim.model.types import TaskKind
from continuum_sim.utils.rng import child_generator
from continuum_sim.workload import (
    classify_task,
    dump_workload,
    expected_task_rate,
    generate_stream,
    sample_interarrival,
)
from continuum_sim.workload.generator import WORKLOAD_COLUMNS


def test_sample_interarrival_mean():
    rng = np.random.default_rng(7)
    draws = [sample_interarrival(4.0, rng) for _ in range(20000)]
    assert np.mean(draws) == pytest.approx(0.25, rel=0.03)
    assert min(draws) >= 0.0


@pytest.mark.parametrize("rate", [0.0, -1.0])
def test_sample_interarrival_rejects_non_positive_rates(rate):
    with pytest.raises(NonPositiveRate):
        sample_interarrival(rate, np.random.default_rng(0))


def test_classify_task_frequencies():
    rng = np.random.default_rng(11)
    mixture = {TaskKind.SIMPLE: 0.8, TaskKind.COMPLEX: 0.15, TaskKind.CLOUD_ONLY: 0.05}
    draws = [classify_task(mixture, rng) for _ in range(20000)]
    assert draws.count(TaskKind.SIMPLE) / len(draws) == pytest.approx(0.8, abs=0.015)
    assert draws.count(TaskKind.CLOUD_ONLY) / len(draws) == pytest.approx(0.05, abs=0.01)


def test_classify_task_rejects_bad_mixture():
    with pytest.raises(MixtureNotNormalized):
        classify_task({TaskKind.SIMPLE: 0.7}, np.random.default_rng(0))


def test_child_generators_are_independent_of_other_keys():
    a = child_generator(42, "workload", "drone-cpu-0").random(5)
    b = child_generator(42, "workload", "drone-cpu-0").random(5)
    c = child_generator(42, "workload", "drone-cpu-1").random(5)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_stream_is_deterministic(drone_short):
    first = generate_stream(drone_short, 42)
    second = generate_stream(drone_short, 42)
    other = generate_stream(drone_short, 43)
    assert np.array_equal(first.created_at, second.created_at)
    assert np.array_equal(first.kind, second.kind)
    assert np.array_equal(first.origin, second.origin)
    assert len(other) != len(first) or not np.array_equal(first.created_at, other.created_at)


def test_stream_order_and_origins(drone_hour):
    stream = generate_stream(drone_hour, 1)
    assert np.all(np.diff(stream.created_at) >= 0)
    assert stream.created_at[0] >= 0 and stream.created_at[-1] < drone_hour.duration_s
    origins = {stream.device_ids[o] for o in np.unique(stream.origin)}
    assert "gateway" not in origins and "cloud" not in origins
    assert len(origins) == 10
    # 10 devices at 0.1 tasks/s for an hour
    assert abs(len(stream) - 3600) < 300


def test_stream_follows_mixture(drone_hour):
    counts = generate_stream(drone_hour, 5).kind_counts()
    total = sum(counts.values())
    assert counts[TaskKind.SIMPLE] / total == pytest.approx(0.8, abs=0.03)
    assert counts[TaskKind.COMPLEX] / total == pytest.approx(0.15, abs=0.03)


def test_payload_ranges(sensor_short):
    stream = generate_stream(sensor_short, 3)
    normal = stream.kinds.index(TaskKind.NORMAL)
    payloads = stream.payload_bytes[stream.kind == normal]
    assert payloads.min() >= 100 and payloads.max() <= 1000
    assert len(np.unique(payloads)) > 10


def test_periodic_streams_tick_once_per_period(safety_short):
    stream = generate_stream(safety_short, 9)
    vital = stream.kinds.index(TaskKind.VITAL_SIGN)
    wearable = stream.device_ids.index("wearable-00")
    ticks = stream.created_at[(stream.kind == vital) & (stream.origin == wearable)]
    assert len(ticks) in (599, 600)
    assert np.allclose(np.diff(ticks), 1.0)


def test_vehicles_use_the_scenario_mixture(safety_short):
    stream = generate_stream(safety_short, 9)
    vehicle = stream.device_ids.index("vehicle-0")
    kinds = {stream.kinds[k] for k in stream.kind[stream.origin == vehicle]}
    assert kinds == {TaskKind.NORMAL}


def test_expected_task_rate(drone, safety):
    assert expected_task_rate(drone) == pytest.approx(1.0)
    assert expected_task_rate(safety) > 25.0


def test_task_records(drone_short):
    stream = generate_stream(drone_short, 42)
    task = stream.task(0)
    assert task.id == 0
    assert task.created_at == stream.created_at[0]
    assert task.task_class.kind is stream.kinds[stream.kind[0]]
    assert sum(1 for _ in stream.tasks()) == len(stream)


def test_dump_workload(drone_short, tmp_path):
    stream = generate_stream(drone_short, 42)
    path = tmp_path / "workload.csv"
    dump_workload(stream, path)
    frame = pd.read_csv(path)
    assert list(frame.columns) == WORKLOAD_COLUMNS
    assert len(frame) == len(stream)
    assert set(frame["class"]) <= {"Simple", "Complex", "CloudOnly"}
