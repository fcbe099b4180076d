# stdlib
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, List, Mapping, Optional, Tuple, Union

# third party
import numpy as np
import pandas as pd

# Continuum absolute
from continuum_sim.exceptions.exceptions import MixtureNotNormalized, NonPositiveRate
from continuum_sim.model.types import (
    ArrivalProcess,
    DeviceSpec,
    ProcessingLocation,
    ScenarioConfig,
    TaskClass,
    TaskKind,
    WorkloadStream,
)
from continuum_sim.utils.rng import child_generator

log = logging.getLogger(__name__)

MIXTURE_TOLERANCE = 1e-9
WORKLOAD_COLUMNS = ["task_id", "origin", "class", "payload_bytes", "created_at_s"]


@dataclass
class Task:
    id: int
    origin_device: str
    task_class: TaskClass
    payload_bytes: int
    created_at: float
    completed_at: Optional[float] = None
    processed_at: Optional[ProcessingLocation] = None


def sample_interarrival(rate_per_s: float, rng: np.random.Generator) -> float:
    """
    Draws one exponential interarrival time, in seconds, with mean 1 / rate_per_s.

    Args:
        rate_per_s (float): The arrival rate in events per second.
        rng (np.random.Generator): The random stream to draw from.
    """
    if not rate_per_s > 0:
        raise NonPositiveRate(rate_per_s)
    return float(rng.exponential(1.0 / rate_per_s))


def _normalized(mixture: Mapping[TaskKind, float]) -> Tuple[List[TaskKind], np.ndarray]:
    kinds = list(mixture)
    probs = np.array([mixture[k] for k in kinds], dtype=float)
    total = math.fsum(probs)
    if not kinds or abs(total - 1.0) > MIXTURE_TOLERANCE or (probs < 0).any():
        raise MixtureNotNormalized("task_mixture", total)
    return kinds, probs


def classify_task(mixture: Mapping[TaskKind, float], rng: np.random.Generator) -> TaskKind:
    """Draws one task kind from the categorical distribution `mixture`."""
    kinds, probs = _normalized(mixture)
    return kinds[int(rng.choice(len(kinds), p=probs))]


def _poisson_times(rate_per_s: float, duration_s: float, rng: np.random.Generator) -> np.ndarray:
    if not rate_per_s > 0:
        raise NonPositiveRate(rate_per_s)
    chunks = []
    t0 = 0.0
    while True:
        expected = rate_per_s * (duration_s - t0)
        n = int(expected + 6.0 * math.sqrt(expected) + 16)
        arrivals = t0 + np.cumsum(rng.exponential(1.0 / rate_per_s, size=n))
        if arrivals[-1] >= duration_s:
            chunks.append(arrivals[arrivals < duration_s])
            break
        chunks.append(arrivals)
        t0 = arrivals[-1]
    return np.concatenate(chunks)


def _periodic_times(rate_per_s: float, duration_s: float, rng: np.random.Generator) -> np.ndarray:
    if not rate_per_s > 0:
        raise NonPositiveRate(rate_per_s)
    period = 1.0 / rate_per_s
    phase = rng.uniform(0.0, period)
    return phase + period * np.arange(int(math.ceil((duration_s - phase) / period)))


def _device_streams(scenario: ScenarioConfig, device: DeviceSpec) -> List[WorkloadStream]:
    if device.streams:
        return list(device.streams)
    # A None kind marks the default stream, classified by the scenario mixture.
    return [WorkloadStream(task_kind=None, rate_per_s=scenario.arrival_rate_per_device)]


@dataclass
class TaskStream:
    """
    A time-ordered task stream held column-wise. `origin` indexes `device_ids` and `kind`
    indexes `kinds`; the task id is the row position.
    """

    scenario: ScenarioConfig
    seed: int
    device_ids: Tuple[str, ...]
    kinds: Tuple[TaskKind, ...]
    created_at: np.ndarray
    origin: np.ndarray
    kind: np.ndarray
    payload_bytes: np.ndarray

    def __len__(self) -> int:
        return len(self.created_at)

    def task(self, i: int) -> Task:
        return Task(
            id=i,
            origin_device=self.device_ids[self.origin[i]],
            task_class=self.scenario.task_class(self.kinds[self.kind[i]]),
            payload_bytes=int(self.payload_bytes[i]),
            created_at=float(self.created_at[i]),
        )

    def tasks(self) -> Iterator[Task]:
        for i in range(len(self)):
            yield self.task(i)

    def kind_counts(self) -> Mapping[TaskKind, int]:
        counts = np.bincount(self.kind, minlength=len(self.kinds))
        return {k: int(c) for k, c in zip(self.kinds, counts)}

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "task_id": np.arange(len(self)),
                "origin": np.asarray(self.device_ids, dtype=object)[self.origin] if len(self) else [],
                "class": np.asarray([k.value for k in self.kinds], dtype=object)[self.kind] if len(self) else [],
                "payload_bytes": self.payload_bytes,
                "created_at_s": self.created_at,
            },
            columns=WORKLOAD_COLUMNS,
        )


def generate_stream(scenario: ScenarioConfig, seed: int) -> TaskStream:
    """
    Generates every task of the scenario horizon, sorted by creation time (ties by origin).

    Each device draws from its own child generator keyed on (seed, device id), so the
    stream is a pure function of (scenario, seed).

    Args:
        scenario (ScenarioConfig): A validated scenario.
        seed (int): The base seed of this run.

    Returns:
        TaskStream: The generated stream.
    """
    kinds = tuple(scenario.task_classes)
    kind_index = {k: i for i, k in enumerate(kinds)}
    mixture_kinds, mixture_probs = _normalized(scenario.task_mixture)
    mixture_codes = np.array([kind_index[k] for k in mixture_kinds])

    device_ids = tuple(d.id for d in scenario.devices)
    times, origins, codes, payloads = [], [], [], []
    for d_idx, device in enumerate(scenario.devices):
        if not device.generates_tasks:
            continue
        rng = child_generator(seed, "workload", device.id)
        for stream in _device_streams(scenario, device):
            if stream.process is ArrivalProcess.PERIODIC:
                t = _periodic_times(stream.rate_per_s, scenario.duration_s, rng)
            else:
                t = _poisson_times(stream.rate_per_s, scenario.duration_s, rng)
            if stream.task_kind is None:
                c = mixture_codes[rng.choice(len(mixture_kinds), size=len(t), p=mixture_probs)]
            else:
                c = np.full(len(t), kind_index[stream.task_kind])
            p = np.empty(len(t), dtype=np.int64)
            for code in np.unique(c):
                mask = c == code
                task_class = scenario.task_class(kinds[code])
                if task_class.payload_max_bytes is None:
                    p[mask] = task_class.payload_bytes
                else:
                    p[mask] = rng.integers(
                        task_class.payload_bytes, task_class.payload_max_bytes, size=int(mask.sum()), endpoint=True
                    )
            times.append(t)
            origins.append(np.full(len(t), d_idx))
            codes.append(c)
            payloads.append(p)

    if times:
        created_at = np.concatenate(times)
        origin = np.concatenate(origins)
        kind = np.concatenate(codes)
        payload = np.concatenate(payloads)
    else:
        created_at = np.empty(0)
        origin = kind = payload = np.empty(0, dtype=np.int64)
    order = np.lexsort((origin, created_at))
    log.debug(f"Generated {len(order)} tasks for {scenario.name.value} (seed {seed})")
    return TaskStream(
        scenario=scenario,
        seed=seed,
        device_ids=device_ids,
        kinds=kinds,
        created_at=created_at[order],
        origin=origin[order].astype(np.int64),
        kind=kind[order].astype(np.int64),
        payload_bytes=payload[order].astype(np.int64),
    )


def expected_task_rate(scenario: ScenarioConfig) -> float:
    """Expected arrivals per second across the whole scenario."""
    return math.fsum(scenario.class_rates().values())


def dump_workload(stream: TaskStream, path: Union[str, Path]) -> None:
    stream.to_frame().to_csv(path, index=False)
