# stdlib
import heapq
import logging
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Optional, Tuple, Union

# third party
import numpy as np
import pandas as pd

# Continuum relative
from .base import ProcessingDecision
from .policies import make_policy
from .queues import ServerPool
from .registry import ClusterRegistry, discover_resources

# Continuum absolute
from continuum_sim.exceptions.exceptions import (
    EmptyWindow,
    LinkUnavailable,
    NoRouteAvailable,
    QueueInstability,
)
from continuum_sim.metrics.accounting import (
    CostBreakdown,
    EnergyBreakdown,
    account_cost,
    account_energy,
)
from continuum_sim.model.types import (
    Activity,
    Architecture,
    ArchitectureParams,
    OutageWindow,
    ProcessingLocation,
    RunTrace,
    ScenarioConfig,
    TaskKind,
)
from continuum_sim.network.links import OutageState, serialization_ms, transmission_energy, traverse
from continuum_sim.utils.rng import child_generator
from continuum_sim.workload.generator import TaskStream, generate_stream

log = logging.getLogger(__name__)

COMPLETED, FAILED, DEFERRED = 0, 1, 2
OUTCOMES = ("completed", "failed", "deferred")
LOCATIONS: Tuple[ProcessingLocation, ...] = tuple(ProcessingLocation)
LOCATION_CODE = {loc: i for i, loc in enumerate(LOCATIONS)}
UNSTABLE_UTILIZATION = 0.95
TRACE_COLUMNS = ["task_id", "class", "route", "queue_ms", "proc_ms", "net_ms", "total_ms", "energy_wh", "outcome"]


@dataclass
class RunMetrics:
    """
    Outcome of one run: a per-task table held column-wise plus the run's resource trace
    and its energy and cost accounting.
    """

    scenario_name: str
    architecture: Architecture
    seed: int
    duration_s: float
    kinds: Tuple[TaskKind, ...]
    kind: np.ndarray
    created_at: np.ndarray
    outcome: np.ndarray
    location: np.ndarray
    queue_ms: np.ndarray
    proc_ms: np.ndarray
    net_ms: np.ndarray
    total_ms: np.ndarray
    energy_wh: np.ndarray
    deferrable: np.ndarray
    deadline_ms: np.ndarray
    trace: RunTrace
    energy: EnergyBreakdown
    cost: CostBreakdown
    utilization: Dict[str, float] = field(default_factory=dict)

    @property
    def tasks_generated(self) -> int:
        return len(self.outcome)

    @property
    def completed(self) -> int:
        return int((self.outcome == COMPLETED).sum())

    @property
    def failed(self) -> int:
        return int((self.outcome == FAILED).sum())

    @property
    def deferred(self) -> int:
        return int((self.outcome == DEFERRED).sum())

    def location_fractions(self) -> Dict[ProcessingLocation, float]:
        """Share of completed tasks processed at each location."""
        done = self.location[self.outcome == COMPLETED]
        if len(done) == 0:
            return {}
        counts = np.bincount(done, minlength=len(LOCATIONS))
        return {LOCATIONS[i]: counts[i] / len(done) for i in range(len(LOCATIONS)) if counts[i]}

    def mean_latency_ms(self) -> float:
        done = self.outcome == COMPLETED
        if not done.any():
            return math.nan
        return float(self.total_ms[done].mean())

    def summary(self) -> Dict[str, float]:
        done = self.outcome == COMPLETED
        summary = {
            "latency_ms": self.mean_latency_ms(),
            "queue_ms": float(self.queue_ms[done].mean()) if done.any() else math.nan,
            "proc_ms": float(self.proc_ms[done].mean()) if done.any() else math.nan,
            "net_ms": float(self.net_ms[done].mean()) if done.any() else math.nan,
            "energy_wh_per_day": self.energy.total,
            "e_processing_wh_per_day": self.energy.e_processing,
            "e_transmission_wh_per_day": self.energy.e_transmission,
            "cost_usd_per_year": self.cost.total,
            "c_compute_usd_per_year": self.cost.c_compute,
            "c_transfer_usd_per_year": self.cost.c_transfer,
            "c_infrastructure_usd_per_year": self.cost.c_infrastructure,
            "c_operations_usd_per_year": self.cost.c_operations,
            "tasks": float(self.tasks_generated),
            "completed": float(self.completed),
            "failed": float(self.failed),
            "deferred": float(self.deferred),
        }
        fractions = self.location_fractions()
        for loc in LOCATIONS[:5]:
            summary[f"location_{loc.value}"] = fractions.get(loc, 0.0)
        return summary

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "task_id": np.arange(self.tasks_generated),
                "class": np.asarray([k.value for k in self.kinds], dtype=object)[self.kind] if self.tasks_generated else [],
                "route": np.asarray([loc.value for loc in LOCATIONS], dtype=object)[self.location]
                if self.tasks_generated
                else [],
                "queue_ms": self.queue_ms,
                "proc_ms": self.proc_ms,
                "net_ms": self.net_ms,
                "total_ms": self.total_ms,
                "energy_wh": self.energy_wh,
                "outcome": np.asarray(OUTCOMES, dtype=object)[self.outcome] if self.tasks_generated else [],
            },
            columns=TRACE_COLUMNS,
        )


class _Flight:
    """Book-keeping of one task between its arrival and its outcome."""

    __slots__ = ("idx", "task", "decision", "stages", "n_required", "k", "armed", "acc", "collab_acc", "local_done")

    def __init__(self, idx: int, task, decision: ProcessingDecision) -> None:
        self.idx = idx
        self.task = task
        self.decision = decision
        self.stages = decision.stages + decision.collaboration
        self.n_required = len(decision.stages)
        self.k = 0
        self.armed = False
        # queue_ms, proc_ms, net_ms, energy_wh
        self.acc = [0.0, 0.0, 0.0, 0.0]
        self.collab_acc = [0.0, 0.0, 0.0, 0.0]
        self.local_done = None


class _Run:
    def __init__(self, scenario: ScenarioConfig, params: ArchitectureParams, seed: int, stream: TaskStream) -> None:
        self.scenario = scenario
        self.params = params
        self.architecture = params.architecture
        self.stream = stream
        self.policy = make_policy(scenario, params)
        self.outage = OutageState.from_scenario(scenario)
        self.registry = ClusterRegistry.initial(scenario, self.architecture)
        self.rng = child_generator(seed, "run", self.architecture.value)
        self.pool = ServerPool()
        self.trace = RunTrace(
            architecture=self.architecture,
            duration_s=scenario.duration_s,
            deployed=tuple(d.id for d in scenario.devices_for(self.architecture)),
            task_count=len(stream),
        )
        self.marginal_w = {
            d.id: math.fsum(
                p.p_active - p.p_idle
                for p in d.power_profile
                if p.activity is Activity.PROCESSING and p.deployed_in(self.architecture)
            )
            for d in scenario.devices
            if d.owned_by_enterprise
        }
        n = len(stream)
        self.outcome = np.full(n, FAILED, dtype=np.int64)
        self.location = np.full(n, LOCATION_CODE[ProcessingLocation.FAILED], dtype=np.int64)
        self.queue_ms = np.full(n, np.nan)
        self.proc_ms = np.full(n, np.nan)
        self.net_ms = np.full(n, np.nan)
        self.total_ms = np.full(n, np.nan)
        self.energy_wh = np.zeros(n)
        self.heap = []

    def arm(self, flight: _Flight, t: float) -> None:
        flight.armed = True
        heapq.heappush(self.heap, (t, flight.task.created_at, flight.idx, flight))

    def no_route(self, idx: int, task, flight: Optional[_Flight] = None) -> None:
        if flight is not None:
            self.energy_wh[idx] = flight.acc[3]
        if task.task_class.deferrable:
            self.outcome[idx] = DEFERRED
            self.location[idx] = LOCATION_CODE[ProcessingLocation.DEFERRED]
        else:
            self.outcome[idx] = FAILED
            self.location[idx] = LOCATION_CODE[ProcessingLocation.FAILED]

    def complete(self, flight: _Flight, collaborated: bool) -> None:
        acc = flight.acc
        location = flight.decision.location
        if collaborated:
            acc = [a + c for a, c in zip(acc, flight.collab_acc)]
            location = flight.decision.collaboration_location
        i = flight.idx
        self.outcome[i] = COMPLETED
        self.location[i] = LOCATION_CODE[location]
        self.queue_ms[i], self.proc_ms[i], self.net_ms[i], self.energy_wh[i] = acc
        self.total_ms[i] = acc[0] + acc[1] + acc[2]

    def arrive(self, idx: int, t: float) -> None:
        task = self.stream.task(idx)
        self.registry = self.registry.at(t)
        try:
            decision = self.policy.route_task(task, self.registry, self.outage, t, self.rng, self.pool)
        except NoRouteAvailable as e:
            log.debug(str(e))
            self.no_route(idx, task)
            return
        self.advance(_Flight(idx, task, decision), t)

    def advance(self, flight: _Flight, t: float) -> None:
        scenario = self.scenario
        while flight.k < len(flight.stages):
            stage = flight.stages[flight.k]
            acc = flight.acc if flight.k < flight.n_required else flight.collab_acc
            if stage.is_link:
                link = scenario.link(stage.tier)
                try:
                    traversal = traverse(
                        stage.payload_bytes, link, self.outage, t, self.rng, scenario.network, connected=True
                    )
                except LinkUnavailable:
                    if flight.k >= flight.n_required:
                        self.complete(flight, collaborated=False)
                    else:
                        self.no_route(flight.idx, flight.task, flight)
                    return
                self.trace.add_transmission(
                    stage.sender_id, stage.tier, stage.payload_bytes, serialization_ms(stage.payload_bytes, link) / 1000.0
                )
                acc[2] += traversal.total_ms
                acc[3] += transmission_energy(stage.payload_bytes, link)
                t += traversal.total_ms / 1000.0
            else:
                if not flight.armed:
                    self.arm(flight, t)
                    return
                flight.armed = False
                service_s = stage.service_ms / 1000.0
                wait_s, t = self.pool.queue(stage.device).serve(t, service_s)
                self.trace.add_busy(stage.device.id, service_s)
                acc[0] += wait_s * 1000.0
                acc[1] += stage.service_ms
                acc[3] += service_s * self.marginal_w.get(stage.device.id, 0.0) / 3600.0
            flight.k += 1
        self.complete(flight, collaborated=bool(flight.decision.collaboration))

    def execute(self) -> None:
        created = self.stream.created_at
        n = len(created)
        events = self.scenario.cluster_events
        e = 0
        i = 0
        heap = self.heap
        while i < n or heap:
            if heap and (i >= n or heap[0][:3] <= (created[i], created[i], i)):
                t, _, _, flight = heapq.heappop(heap)
                arrival = None
            else:
                t = created[i]
                arrival = i
                i += 1
            while e < len(events) and events[e].t_s <= t:
                self.registry = discover_resources(self.registry, events[e], events[e].t_s)
                e += 1
            if arrival is None:
                self.advance(flight, t)
            else:
                self.arrive(arrival, float(t))

    def check_stability(self) -> Dict[str, float]:
        utilization = {}
        for device_id, queue in sorted(self.pool.queues.items()):
            rho = queue.utilization(self.scenario.duration_s)
            utilization[device_id] = rho
            if rho > UNSTABLE_UTILIZATION:
                message = f"Server {device_id} ran at utilization {rho:.3f} under {self.architecture.value}; queueing is unstable."
                log.warning(message)
                warnings.warn(QueueInstability(message))
        return utilization


def run_simulation(
    scenario: ScenarioConfig,
    arch: Union[ArchitectureParams, Architecture],
    seed: int,
    stream: Optional[TaskStream] = None,
) -> RunMetrics:
    """
    Runs the generated task stream of (scenario, seed) through one architecture.

    Every task ends completed at one location, failed, or deferred. Queueing at every
    device is FIFO in simulated time, and ties are broken by (creation time, task id).

    Args:
        scenario (ScenarioConfig): A validated scenario.
        arch (ArchitectureParams | Architecture): The architecture, or its parameters.
        seed (int): The run seed.
        stream (TaskStream, optional): A stream already generated for (scenario, seed).

    Returns:
        RunMetrics: Per-task outcomes plus energy and cost accounting.
    """
    params = arch if isinstance(arch, ArchitectureParams) else scenario.params(arch)
    if stream is None:
        stream = generate_stream(scenario, seed)
    run = _Run(scenario, params, seed, stream)
    run.execute()
    utilization = run.check_stability()

    kinds = stream.kinds
    deferrable = np.array([scenario.task_class(k).deferrable for k in kinds], dtype=bool)[stream.kind] if len(stream) else np.zeros(0, dtype=bool)
    deadlines = np.array(
        [np.nan if scenario.task_class(k).deadline_ms is None else scenario.task_class(k).deadline_ms for k in kinds]
    )
    metrics = RunMetrics(
        scenario_name=scenario.name.value,
        architecture=params.architecture,
        seed=seed,
        duration_s=scenario.duration_s,
        kinds=kinds,
        kind=stream.kind,
        created_at=stream.created_at,
        outcome=run.outcome,
        location=run.location,
        queue_ms=run.queue_ms,
        proc_ms=run.proc_ms,
        net_ms=run.net_ms,
        total_ms=run.total_ms,
        energy_wh=run.energy_wh,
        deferrable=deferrable,
        deadline_ms=deadlines[stream.kind] if len(stream) else np.zeros(0),
        trace=run.trace,
        energy=account_energy(run.trace, scenario),
        cost=account_cost(run.trace, scenario),
        utilization=utilization,
    )
    log.info(
        f"{scenario.name.value}/{params.architecture.pretty_name} seed {seed}: "
        f"{metrics.completed}/{metrics.tasks_generated} completed, "
        f"mean latency {metrics.mean_latency_ms():.2f} ms"
    )
    return metrics


def capability_fraction(metrics: RunMetrics, window: Union[OutageWindow, Tuple[float, float]]) -> float:
    """
    Share of the time-critical (non-deferrable) tasks arriving in `window` that completed
    within their deadline. Tasks without a deadline only need to complete.
    """
    start, end = (window.start_s, window.end_s) if isinstance(window, OutageWindow) else window
    in_window = (metrics.created_at >= start) & (metrics.created_at < end) & ~metrics.deferrable
    arrived = int(in_window.sum())
    if arrived == 0:
        raise EmptyWindow((start, end))
    met_deadline = np.isnan(metrics.deadline_ms) | (metrics.total_ms <= metrics.deadline_ms)
    succeeded = in_window & (metrics.outcome == COMPLETED) & met_deadline
    return int(succeeded.sum()) / arrived


def write_trace(metrics: RunMetrics, path: Union[str, Path]) -> None:
    metrics.to_frame().to_csv(path, index=False)
