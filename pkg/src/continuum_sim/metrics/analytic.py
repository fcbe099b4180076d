# stdlib
import math
from collections import defaultdict
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple, Union

# Continuum relative
from .accounting import EnergyBreakdown, account_energy

# Continuum absolute
from continuum_sim.engine.base import Stage, processing_time
from continuum_sim.engine.policies import make_policy
from continuum_sim.engine.registry import ClusterRegistry
from continuum_sim.model.types import (
    Architecture,
    ArchitectureParams,
    LatencyBreakdown,
    LinkTier,
    RunTrace,
    ScenarioConfig,
    TaskKind,
    device_class_rates,
)
from continuum_sim.network.links import serialization_ms


def analytic_latency(arch: ArchitectureParams, breakdown: LatencyBreakdown) -> float:
    """
    Closed-form mean latency in ms.

    Cloud-Centric sums uplink, cloud queueing, cloud processing and downlink. Gateway-Edge
    sums the device-to-gateway hop, gateway queueing and processing and the return hop,
    plus alpha times the cloud round trip. DFC-AI is local processing plus beta times the
    collaboration leg.
    """
    b = breakdown
    if arch.architecture is Architecture.CLOUD_CENTRIC:
        return b.t_net_up + b.t_queue + b.t_proc + b.t_net_down
    if arch.architecture is Architecture.GATEWAY_EDGE:
        return b.t_d_to_g + b.t_queue + b.t_proc + b.t_g_to_d + arch.alpha * b.l_cloud
    return b.t_proc_local + arch.beta * b.t_collab


def erlang_c_wait(arrival_rate: float, mean_service_s: float, servers: int) -> float:
    """Mean waiting time in seconds of an M/M/c queue; infinite when the queue is unstable."""
    if arrival_rate <= 0 or mean_service_s <= 0:
        return 0.0
    offered = arrival_rate * mean_service_s
    rho = offered / servers
    if rho >= 1.0:
        return math.inf
    head = math.fsum(offered**k / math.factorial(k) for k in range(servers))
    tail = offered**servers / math.factorial(servers) / (1.0 - rho)
    p_wait = tail / (head + tail)
    return p_wait * mean_service_s / (servers - offered)


def expected_link_ms(stage: Stage, scenario: ScenarioConfig) -> float:
    """Mean one-way traversal: serialization, mean latency, and the expected retry backoff."""
    link = scenario.link(stage.tier)
    retry = (1.0 - link.reliability) * scenario.network.retry_backoff_ms
    return serialization_ms(stage.payload_bytes, link) + link.mean_latency_ms + retry


@dataclass(frozen=True)
class _Branch:
    kind: TaskKind
    rate: float
    parts: Tuple[Tuple[str, Stage], ...]
    cloud_bound: bool = False
    escalated: bool = False
    collaborates: bool = False


def _branches(scenario: ScenarioConfig, params: ArchitectureParams) -> List[_Branch]:
    """Every expected processing path with its arrival rate, mirroring the routing policies."""
    policy = make_policy(scenario, params)
    arch = params.architecture
    registry = ClusterRegistry.initial(scenario, arch)
    branches: List[_Branch] = []
    for origin in scenario.devices:
        for kind, rate in device_class_rates(scenario, origin).items():
            tc = scenario.task_class(kind)
            payload = tc.mean_payload_bytes
            if arch is Architecture.CLOUD_CENTRIC:
                if policy.cloud is None:
                    continue
                up, serve, down = policy.cloud_round_trip(tc, payload, origin.id)
                branches.append(_Branch(kind, rate, (("t_net_up", up), ("t_proc", serve), ("t_net_down", down))))

            elif arch is Architecture.GATEWAY_EDGE:
                gateways = policy.gateways
                a = 1.0 if tc.requires_cloud else policy.p_escalate
                for g in gateways:
                    share = rate / len(gateways)
                    up = ("t_d_to_g", Stage.link(LinkTier.LOCAL_NETWORK, payload, origin.id))
                    down = ("t_g_to_d", Stage.link(LinkTier.LOCAL_NETWORK, tc.result_bytes, g.id))
                    serve = ("t_proc", Stage.serve(g, processing_time(tc, g)))
                    branches.append(_Branch(kind, share * (1.0 - a), (up, serve, down)))
                    if policy.cloud is not None:
                        cloud = tuple(("l_cloud", s) for s in policy.cloud_round_trip(tc, payload, g.id))
                        branches.append(_Branch(kind, share * a, (up,) + cloud + (down,), escalated=True))

            else:
                if tc.requires_cloud:
                    if policy.cloud is None:
                        continue
                    cloud = tuple(("t_collab", s) for s in policy.cloud_round_trip(tc, payload, origin.id))
                    branches.append(_Branch(kind, rate, cloud, cloud_bound=True))
                    continue
                if tc.needs_gpu and registry.is_gpu_member(origin.id):
                    local_paths = [(1.0, (Stage.serve(origin, processing_time(tc, origin)),))]
                elif tc.needs_gpu and registry.gpu_nodes:
                    nodes = registry.gpu_nodes
                    local_paths = [
                        (
                            1.0 / len(nodes),
                            (
                                Stage.link(LinkTier.LOCAL_MESH, payload, origin.id),
                                Stage.serve(node, processing_time(tc, node)),
                                Stage.link(LinkTier.LOCAL_MESH, tc.result_bytes, node.id),
                            ),
                        )
                        for node in nodes
                    ]
                else:
                    local_paths = [(1.0, (Stage.serve(origin, processing_time(tc, origin)),))]
                p_c = policy.p_collaborate if policy.cloud is not None else 0.0
                for share, stages in local_paths:
                    local = tuple(("t_proc_local", s) for s in stages)
                    branches.append(_Branch(kind, rate * share * (1.0 - p_c), local))
                    if p_c > 0:
                        collab = tuple(
                            ("t_collab", s) for s in policy.cloud_round_trip(tc, tc.result_bytes, origin.id)
                        )
                        branches.append(_Branch(kind, rate * share * p_c, local + collab, collaborates=True))
    return branches


def _waits(branches: List[_Branch]) -> Dict[str, float]:
    arrivals: Dict[str, float] = defaultdict(float)
    work: Dict[str, float] = defaultdict(float)
    devices = {}
    for branch in branches:
        for _, stage in branch.parts:
            if not stage.is_link:
                arrivals[stage.device.id] += branch.rate
                work[stage.device.id] += branch.rate * stage.service_ms / 1000.0
                devices[stage.device.id] = stage.device
    return {
        i: erlang_c_wait(arrivals[i], work[i] / arrivals[i], devices[i].servers) if arrivals[i] > 0 else 0.0
        for i in devices
    }


def _fields(branch: _Branch, scenario: ScenarioConfig, waits: Dict[str, float]) -> Dict[str, float]:
    fields: Dict[str, float] = defaultdict(float)
    for label, stage in branch.parts:
        if stage.is_link:
            fields[label] += expected_link_ms(stage, scenario)
        elif label == "t_proc":
            fields["t_queue"] += waits[stage.device.id] * 1000.0
            fields["t_proc"] += stage.service_ms
        else:
            fields[label] += waits[stage.device.id] * 1000.0 + stage.service_ms
    return fields


def _weighted(rows: List[Tuple[float, Dict[str, float]]], name: str) -> float:
    if not rows:
        return 0.0
    total = math.fsum(r for r, _ in rows)
    if total <= 0:
        return math.fsum(f.get(name, 0.0) for _, f in rows) / len(rows)
    return math.fsum(r * f.get(name, 0.0) for r, f in rows) / total


def predict_breakdown(
    scenario: ScenarioConfig,
    arch: Union[ArchitectureParams, Architecture],
    kind: Optional[TaskKind] = None,
) -> LatencyBreakdown:
    """
    Expected latency components of one task class, or of the whole mixture when `kind`
    is None, from link, device and class parameters. Queueing uses the M/M/c estimate
    at the arrival rate each device receives.

    For DFC-AI over the mixture, `t_proc_local` is weighted over every arrival (cloud-bound
    classes contribute zero) and `t_collab` is the mean cloud leg of the beta share, so
    `analytic_latency` recovers the expected mean.
    """
    params = arch if isinstance(arch, ArchitectureParams) else scenario.params(arch)
    branches = _branches(scenario, params)
    waits = _waits(branches)
    rows = [(b, _fields(b, scenario, waits)) for b in branches if kind is None or b.kind is kind]
    everything = [(b.rate, f) for b, f in rows]

    if params.architecture is Architecture.CLOUD_CENTRIC:
        return LatencyBreakdown(**{n: _weighted(everything, n) for n in ("t_net_up", "t_queue", "t_proc", "t_net_down")})

    if params.architecture is Architecture.GATEWAY_EDGE:
        local = [(b.rate, f) for b, f in rows if not b.escalated]
        escalated = [(b.rate, f) for b, f in rows if b.escalated]
        return LatencyBreakdown(
            t_d_to_g=_weighted(everything, "t_d_to_g"),
            t_g_to_d=_weighted(everything, "t_g_to_d"),
            t_queue=_weighted(local, "t_queue"),
            t_proc=_weighted(local, "t_proc"),
            l_cloud=_weighted(escalated, "l_cloud"),
        )

    total_rate = math.fsum(b.rate for b, _ in rows)
    if kind is not None and rows and rows[0][0].cloud_bound:
        return LatencyBreakdown(t_collab=_weighted(everything, "t_collab"))
    if kind is not None:
        return LatencyBreakdown(
            t_proc_local=_weighted(everything, "t_proc_local"),
            t_collab=_weighted([(b.rate, f) for b, f in rows if b.collaborates], "t_collab"),
        )
    t_local = math.fsum(b.rate * f.get("t_proc_local", 0.0) for b, f in rows) / total_rate if total_rate else 0.0
    legs = [(b.rate, f) for b, f in rows if b.cloud_bound or b.collaborates]
    if params.beta > 0 and total_rate:
        t_collab = math.fsum(r * f["t_collab"] for r, f in legs) / (params.beta * total_rate)
    else:
        t_collab = _weighted(legs, "t_collab")
    return LatencyBreakdown(t_proc_local=t_local, t_collab=t_collab)


def predict_mean_latency(scenario: ScenarioConfig, arch: Union[ArchitectureParams, Architecture]) -> float:
    params = arch if isinstance(arch, ArchitectureParams) else scenario.params(arch)
    return analytic_latency(params, predict_breakdown(scenario, params))


def expected_trace(
    scenario: ScenarioConfig, arch: Union[ArchitectureParams, Architecture], duration_s: Optional[float] = None
) -> RunTrace:
    """The resource usage a run of `duration_s` is expected to leave, in the shape energy accounting consumes."""
    params = arch if isinstance(arch, ArchitectureParams) else scenario.params(arch)
    duration_s = scenario.duration_s if duration_s is None else duration_s
    trace = RunTrace(
        architecture=params.architecture,
        duration_s=duration_s,
        deployed=tuple(d.id for d in scenario.devices_for(params.architecture)),
    )
    for branch in _branches(scenario, params):
        count = branch.rate * duration_s
        for _, stage in branch.parts:
            if stage.is_link:
                link = scenario.link(stage.tier)
                seconds = serialization_ms(stage.payload_bytes, link) / 1000.0
                trace.add_transmission(stage.sender_id, stage.tier, stage.payload_bytes * count, seconds * count)
            else:
                trace.add_busy(stage.device.id, stage.service_ms / 1000.0 * count)
        trace.task_count += int(round(count))
    return trace


def predict_energy(scenario: ScenarioConfig, arch: Union[ArchitectureParams, Architecture]) -> EnergyBreakdown:
    return account_energy(expected_trace(scenario, arch), scenario)


def predict_energy_savings(
    scenario: ScenarioConfig,
    target: Architecture = Architecture.DFC_AI,
    baseline: Architecture = Architecture.CLOUD_CENTRIC,
) -> float:
    """Predicted fraction of the baseline's daily energy that `target` saves."""
    baseline_wh = predict_energy(scenario, baseline).total
    return 1.0 - predict_energy(scenario, target).total / baseline_wh
