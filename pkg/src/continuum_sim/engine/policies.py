# stdlib
from typing import Dict, Type

# third party
import numpy as np

# Continuum relative
from .base import (
    ProcessingDecision,
    RoutingPolicy,
    Stage,
    escalation_probability,
    location_of,
    processing_time,
)
from .queues import ServerPool
from .registry import ClusterRegistry

# Continuum absolute
from continuum_sim.exceptions.exceptions import NoRouteAvailable
from continuum_sim.model.types import (
    Architecture,
    ArchitectureParams,
    LinkTier,
    OutageMode,
    ProcessingLocation,
    ScenarioConfig,
)
from continuum_sim.network.links import OutageState, internet_reachable
from continuum_sim.workload.generator import Task


class CloudCentricPolicy(RoutingPolicy):
    """Every task is shipped to the cloud and its result shipped back."""

    @staticmethod
    def name() -> str:
        return "cloud"

    @staticmethod
    def pretty_name() -> str:
        return "Cloud-Centric"

    @staticmethod
    def architecture() -> Architecture:
        return Architecture.CLOUD_CENTRIC

    def route_task(self, task, registry, outage, t, rng, pool) -> ProcessingDecision:
        if self.cloud is None:
            raise NoRouteAvailable(task.id, "no cloud is deployed")
        if not internet_reachable(outage, t, rng):
            raise NoRouteAvailable(task.id, "the internet is unreachable")
        return ProcessingDecision(
            location=ProcessingLocation.CLOUD,
            stages=self.cloud_round_trip(task.task_class, task.payload_bytes, task.origin_device),
        )


class GatewayEdgePolicy(RoutingPolicy):
    """
    Tasks go to the least-loaded gateway-tier device over the local network; a share
    alpha of them is escalated to the cloud. Offline, the gateway only answers from the
    models it has cached.
    """

    def __init__(self, scenario: ScenarioConfig, params: ArchitectureParams) -> None:
        super().__init__(scenario, params)
        self.gateways = tuple(d for d in self.devices if d.is_gateway_tier)
        self.p_escalate = escalation_probability(scenario, params.alpha)

    @staticmethod
    def name() -> str:
        return "gateway"

    @staticmethod
    def pretty_name() -> str:
        return "Gateway-Edge"

    @staticmethod
    def architecture() -> Architecture:
        return Architecture.GATEWAY_EDGE

    def route_task(self, task, registry, outage, t, rng, pool) -> ProcessingDecision:
        if not self.gateways:
            raise NoRouteAvailable(task.id, "no gateway is deployed")
        task_class = task.task_class
        gateway = pool.least_loaded(self.gateways, t)
        up = Stage.link(LinkTier.LOCAL_NETWORK, task.payload_bytes, task.origin_device)
        down = Stage.link(LinkTier.LOCAL_NETWORK, task_class.result_bytes, gateway.id)
        service_ms = processing_time(task_class, gateway)

        if not internet_reachable(outage, t, rng):
            if task_class.requires_cloud:
                raise NoRouteAvailable(task.id, "the task needs the cloud and the internet is unreachable")
            coverage = (
                self.params.intermittent_cache_coverage
                if outage.mode_at(t) is OutageMode.INTERNET_UNSTABLE
                else self.params.offline_cache_coverage
            )
            if rng.random() >= coverage:
                raise NoRouteAvailable(task.id, "no cached model at the gateway")
            if task_class.needs_gpu:
                service_ms *= self.params.offline_degradation
            return ProcessingDecision(location_of(gateway), (up, Stage.serve(gateway, service_ms), down))

        escalate = task_class.requires_cloud or (self.p_escalate > 0 and rng.random() < self.p_escalate)
        if escalate:
            if self.cloud is None:
                raise NoRouteAvailable(task.id, "no cloud is deployed")
            return ProcessingDecision(
                ProcessingLocation.CLOUD,
                (up,) + self.cloud_round_trip(task_class, task.payload_bytes, gateway.id) + (down,),
            )
        return ProcessingDecision(location_of(gateway), (up, Stage.serve(gateway, service_ms), down))


class DfcAiPolicy(RoutingPolicy):
    """
    Tasks run on their origin device; GPU work goes to a GPU node of the device cluster
    and cloud-bound classes to the cloud. A share beta of the remaining tasks adds a
    best-effort collaboration round trip to the cloud, or to a mesh peer when the
    internet cannot be reached.
    """

    def __init__(self, scenario: ScenarioConfig, params: ArchitectureParams) -> None:
        super().__init__(scenario, params)
        self.p_collaborate = escalation_probability(scenario, params.beta)

    @staticmethod
    def name() -> str:
        return "dfc"

    @staticmethod
    def pretty_name() -> str:
        return "DFC-AI"

    @staticmethod
    def architecture() -> Architecture:
        return Architecture.DFC_AI

    def route_task(self, task, registry, outage, t, rng, pool) -> ProcessingDecision:
        task_class = task.task_class
        origin = self.scenario.device(task.origin_device)

        if task_class.requires_cloud:
            if self.cloud is None:
                raise NoRouteAvailable(task.id, "no cloud is deployed")
            if not internet_reachable(outage, t, rng):
                raise NoRouteAvailable(task.id, "the task needs the cloud and the internet is unreachable")
            return ProcessingDecision(
                ProcessingLocation.CLOUD,
                self.cloud_round_trip(task_class, task.payload_bytes, task.origin_device),
            )

        if task_class.needs_gpu and registry.is_gpu_member(origin.id):
            decision = ProcessingDecision(
                ProcessingLocation.CLUSTER_GPU, (Stage.serve(origin, processing_time(task_class, origin)),)
            )
        elif task_class.needs_gpu and registry.gpu_nodes:
            node = pool.least_loaded(registry.gpu_nodes, t)
            decision = ProcessingDecision(
                ProcessingLocation.CLUSTER_GPU,
                (
                    Stage.link(LinkTier.LOCAL_MESH, task.payload_bytes, origin.id),
                    Stage.serve(node, processing_time(task_class, node)),
                    Stage.link(LinkTier.LOCAL_MESH, task_class.result_bytes, node.id),
                ),
            )
        else:
            decision = ProcessingDecision(
                ProcessingLocation.ORIGIN_DEVICE, (Stage.serve(origin, processing_time(task_class, origin)),)
            )

        collaborate = self.p_collaborate > 0 and rng.random() < self.p_collaborate
        if not collaborate:
            return decision
        if self.cloud is not None and internet_reachable(outage, t, rng):
            return ProcessingDecision(
                decision.location,
                decision.stages,
                collaboration=self.cloud_round_trip(task_class, task_class.result_bytes, origin.id),
            )
        peer = self.mesh_peer(origin.id, registry, pool, t)
        if peer is None:
            return decision
        return ProcessingDecision(
            decision.location,
            decision.stages,
            collaboration=(
                Stage.link(LinkTier.LOCAL_MESH, task_class.result_bytes, origin.id),
                Stage.serve(peer, processing_time(task_class, peer)),
                Stage.link(LinkTier.LOCAL_MESH, task_class.result_bytes, peer.id),
            ),
            collaboration_location=ProcessingLocation.CLUSTER_GPU if peer.is_gpu else ProcessingLocation.ORIGIN_DEVICE,
        )

    @staticmethod
    def mesh_peer(origin_id: str, registry: ClusterRegistry, pool: ServerPool, t: float):
        """The least-loaded cluster member other than the origin, GPU nodes first; None when alone."""
        for candidates in (registry.gpu_nodes, registry.members):
            peers = [d for d in candidates if d.id != origin_id]
            if peers:
                return pool.least_loaded(peers, t)
        return None


POLICIES: Dict[Architecture, Type[RoutingPolicy]] = {
    Architecture.CLOUD_CENTRIC: CloudCentricPolicy,
    Architecture.GATEWAY_EDGE: GatewayEdgePolicy,
    Architecture.DFC_AI: DfcAiPolicy,
}


def make_policy(scenario: ScenarioConfig, params: ArchitectureParams) -> RoutingPolicy:
    return POLICIES[params.architecture](scenario, params)


def route_task(
    task: Task,
    arch: ArchitectureParams,
    registry: ClusterRegistry,
    outage: OutageState,
    scenario: ScenarioConfig,
    t: float = None,
    rng: np.random.Generator = None,
    pool: ServerPool = None,
) -> ProcessingDecision:
    """
    Routes one task under `arch`. `t` defaults to the task creation time, `rng` to a fresh
    generator and `pool` to an idle server pool.
    """
    return make_policy(scenario, arch).route_task(
        task,
        registry.at(task.created_at if t is None else t),
        outage,
        task.created_at if t is None else t,
        np.random.default_rng(0) if rng is None else rng,
        ServerPool() if pool is None else pool,
    )
