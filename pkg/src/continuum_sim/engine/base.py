# stdlib
from abc import ABCMeta, abstractmethod
from dataclasses import dataclass
from typing import Optional, Tuple

# third party
import numpy as np

# Continuum absolute
from continuum_sim.model.types import (
    Architecture,
    ArchitectureParams,
    DeviceClass,
    DeviceSpec,
    LinkTier,
    ProcessingLocation,
    ScenarioConfig,
    TaskClass,
)


@dataclass(frozen=True)
class Stage:
    """One step of a processing path: a link traversal or a service at a device queue."""

    tier: Optional[LinkTier] = None
    payload_bytes: float = 0.0
    sender_id: Optional[str] = None
    device: Optional[DeviceSpec] = None
    service_ms: float = 0.0

    @property
    def is_link(self) -> bool:
        return self.tier is not None

    @classmethod
    def link(cls, tier: LinkTier, payload_bytes: float, sender_id: Optional[str]) -> "Stage":
        return cls(tier=tier, payload_bytes=payload_bytes, sender_id=sender_id)

    @classmethod
    def serve(cls, device: DeviceSpec, service_ms: float) -> "Stage":
        return cls(device=device, service_ms=service_ms)


@dataclass(frozen=True)
class ProcessingDecision:
    """
    Where a task is processed and the path that gets it there and back. `collaboration`
    is a best-effort tail: if any of its traversals fails the task still completes at
    `location` when the required stages finish.
    """

    location: ProcessingLocation
    stages: Tuple[Stage, ...]
    collaboration: Tuple[Stage, ...] = ()
    collaboration_location: ProcessingLocation = ProcessingLocation.CLOUD

    @property
    def traversals(self) -> Tuple[Stage, ...]:
        return tuple(s for s in self.stages if s.is_link)


def processing_time(task_class: TaskClass, device: DeviceSpec) -> float:
    """Contention-free service time in ms: the class base time scaled by processing power."""
    return task_class.base_proc_ms / device.processing_power


def escalation_probability(scenario: ScenarioConfig, target_share: float) -> float:
    """
    Probability with which a task not bound to the cloud is sent there, so that together
    with the `requires_cloud` classes the overall cloud share is `target_share`.
    """
    rates = scenario.class_rates()
    total = sum(rates.values())
    if total <= 0:
        return 0.0
    forced = sum(r for k, r in rates.items() if scenario.task_class(k).requires_cloud) / total
    if forced >= 1.0:
        return 0.0
    return min(1.0, max(0.0, (target_share - forced) / (1.0 - forced)))


def location_of(device: DeviceSpec) -> ProcessingLocation:
    if device.device_class is DeviceClass.CLOUD:
        return ProcessingLocation.CLOUD
    if device.device_class is DeviceClass.GATEWAY:
        return ProcessingLocation.GATEWAY
    if device.device_class is DeviceClass.EDGE_SERVER:
        return ProcessingLocation.EDGE_SERVER
    return ProcessingLocation.ORIGIN_DEVICE


class RoutingPolicy(metaclass=ABCMeta):
    def __init__(self, scenario: ScenarioConfig, params: ArchitectureParams) -> None:
        self.scenario = scenario
        self.params = params
        self.devices = scenario.devices_for(self.architecture())
        clouds = [d for d in self.devices if d.device_class is DeviceClass.CLOUD]
        self.cloud: Optional[DeviceSpec] = clouds[0] if clouds else None

    @staticmethod
    @abstractmethod
    def name() -> str:
        ...

    @staticmethod
    @abstractmethod
    def pretty_name() -> str:
        ...

    @staticmethod
    @abstractmethod
    def architecture() -> Architecture:
        ...

    @staticmethod
    def type() -> str:
        return "routing_policy"

    @abstractmethod
    def route_task(self, task, registry, outage, t: float, rng: np.random.Generator, pool) -> ProcessingDecision:
        """
        Decides where `task` is processed, raising NoRouteAvailable when nothing can serve it.
        """
        ...

    def cloud_round_trip(self, task_class: TaskClass, payload_bytes: float, sender_id: Optional[str]) -> Tuple[Stage, ...]:
        return (
            Stage.link(LinkTier.UPLINK, payload_bytes, sender_id),
            Stage.serve(self.cloud, processing_time(task_class, self.cloud)),
            Stage.link(LinkTier.UPLINK, task_class.result_bytes, None),
        )
