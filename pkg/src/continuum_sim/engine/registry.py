# stdlib
import logging
from dataclasses import dataclass, field, replace
from typing import Mapping, Tuple

# Continuum absolute
from continuum_sim.model.types import (
    Architecture,
    ClusterEvent,
    DeviceClass,
    DeviceSpec,
    ScenarioConfig,
)

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ClusterRegistry:
    """
    The LocalMesh cluster as seen by its members. A joining device becomes usable
    `discovery_delay_s` after its join event; until then it sits in `pending`.
    """

    catalog: Mapping[str, DeviceSpec] = field(compare=False, repr=False)
    member_ids: Tuple[str, ...] = ()
    pending: Tuple[Tuple[float, str], ...] = ()
    discovery_delay_s: float = 0.5
    last_discovery_at: float = field(default=0.0, compare=False)

    @classmethod
    def initial(cls, scenario: ScenarioConfig, architecture: Architecture) -> "ClusterRegistry":
        catalog = {
            d.id: d
            for d in scenario.devices_for(architecture)
            if d.mesh_member and d.device_class is not DeviceClass.CLOUD
        }
        first_event = {}
        for event in scenario.cluster_events:
            first_event.setdefault(event.device_id, event.kind)
        members = tuple(sorted(i for i in catalog if first_event.get(i) != "join"))
        return cls(catalog=catalog, member_ids=members, discovery_delay_s=scenario.discovery_delay_s)

    @property
    def members(self) -> Tuple[DeviceSpec, ...]:
        return tuple(self.catalog[i] for i in self.member_ids)

    @property
    def gpu_nodes(self) -> Tuple[DeviceSpec, ...]:
        return tuple(d for d in self.members if d.is_gpu)

    def is_gpu_member(self, device_id: str) -> bool:
        return device_id in self.member_ids and self.catalog[device_id].is_gpu

    def at(self, t: float) -> "ClusterRegistry":
        """The registry with every pending join whose discovery has completed by `t` promoted."""
        if not self.pending or self.pending[0][0] > t:
            return self
        ready = tuple(i for ready_at, i in self.pending if ready_at <= t)
        log.debug(f"Discovered {', '.join(ready)} at t={t:.3f}s")
        return replace(
            self,
            member_ids=tuple(sorted(set(self.member_ids) | set(ready))),
            pending=tuple(p for p in self.pending if p[0] > t),
            last_discovery_at=t,
        )


def discover_resources(registry: ClusterRegistry, event: ClusterEvent, t: float) -> ClusterRegistry:
    """
    Applies a join or leave. A join is usable after the discovery delay; a leave takes
    effect immediately and cancels any pending join of the same device.

    Args:
        registry (ClusterRegistry): The current registry.
        event (ClusterEvent): The membership change.
        t (float): Simulated time of the event, in seconds.
    """
    if event.device_id not in registry.catalog:
        return registry
    if event.kind == "join":
        if event.device_id in registry.member_ids or any(i == event.device_id for _, i in registry.pending):
            return registry
        pending = tuple(sorted(registry.pending + ((t + registry.discovery_delay_s, event.device_id),)))
        return replace(registry, pending=pending)
    return replace(
        registry,
        member_ids=tuple(i for i in registry.member_ids if i != event.device_id),
        pending=tuple(p for p in registry.pending if p[1] != event.device_id),
    )
