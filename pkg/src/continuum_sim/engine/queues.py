# stdlib
import heapq
from typing import Dict, List, Tuple

# Continuum absolute
from continuum_sim.model.types import DeviceSpec


class ServerQueue:
    """
    FIFO queue in front of `servers` identical parallel servers of one device. Jobs must be
    offered in non-decreasing arrival order; each starts on the server that frees up first.
    """

    def __init__(self, device: DeviceSpec) -> None:
        self.device = device
        self.servers = device.servers
        self.busy_until: List[float] = [0.0] * device.servers
        self.busy_s = 0.0
        self.served = 0

    def earliest_free(self) -> float:
        return self.busy_until[0]

    def backlog_s(self, t: float) -> float:
        return max(0.0, self.busy_until[0] - t)

    def serve(self, arrival_s: float, service_s: float) -> Tuple[float, float]:
        """
        Admits one job. Returns (waiting time, departure time), both in seconds.
        """
        free_at = heapq.heappop(self.busy_until)
        start = max(arrival_s, free_at)
        end = start + service_s
        heapq.heappush(self.busy_until, end)
        self.busy_s += service_s
        self.served += 1
        return start - arrival_s, end

    def utilization(self, duration_s: float) -> float:
        return self.busy_s / (duration_s * self.servers)


class ServerPool:
    def __init__(self) -> None:
        self.queues: Dict[str, ServerQueue] = {}

    def queue(self, device: DeviceSpec) -> ServerQueue:
        q = self.queues.get(device.id)
        if q is None:
            q = self.queues[device.id] = ServerQueue(device)
        return q

    def backlog_s(self, device: DeviceSpec, t: float) -> float:
        q = self.queues.get(device.id)
        return 0.0 if q is None else q.backlog_s(t)

    def least_loaded(self, devices, t: float) -> DeviceSpec:
        """The device with the smallest backlog at `t`, ties broken by id."""
        return min(devices, key=lambda d: (self.backlog_s(d, t), d.id))
