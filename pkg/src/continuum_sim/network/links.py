# stdlib
import bisect
from dataclasses import dataclass, field
from typing import Tuple

# third party
import numpy as np

# Continuum absolute
from continuum_sim.exceptions.exceptions import LinkUnavailable
from continuum_sim.model.types import (
    GB,
    LinkSpec,
    LinkTier,
    NetworkPolicy,
    OutageMode,
    OutageWindow,
    ScenarioConfig,
)


@dataclass(frozen=True)
class OutageState:
    """The network condition over time: Normal everywhere outside the scheduled windows."""

    windows: Tuple[OutageWindow, ...] = ()
    instability_factor: float = 0.3
    _starts: Tuple[float, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "_starts", tuple(w.start_s for w in self.windows))

    @classmethod
    def from_scenario(cls, scenario: ScenarioConfig) -> "OutageState":
        return cls(scenario.outage_windows, scenario.network.instability_factor)

    def mode_at(self, t: float) -> OutageMode:
        if not self.windows:
            return OutageMode.NORMAL
        i = bisect.bisect_right(self._starts, t) - 1
        if i >= 0 and self.windows[i].contains(t):
            return self.windows[i].mode
        return OutageMode.NORMAL

    def window_at(self, t: float):
        i = bisect.bisect_right(self._starts, t) - 1
        if i >= 0 and self.windows[i].contains(t):
            return self.windows[i]
        return None


@dataclass(frozen=True)
class Traversal:
    waited_ms: float
    transmit_ms: float
    attempts: int

    @property
    def total_ms(self) -> float:
        return self.waited_ms + self.transmit_ms


def serialization_ms(payload_bytes: float, link: LinkSpec) -> float:
    return payload_bytes * 8.0 / (link.bandwidth_mbps * 1e6) * 1000.0


def transmission_time(payload_bytes: float, link: LinkSpec, rng: np.random.Generator) -> float:
    """
    Time in ms to move `payload_bytes` over `link`: serialization at the link bandwidth
    plus one one-way latency drawn uniformly from the link's range.
    """
    if link.latency_max_ms > link.latency_min_ms:
        latency = rng.uniform(link.latency_min_ms, link.latency_max_ms)
    else:
        latency = link.latency_min_ms
    return serialization_ms(payload_bytes, link) + latency


def transmission_energy(payload_bytes: float, link: LinkSpec) -> float:
    """Energy in Wh spent moving `payload_bytes` over `link`."""
    return payload_bytes / GB * link.energy_wh_per_gb


def internet_reachable(outage: OutageState, t: float, rng: np.random.Generator) -> bool:
    mode = outage.mode_at(t)
    if mode is OutageMode.INTERNET_DOWN:
        return False
    if mode is OutageMode.INTERNET_UNSTABLE:
        return bool(rng.random() < outage.instability_factor)
    return True


def is_available(
    link: LinkSpec, outage: OutageState, t: float, rng: np.random.Generator, connected: bool = False
) -> bool:
    """
    Whether one traversal attempt of `link` at simulated time `t` succeeds. Internet
    outages only affect the Uplink tier; local tiers fail on their own reliability.
    A `connected` traversal belongs to a task that already drew a reachable internet,
    so only the link's own reliability applies to it during an unstable period.
    """
    if link.tier is LinkTier.UPLINK:
        mode = outage.mode_at(t)
        if mode is OutageMode.INTERNET_DOWN:
            return False
        if mode is OutageMode.INTERNET_UNSTABLE and not connected:
            return bool(rng.random() < outage.instability_factor)
    if link.reliability >= 1.0:
        return True
    return bool(rng.random() < link.reliability)


def traverse(
    payload_bytes: float,
    link: LinkSpec,
    outage: OutageState,
    t: float,
    rng: np.random.Generator,
    policy: NetworkPolicy = NetworkPolicy(),
    connected: bool = False,
) -> Traversal:
    """
    Attempts one traversal. A failed attempt costs the policy backoff and is retried only
    while the network is Normal; during an outage the first failure is final. Raises
    LinkUnavailable with the backoff time spent once the attempts are exhausted.

    Args:
        payload_bytes (float): Bytes to move.
        link (LinkSpec): The link tier to cross.
        outage (OutageState): The network condition schedule.
        t (float): Simulated time of the first attempt, in seconds.
        rng (np.random.Generator): The run's network random stream.
        policy (NetworkPolicy): Retry count and backoff.
        connected (bool): The task already drew a reachable internet.
    """
    waited = 0.0
    attempts = policy.max_retries + 1 if outage.mode_at(t) is OutageMode.NORMAL else 1
    for attempt in range(attempts):
        if is_available(link, outage, t + waited / 1000.0, rng, connected):
            return Traversal(waited, transmission_time(payload_bytes, link, rng), attempt + 1)
        waited += policy.retry_backoff_ms
    raise LinkUnavailable(link.tier, waited, attempts)
