# stdlib
import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, Optional

# Continuum absolute
from continuum_sim.exceptions.exceptions import UtilizationOutOfRange
from continuum_sim.model.types import (
    DAYS_PER_YEAR,
    GB,
    INFRASTRUCTURE_CLASSES,
    SECONDS_PER_DAY,
    Activity,
    Architecture,
    DeviceClass,
    DeviceSpec,
    LinkTier,
    MicroservicePowerProfile,
    PricingTable,
    RunTrace,
    ScenarioConfig,
)
from continuum_sim.network.links import transmission_energy


@dataclass(frozen=True)
class EnergyBreakdown:
    """Daily energy in Wh. `per_tier` splits e_transmission, `per_device_class` splits e_processing."""

    e_processing: float = 0.0
    e_transmission: float = 0.0
    per_tier: Dict[LinkTier, float] = field(default_factory=dict)
    per_device_class: Dict[DeviceClass, float] = field(default_factory=dict)

    @property
    def total(self) -> float:
        return self.e_processing + self.e_transmission


@dataclass(frozen=True)
class CostBreakdown:
    """Operating cost in USD over the accounting horizon (a year unless stated otherwise)."""

    c_compute: float = 0.0
    c_transfer: float = 0.0
    c_infrastructure: float = 0.0
    c_operations: float = 0.0

    @property
    def total(self) -> float:
        return self.c_compute + self.c_transfer + self.c_infrastructure + self.c_operations


def energy_microservices(profiles: Iterable[MicroservicePowerProfile], duration_s: float) -> float:
    """
    Energy in Wh of a set of microservices over `duration_s`, each drawing p_idle when
    idle and p_active for the fraction rho of the time it is busy.
    """
    terms = []
    for profile in profiles:
        if not 0.0 <= profile.rho <= 1.0:
            raise UtilizationOutOfRange(profile.service_id, profile.rho)
        terms.append(profile.p_idle * (1.0 - profile.rho) + profile.p_active * profile.rho)
    return math.fsum(terms) * duration_s / 3600.0


def measured_rho(profile: MicroservicePowerProfile, device: DeviceSpec, trace: RunTrace) -> float:
    if profile.activity is Activity.PROCESSING:
        busy = trace.busy_s.get(device.id, 0.0) / device.servers
    elif profile.activity is Activity.UPLINK:
        busy = trace.tx_s.get(device.id, {}).get(LinkTier.UPLINK, 0.0)
    else:
        busy = math.fsum(trace.tx_s.get(device.id, {}).values())
    return min(1.0, busy / trace.duration_s)


def metered_devices(scenario: ScenarioConfig, architecture: Architecture):
    """Enterprise-owned devices deployed in `architecture`; the cloud is billed, not metered."""
    return [d for d in scenario.devices_for(architecture) if d.owned_by_enterprise]


def account_energy(trace: RunTrace, scenario: ScenarioConfig) -> EnergyBreakdown:
    """
    Daily energy of a completed run: microservice power of every metered device at its
    measured utilization, plus the per-gigabyte tariff of every byte moved.

    Args:
        trace (RunTrace): Resource usage of the run.
        scenario (ScenarioConfig): The scenario the run executed.

    Returns:
        EnergyBreakdown: Energy per simulated day, in Wh.
    """
    per_device_class: Dict[DeviceClass, float] = {}
    for device in metered_devices(scenario, trace.architecture):
        profiles = [
            p.with_rho(measured_rho(p, device, trace)) for p in device.power_profile if p.deployed_in(trace.architecture)
        ]
        energy = energy_microservices(profiles, SECONDS_PER_DAY)
        per_device_class[device.device_class] = per_device_class.get(device.device_class, 0.0) + energy

    scale = SECONDS_PER_DAY / trace.duration_s
    per_tier = {
        tier: transmission_energy(trace.bytes_by_tier.get(tier, 0.0), scenario.link(tier)) * scale for tier in LinkTier
    }
    return EnergyBreakdown(
        e_processing=math.fsum(per_device_class.values()),
        e_transmission=math.fsum(per_tier.values()),
        per_tier=per_tier,
        per_device_class=per_device_class,
    )


def account_cost(
    trace: RunTrace,
    scenario: ScenarioConfig,
    pricing: Optional[PricingTable] = None,
    horizon_days: float = DAYS_PER_YEAR,
) -> CostBreakdown:
    """
    Operating cost of a completed run, extrapolated from the simulated horizon to
    `horizon_days` days.

    Cloud and edge compute are billed on busy hours. Enterprise-owned device compute is
    billed at `device_compute_per_hour` (zero in every preset). Transfer is billed on
    uplink gigabytes in both directions. Gateway-Edge pays edge maintenance on its busy
    hours, but never less than the daily floor, and every enterprise end device carries
    a flat upkeep.

    Args:
        trace (RunTrace): Resource usage of the run.
        scenario (ScenarioConfig): The scenario the run executed.
        pricing (PricingTable, optional): Overrides the scenario pricing.
        horizon_days (float): Accounting horizon in days. Defaults to a year.
    """
    pricing = pricing or scenario.pricing
    day = SECONDS_PER_DAY / trace.duration_s
    cloud_h, edge_h, device_h = 0.0, 0.0, 0.0
    end_devices = 0
    for device in scenario.devices_for(trace.architecture):
        hours = trace.busy_s.get(device.id, 0.0) / 3600.0 * day
        if device.device_class is DeviceClass.CLOUD:
            cloud_h += hours
        elif device.is_gateway_tier:
            edge_h += hours
        else:
            device_h += hours
        if device.owned_by_enterprise and device.device_class not in INFRASTRUCTURE_CLASSES:
            end_devices += 1

    compute = (
        cloud_h * pricing.cloud_gpu_per_hour
        + edge_h * pricing.edge_server_per_hour
        + device_h * pricing.device_compute_per_hour
    )
    transfer = trace.bytes_by_tier.get(LinkTier.UPLINK, 0.0) / GB * day * pricing.cloud_egress_per_gb
    infrastructure = 0.0
    has_edge = any(d.is_gateway_tier for d in scenario.devices_for(trace.architecture))
    if trace.architecture is Architecture.GATEWAY_EDGE and has_edge:
        infrastructure = max(edge_h, pricing.edge_maintenance_floor_hours_per_day) * pricing.edge_maintenance_per_hour
    operations = end_devices * pricing.device_upkeep_per_hour * 24.0

    return CostBreakdown(
        c_compute=compute * horizon_days,
        c_transfer=transfer * horizon_days,
        c_infrastructure=infrastructure * horizon_days,
        c_operations=operations * horizon_days,
    )
