# stdlib
from dataclasses import dataclass, field, replace
from enum import Enum
from functools import cached_property
from typing import Dict, FrozenSet, Mapping, Optional, Tuple

MB = 10**6
GB = 10**9
SECONDS_PER_DAY = 86_400.0
DAYS_PER_YEAR = 365


class DeviceClass(str, Enum):
    SIMPLE_SENSOR = "SimpleSensor"
    SMART_SENSOR = "SmartSensor"
    CPU_DEVICE = "CpuDevice"
    GPU_DEVICE = "GpuDevice"
    GATEWAY = "Gateway"
    EDGE_SERVER = "EdgeServer"
    CLOUD = "Cloud"
    WEARABLE = "Wearable"
    CAMERA = "Camera"
    VEHICLE = "Vehicle"
    MINI_PC_GPU = "MiniPcGpu"


GPU_CLASSES = frozenset(
    {DeviceClass.GPU_DEVICE, DeviceClass.MINI_PC_GPU, DeviceClass.EDGE_SERVER, DeviceClass.CLOUD}
)
GATEWAY_TIER_CLASSES = frozenset({DeviceClass.GATEWAY, DeviceClass.EDGE_SERVER})
INFRASTRUCTURE_CLASSES = frozenset(
    {DeviceClass.GATEWAY, DeviceClass.EDGE_SERVER, DeviceClass.CLOUD, DeviceClass.MINI_PC_GPU}
)
DEFAULT_SERVERS = {
    DeviceClass.CLOUD: 4,
    DeviceClass.GATEWAY: 2,
    DeviceClass.EDGE_SERVER: 2,
}


class TaskKind(str, Enum):
    SIMPLE = "Simple"
    COMPLEX = "Complex"
    CLOUD_ONLY = "CloudOnly"
    NORMAL = "Normal"
    ANOMALY = "Anomaly"
    CRITICAL = "Critical"
    VITAL_SIGN = "VitalSign"
    VIDEO_FRAME = "VideoFrame"


class LinkTier(str, Enum):
    LOCAL_MESH = "LocalMesh"
    LOCAL_NETWORK = "LocalNetwork"
    UPLINK = "Uplink"


class Architecture(str, Enum):
    CLOUD_CENTRIC = "CloudCentric"
    GATEWAY_EDGE = "GatewayEdge"
    DFC_AI = "DfcAi"

    @property
    def pretty_name(self) -> str:
        return {
            Architecture.CLOUD_CENTRIC: "Cloud-Centric",
            Architecture.GATEWAY_EDGE: "Gateway-Edge",
            Architecture.DFC_AI: "DFC-AI",
        }[self]

    @property
    def short_name(self) -> str:
        return {
            Architecture.CLOUD_CENTRIC: "cloud",
            Architecture.GATEWAY_EDGE: "gateway",
            Architecture.DFC_AI: "dfc",
        }[self]

    @classmethod
    def from_short_name(cls, name: str) -> "Architecture":
        for arch in cls:
            if name in (arch.short_name, arch.value):
                return arch
        raise ValueError(name)


ALL_ARCHITECTURES = frozenset(Architecture)


class ScenarioName(str, Enum):
    DRONE_FLEET = "DroneFleet"
    SENSOR_NETWORK = "SensorNetwork"
    WORKER_SAFETY = "WorkerSafety"


class OutageMode(str, Enum):
    NORMAL = "Normal"
    INTERNET_UNSTABLE = "InternetUnstable"
    INTERNET_DOWN = "InternetDown"


class ProcessingLocation(str, Enum):
    ORIGIN_DEVICE = "OriginDevice"
    CLUSTER_GPU = "ClusterGpu"
    GATEWAY = "Gateway"
    EDGE_SERVER = "EdgeServer"
    CLOUD = "Cloud"
    FAILED = "Failed"
    DEFERRED = "Deferred"


class ArrivalProcess(str, Enum):
    POISSON = "poisson"
    PERIODIC = "periodic"


class Activity(str, Enum):
    """Which measured duty cycle is used as a microservice's utilization."""

    PROCESSING = "processing"
    TRANSMISSION = "transmission"
    UPLINK = "uplink"


@dataclass(frozen=True)
class MicroservicePowerProfile:
    service_id: str
    p_idle: float
    p_active: float
    rho: float = 0.0
    activity: Activity = Activity.PROCESSING
    architectures: FrozenSet[Architecture] = ALL_ARCHITECTURES

    def deployed_in(self, architecture: Architecture) -> bool:
        return architecture in self.architectures

    def with_rho(self, rho: float) -> "MicroservicePowerProfile":
        return replace(self, rho=rho)


@dataclass(frozen=True)
class WorkloadStream:
    task_kind: TaskKind
    rate_per_s: float
    process: ArrivalProcess = ArrivalProcess.POISSON


@dataclass(frozen=True)
class DeviceSpec:
    id: str
    device_class: DeviceClass
    processing_power: float
    power_profile: Tuple[MicroservicePowerProfile, ...]
    owned_by_enterprise: bool = True
    servers: int = 1
    architectures: FrozenSet[Architecture] = ALL_ARCHITECTURES
    mesh_member: bool = True
    generates_tasks: bool = True
    streams: Tuple[WorkloadStream, ...] = ()

    @property
    def is_gpu(self) -> bool:
        return self.device_class in GPU_CLASSES

    @property
    def is_gateway_tier(self) -> bool:
        return self.device_class in GATEWAY_TIER_CLASSES

    def deployed_in(self, architecture: Architecture) -> bool:
        return architecture in self.architectures


@dataclass(frozen=True)
class LatencyBreakdown:
    """
    Per-task latency components in ms. Fields an architecture does not use stay zero;
    `l_cloud` is the cloud round trip a gateway falls back to.
    """

    t_net_up: float = 0.0
    t_queue: float = 0.0
    t_proc: float = 0.0
    t_net_down: float = 0.0
    t_d_to_g: float = 0.0
    t_g_to_d: float = 0.0
    t_proc_local: float = 0.0
    t_collab: float = 0.0
    l_cloud: float = 0.0


@dataclass(frozen=True)
class ArchitectureParams:
    architecture: Architecture
    alpha: float = 0.0
    beta: float = 0.0
    offline_cache_coverage: float = 0.0
    offline_degradation: float = 2.0
    # cache share usable while the uplink flaps; defaults to the offline share
    intermittent_cache_coverage: Optional[float] = None

    def __post_init__(self) -> None:
        if self.intermittent_cache_coverage is None:
            object.__setattr__(self, "intermittent_cache_coverage", self.offline_cache_coverage)


@dataclass(frozen=True)
class TaskClass:
    kind: TaskKind
    payload_bytes: int
    base_proc_ms: float
    deadline_ms: Optional[float] = None
    deferrable: bool = False
    result_bytes: int = 1000
    payload_max_bytes: Optional[int] = None
    needs_gpu: bool = False
    requires_cloud: bool = False

    @property
    def mean_payload_bytes(self) -> float:
        if self.payload_max_bytes is None:
            return float(self.payload_bytes)
        return (self.payload_bytes + self.payload_max_bytes) / 2.0


@dataclass(frozen=True)
class LinkSpec:
    tier: LinkTier
    bandwidth_mbps: float
    latency_min_ms: float
    latency_max_ms: float
    reliability: float = 1.0
    energy_wh_per_gb: float = 0.0

    @property
    def mean_latency_ms(self) -> float:
        return (self.latency_min_ms + self.latency_max_ms) / 2.0


@dataclass(frozen=True)
class PricingTable:
    cloud_gpu_per_hour: float = 3.50
    edge_server_per_hour: float = 0.80
    edge_maintenance_per_hour: float = 0.20
    device_compute_per_hour: float = 0.00
    cloud_egress_per_gb: float = 0.09
    device_upkeep_per_hour: float = 0.0
    edge_maintenance_floor_hours_per_day: float = 4.0


@dataclass(frozen=True)
class NetworkPolicy:
    instability_factor: float = 0.3
    retry_backoff_ms: float = 100.0
    max_retries: int = 1


@dataclass(frozen=True)
class OutageWindow:
    start_s: float
    end_s: float
    mode: OutageMode

    def contains(self, t: float) -> bool:
        return self.start_s <= t < self.end_s


@dataclass(frozen=True)
class ClusterEvent:
    t_s: float
    device_id: str
    kind: str  # "join" | "leave"


@dataclass(frozen=True)
class ScenarioConfig:
    name: ScenarioName
    devices: Tuple[DeviceSpec, ...]
    task_classes: Dict[TaskKind, TaskClass]
    task_mixture: Dict[TaskKind, float]
    arrival_rate_per_device: float
    links: Dict[LinkTier, LinkSpec]
    architecture_params: Dict[Architecture, ArchitectureParams]
    pricing: PricingTable
    duration_s: float
    outage_windows: Tuple[OutageWindow, ...] = ()
    network: NetworkPolicy = NetworkPolicy()
    discovery_delay_s: float = 0.5
    cluster_events: Tuple[ClusterEvent, ...] = ()

    @cached_property
    def _device_index(self) -> Mapping[str, DeviceSpec]:
        return {d.id: d for d in self.devices}

    def device(self, device_id: str) -> DeviceSpec:
        return self._device_index[device_id]

    def devices_for(self, architecture: Architecture) -> Tuple[DeviceSpec, ...]:
        return tuple(d for d in self.devices if d.deployed_in(architecture))

    def params(self, architecture: Architecture) -> ArchitectureParams:
        return self.architecture_params[architecture]

    def link(self, tier: LinkTier) -> LinkSpec:
        return self.links[tier]

    def task_class(self, kind: TaskKind) -> TaskClass:
        return self.task_classes[kind]

    def class_rates(self) -> Dict[TaskKind, float]:
        """Expected arrivals per second of each task kind across the whole scenario."""
        rates: Dict[TaskKind, float] = {}
        for device in self.devices:
            for kind, rate in device_class_rates(self, device).items():
                rates[kind] = rates.get(kind, 0.0) + rate
        return rates


def device_class_rates(scenario: ScenarioConfig, device: DeviceSpec) -> Dict[TaskKind, float]:
    """Expected arrivals per second of each task kind emitted by one device."""
    if not device.generates_tasks:
        return {}
    if device.streams:
        rates: Dict[TaskKind, float] = {}
        for stream in device.streams:
            rates[stream.task_kind] = rates.get(stream.task_kind, 0.0) + stream.rate_per_s
        return rates
    return {
        kind: p * scenario.arrival_rate_per_device
        for kind, p in scenario.task_mixture.items()
        if p > 0
    }


@dataclass
class RunTrace:
    """Accumulated resource usage of one completed run, consumed by energy and cost accounting."""

    architecture: Architecture
    duration_s: float
    deployed: Tuple[str, ...] = ()
    busy_s: Dict[str, float] = field(default_factory=dict)
    tx_s: Dict[str, Dict[LinkTier, float]] = field(default_factory=dict)
    bytes_by_tier: Dict[LinkTier, float] = field(default_factory=dict)
    task_count: int = 0

    def add_busy(self, device_id: str, seconds: float) -> None:
        self.busy_s[device_id] = self.busy_s.get(device_id, 0.0) + seconds

    def add_transmission(self, sender_id: Optional[str], tier: LinkTier, nbytes: float, seconds: float) -> None:
        self.bytes_by_tier[tier] = self.bytes_by_tier.get(tier, 0.0) + nbytes
        if sender_id is not None:
            per_tier = self.tx_s.setdefault(sender_id, {})
            per_tier[tier] = per_tier.get(tier, 0.0) + seconds


# Where each symbol of the latency, energy and cost equations is parameterised.
# `*` fans out over every element of a sequence or mapping.
SYMBOL_TABLE: Dict[str, Tuple[str, ...]] = {
    "L_cloud": ("links.Uplink.bandwidth_mbps", "links.Uplink.latency_max_ms"),
    "T_net^up": ("links.Uplink.bandwidth_mbps", "links.Uplink.latency_min_ms", "task_classes.*.payload_bytes"),
    "T_queue": ("devices.*.servers", "arrival_rate_per_device"),
    "T_proc^cloud": ("task_classes.*.base_proc_ms", "devices.*.processing_power"),
    "T_net^down": ("links.Uplink.latency_max_ms", "task_classes.*.result_bytes"),
    "L_gateway": ("links.LocalNetwork.bandwidth_mbps",),
    "T_d->g": ("links.LocalNetwork.bandwidth_mbps", "links.LocalNetwork.latency_min_ms"),
    "T_proc^gateway": ("devices.*.processing_power",),
    "T_g->d": ("links.LocalNetwork.latency_max_ms",),
    "alpha": ("architecture_params.GatewayEdge.alpha",),
    "L_DFC": ("architecture_params.DfcAi.beta",),
    "T_proc^local": ("devices.*.processing_power", "links.LocalMesh.bandwidth_mbps"),
    "beta": ("architecture_params.DfcAi.beta",),
    "T_collab": ("links.Uplink.latency_min_ms", "links.Uplink.latency_max_ms"),
    "E_total": ("devices.*.power_profile", "links.*.energy_wh_per_gb"),
    "E_processing": ("devices.*.power_profile",),
    "E_transmission": ("links.*.energy_wh_per_gb",),
    "E_trans": ("links.*.energy_wh_per_gb",),
    "N": ("devices.*.power_profile",),
    "P_idle^i": ("devices.*.power_profile.*.p_idle",),
    "P_active^i": ("devices.*.power_profile.*.p_active",),
    "rho_i": ("devices.*.power_profile.*.rho",),
    "T": ("duration_s",),
    "C_total": ("pricing",),
    "C_compute": ("pricing.cloud_gpu_per_hour", "pricing.edge_server_per_hour", "pricing.device_compute_per_hour"),
    "C_transfer": ("pricing.cloud_egress_per_gb",),
    "C_infrastructure": ("pricing.edge_maintenance_per_hour", "pricing.edge_maintenance_floor_hours_per_day"),
    "C_operations": ("pricing.device_upkeep_per_hour",),
}
