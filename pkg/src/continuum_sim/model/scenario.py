# stdlib
import json
import math
from dataclasses import asdict, fields, is_dataclass, replace
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Mapping, Sequence, Tuple, Union

# Continuum relative
from .types import (
    ALL_ARCHITECTURES,
    DEFAULT_SERVERS,
    GPU_CLASSES,
    INFRASTRUCTURE_CLASSES,
    Activity,
    Architecture,
    ArchitectureParams,
    ArrivalProcess,
    ClusterEvent,
    DeviceClass,
    DeviceSpec,
    LinkSpec,
    LinkTier,
    MicroservicePowerProfile,
    NetworkPolicy,
    OutageMode,
    OutageWindow,
    PricingTable,
    ScenarioConfig,
    ScenarioName,
    TaskClass,
    TaskKind,
    WorkloadStream,
)

# Continuum absolute
from continuum_sim.exceptions.exceptions import (
    InvalidScenario,
    MixtureNotNormalized,
    NegativeParameter,
    OverlappingOutageWindows,
    UnknownDeviceClass,
)

package_dir = Path(__file__).parent.parent
SCENARIO_DIR = package_dir / "scenarios"
REFERENCE_DIR = package_dir / "refs"

PRESET_FILES = {
    ScenarioName.DRONE_FLEET: "drone_fleet.json",
    ScenarioName.SENSOR_NETWORK: "sensor_network.json",
    ScenarioName.WORKER_SAFETY: "worker_safety.json",
}

MIXTURE_TOLERANCE = 1e-9
MIN_GPU_PROCESSING_POWER = 10.0


def list_presets() -> List[str]:
    return [Path(f).stem for f in PRESET_FILES.values()]


def _preset_document(name: ScenarioName) -> Dict[str, Any]:
    with open(SCENARIO_DIR / PRESET_FILES[name], "r") as f:
        return json.load(f)


def _enum(enum_cls, value, path: str):
    try:
        return enum_cls(value)
    except ValueError:
        raise UnknownDeviceClass(path, value, [e.value for e in enum_cls])


def _number(doc: Mapping, key: str, path: str, default=None, positive: bool = False, upper=None) -> float:
    if key not in doc:
        if default is None:
            raise InvalidScenario(f"{path}.{key}" if path else key, "required key is missing.")
        return default
    value = doc[key]
    key_path = f"{path}.{key}" if path else key
    if isinstance(value, bool) or not isinstance(value, (int, float)) or math.isnan(value):
        raise InvalidScenario(key_path, f"expected a number, got {value!r}.")
    if positive and value <= 0:
        raise NegativeParameter(key_path, value, "must be > 0")
    if value < 0:
        raise NegativeParameter(key_path, value)
    if upper is not None and value > upper:
        raise NegativeParameter(key_path, value, f"must be <= {upper}")
    return value


def _architectures(values, path: str):
    if values is None:
        return ALL_ARCHITECTURES
    parsed = set()
    for i, v in enumerate(values):
        try:
            parsed.add(Architecture.from_short_name(v))
        except ValueError:
            raise UnknownDeviceClass(f"{path}[{i}]", v, [a.value for a in Architecture])
    return frozenset(parsed)


def _parse_task_classes(doc: Mapping) -> Dict[TaskKind, TaskClass]:
    raw = doc.get("task_classes")
    if not isinstance(raw, Mapping) or not raw:
        raise NegativeParameter("task_classes", raw, "at least one task class is required")
    classes = {}
    for name, entry in raw.items():
        path = f"task_classes.{name}"
        kind = _enum(TaskKind, name, path)
        payload = int(_number(entry, "payload_bytes", path, positive=True))
        payload_max = entry.get("payload_max_bytes")
        if payload_max is not None:
            payload_max = int(_number(entry, "payload_max_bytes", path, positive=True))
            if payload_max < payload:
                raise NegativeParameter(f"{path}.payload_max_bytes", payload_max, "must be >= payload_bytes")
        deadline = entry.get("deadline_ms")
        if deadline is not None:
            deadline = float(_number(entry, "deadline_ms", path, positive=True))
        classes[kind] = TaskClass(
            kind=kind,
            payload_bytes=payload,
            base_proc_ms=float(_number(entry, "base_proc_ms", path, positive=True)),
            deadline_ms=deadline,
            deferrable=bool(entry.get("deferrable", False)),
            result_bytes=int(_number(entry, "result_bytes", path, default=1000)),
            payload_max_bytes=payload_max,
            needs_gpu=bool(entry.get("needs_gpu", False)),
            requires_cloud=bool(entry.get("requires_cloud", False)),
        )
    return classes


def _parse_mixture(doc: Mapping, classes: Mapping[TaskKind, TaskClass]) -> Dict[TaskKind, float]:
    raw = doc.get("task_mixture")
    if not isinstance(raw, Mapping):
        raise MixtureNotNormalized("task_mixture", 0.0)
    mixture = {}
    for name, p in raw.items():
        path = f"task_mixture.{name}"
        kind = _enum(TaskKind, name, path)
        if kind not in classes:
            raise UnknownDeviceClass(path, name, [k.value for k in classes])
        mixture[kind] = float(_number(raw, name, "task_mixture", upper=1.0))
    total = math.fsum(mixture.values())
    if abs(total - 1.0) > MIXTURE_TOLERANCE:
        raise MixtureNotNormalized("task_mixture", total)
    return mixture


def _parse_profile(entry: Mapping, path: str) -> MicroservicePowerProfile:
    p_idle = float(_number(entry, "p_idle", path))
    p_active = float(_number(entry, "p_active", path))
    if p_active < p_idle:
        raise NegativeParameter(f"{path}.p_active", p_active, f"must be >= p_idle ({p_idle})")
    return MicroservicePowerProfile(
        service_id=str(entry.get("service_id", "inference")),
        p_idle=p_idle,
        p_active=p_active,
        rho=float(_number(entry, "rho", path, default=0.0, upper=1.0)),
        activity=_enum(Activity, entry.get("activity", Activity.PROCESSING.value), f"{path}.activity"),
        architectures=_architectures(entry.get("architectures"), f"{path}.architectures"),
    )


def _parse_device(entry: Mapping, device_id: str, path: str, classes) -> DeviceSpec:
    device_class = _enum(DeviceClass, entry.get("class"), f"{path}.class")
    processing_power = float(_number(entry, "processing_power", path, positive=True))
    if device_class in GPU_CLASSES:
        if processing_power < MIN_GPU_PROCESSING_POWER:
            raise NegativeParameter(
                f"{path}.processing_power",
                processing_power,
                f"GPU-class devices require processing_power >= {MIN_GPU_PROCESSING_POWER}",
            )
    raw_profiles = entry.get("power_profile") or []
    if not raw_profiles:
        raise NegativeParameter(f"{path}.power_profile", raw_profiles, "at least one power profile entry is required")
    profiles = tuple(_parse_profile(p, f"{path}.power_profile[{i}]") for i, p in enumerate(raw_profiles))
    streams = []
    for i, s in enumerate(entry.get("streams", [])):
        spath = f"{path}.streams[{i}]"
        kind = _enum(TaskKind, s.get("task"), f"{spath}.task")
        if kind not in classes:
            raise UnknownDeviceClass(f"{spath}.task", kind.value, [k.value for k in classes])
        streams.append(
            WorkloadStream(
                task_kind=kind,
                rate_per_s=float(_number(s, "rate_per_s", spath, positive=True)),
                process=_enum(ArrivalProcess, s.get("process", "poisson"), f"{spath}.process"),
            )
        )
    servers = int(_number(entry, "servers", path, default=DEFAULT_SERVERS.get(device_class, 1), positive=True))
    return DeviceSpec(
        id=device_id,
        device_class=device_class,
        processing_power=processing_power,
        power_profile=profiles,
        owned_by_enterprise=bool(entry.get("owned_by_enterprise", device_class is not DeviceClass.CLOUD)),
        servers=servers,
        architectures=_architectures(entry.get("architectures"), f"{path}.architectures"),
        mesh_member=bool(entry.get("mesh_member", device_class not in (DeviceClass.CLOUD, DeviceClass.GATEWAY))),
        generates_tasks=bool(entry.get("generates_tasks", device_class not in INFRASTRUCTURE_CLASSES)),
        streams=tuple(streams),
    )


def _parse_devices(doc: Mapping, classes) -> Tuple[DeviceSpec, ...]:
    raw = doc.get("devices")
    if not isinstance(raw, Sequence) or len(raw) == 0:
        raise NegativeParameter("devices", raw, "at least one device is required")
    devices = []
    seen = set()
    for i, entry in enumerate(raw):
        path = f"devices[{i}]"
        if "id" not in entry:
            raise InvalidScenario(f"{path}.id", "required key is missing.")
        count = int(_number(entry, "count", path, default=1, positive=True))
        if count == 1 and "count" not in entry:
            ids = [str(entry["id"])]
        else:
            width = len(str(count))
            ids = [f"{entry['id']}-{k:0{width}d}" for k in range(count)]
        for device_id in ids:
            if device_id in seen:
                raise InvalidScenario(f"{path}.id", f"duplicate device id {device_id!r}.")
            seen.add(device_id)
            devices.append(_parse_device(entry, device_id, path, classes))
    return tuple(devices)


def _parse_links(doc: Mapping) -> Dict[LinkTier, LinkSpec]:
    raw = doc.get("links") or {}
    links = {}
    for tier in LinkTier:
        path = f"links.{tier.value}"
        if tier.value not in raw:
            raise InvalidScenario(path, "required link tier is missing.")
        entry = raw[tier.value]
        lat_min = float(_number(entry, "latency_min_ms", path))
        lat_max = float(_number(entry, "latency_max_ms", path))
        if lat_max < lat_min:
            raise NegativeParameter(f"{path}.latency_max_ms", lat_max, f"must be >= latency_min_ms ({lat_min})")
        links[tier] = LinkSpec(
            tier=tier,
            bandwidth_mbps=float(_number(entry, "bandwidth_mbps", path, positive=True)),
            latency_min_ms=lat_min,
            latency_max_ms=lat_max,
            reliability=float(_number(entry, "reliability", path, default=1.0, positive=True, upper=1.0)),
            energy_wh_per_gb=float(_number(entry, "energy_wh_per_gb", path)),
        )
    for name in raw:
        if name not in {t.value for t in LinkTier}:
            raise UnknownDeviceClass(f"links.{name}", name, [t.value for t in LinkTier])
    return links


def _parse_architectures(doc: Mapping) -> Dict[Architecture, ArchitectureParams]:
    raw = doc.get("architectures") or {}
    params = {arch: ArchitectureParams(architecture=arch) for arch in Architecture}
    for name, entry in raw.items():
        path = f"architectures.{name}"
        try:
            arch = Architecture.from_short_name(name)
        except ValueError:
            raise UnknownDeviceClass(path, name, [a.value for a in Architecture])
        offline = float(_number(entry, "offline_cache_coverage", path, default=0.0, upper=1.0))
        params[arch] = ArchitectureParams(
            architecture=arch,
            alpha=float(_number(entry, "alpha", path, default=0.0, upper=1.0)),
            beta=float(_number(entry, "beta", path, default=0.0, upper=1.0)),
            offline_cache_coverage=offline,
            offline_degradation=float(_number(entry, "offline_degradation", path, default=2.0, positive=True)),
            intermittent_cache_coverage=float(
                _number(entry, "intermittent_cache_coverage", path, default=offline, upper=1.0)
            ),
        )
    return params


def _parse_pricing(doc: Mapping, devices: Sequence[DeviceSpec]) -> PricingTable:
    raw = doc.get("pricing") or {}
    defaults = PricingTable()
    values = {f.name: float(_number(raw, f.name, "pricing", default=getattr(defaults, f.name))) for f in fields(PricingTable)}
    pricing = PricingTable(**values)
    if pricing.device_compute_per_hour > 0 and any(
        d.owned_by_enterprise and d.device_class not in INFRASTRUCTURE_CLASSES for d in devices
    ):
        raise InvalidScenario(
            "pricing.device_compute_per_hour",
            "device compute must be 0 when devices are enterprise-owned.",
        )
    return pricing


def _parse_outages(doc: Mapping, duration_s: float) -> Tuple[OutageWindow, ...]:
    windows = []
    for i, entry in enumerate(doc.get("outage_windows") or []):
        path = f"outage_windows[{i}]"
        if isinstance(entry, Mapping):
            start, end = _number(entry, "start_s", path), _number(entry, "end_s", path)
            mode = entry.get("mode")
        else:
            start, end, mode = entry
        mode = _enum(OutageMode, mode, f"{path}.mode")
        if mode is OutageMode.NORMAL:
            raise InvalidScenario(f"{path}.mode", "outage windows must be InternetDown or InternetUnstable.")
        start, end = float(start), float(end)
        if not (0.0 <= start < end <= duration_s):
            raise OverlappingOutageWindows(path, f"window [{start}, {end}) must lie within [0, {duration_s}] with start < end.")
        windows.append(OutageWindow(start, end, mode))
    windows.sort(key=lambda w: w.start_s)
    for i in range(1, len(windows)):
        if windows[i].start_s < windows[i - 1].end_s:
            raise OverlappingOutageWindows(
                f"outage_windows[{i}]",
                f"window starting at {windows[i].start_s} overlaps the window ending at {windows[i - 1].end_s}.",
            )
    return tuple(windows)


def _parse_cluster_events(doc: Mapping, devices: Sequence[DeviceSpec]) -> Tuple[ClusterEvent, ...]:
    ids = {d.id for d in devices}
    events = []
    for i, entry in enumerate(doc.get("cluster_events") or []):
        path = f"cluster_events[{i}]"
        if entry.get("device_id") not in ids:
            raise InvalidScenario(f"{path}.device_id", f"unknown device {entry.get('device_id')!r}.")
        if entry.get("kind") not in ("join", "leave"):
            raise InvalidScenario(f"{path}.kind", f"expected 'join' or 'leave', got {entry.get('kind')!r}.")
        events.append(ClusterEvent(float(_number(entry, "t_s", path)), entry["device_id"], entry["kind"]))
    return tuple(sorted(events, key=lambda e: (e.t_s, e.device_id)))


def validate_scenario(raw_config: Mapping[str, Any]) -> ScenarioConfig:
    """
    Validates a parsed scenario document and returns an immutable ScenarioConfig.

    Keys the document omits are filled from the preset of the same `name`.

    Args:
        raw_config (Mapping[str, Any]): The parsed JSON document.

    Returns:
        ScenarioConfig: The fully-populated scenario.
    """
    name = _enum(ScenarioName, raw_config.get("name"), "name")
    doc = {**_preset_document(name), **raw_config}

    classes = _parse_task_classes(doc)
    mixture = _parse_mixture(doc, classes)
    devices = _parse_devices(doc, classes)
    duration_s = float(_number(doc, "duration_s", "", positive=True))
    network_raw = doc.get("network") or {}
    network = NetworkPolicy(
        instability_factor=float(_number(network_raw, "instability_factor", "network", default=0.3, upper=1.0)),
        retry_backoff_ms=float(_number(network_raw, "retry_backoff_ms", "network", default=100.0)),
        max_retries=int(_number(network_raw, "max_retries", "network", default=1)),
    )
    return ScenarioConfig(
        name=name,
        devices=devices,
        task_classes=classes,
        task_mixture=mixture,
        arrival_rate_per_device=float(_number(doc, "arrival_rate_per_device", "", positive=True)),
        links=_parse_links(doc),
        architecture_params=_parse_architectures(doc),
        pricing=_parse_pricing(doc, devices),
        duration_s=duration_s,
        outage_windows=_parse_outages(doc, duration_s),
        network=network,
        discovery_delay_s=float(_number(doc, "discovery_delay_s", "", default=0.5)),
        cluster_events=_parse_cluster_events(doc, devices),
    )


def _jsonable(value):
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, (frozenset, set)):
        return sorted(_jsonable(v) for v in value)
    if isinstance(value, Mapping):
        return {_jsonable(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    return value


def serialize_scenario(scenario: ScenarioConfig) -> Dict[str, Any]:
    """Inverse of validate_scenario: a JSON-ready document with every device spelled out."""
    devices = []
    for d in scenario.devices:
        devices.append(
            {
                "id": d.id,
                "class": d.device_class.value,
                "processing_power": d.processing_power,
                "power_profile": [_jsonable(asdict(p)) for p in d.power_profile],
                "owned_by_enterprise": d.owned_by_enterprise,
                "servers": d.servers,
                "architectures": _jsonable(d.architectures),
                "mesh_member": d.mesh_member,
                "generates_tasks": d.generates_tasks,
                "streams": [
                    {"task": s.task_kind.value, "rate_per_s": s.rate_per_s, "process": s.process.value}
                    for s in d.streams
                ],
            }
        )
    task_classes = {}
    for kind, c in scenario.task_classes.items():
        entry = _jsonable(asdict(c))
        del entry["kind"]
        task_classes[kind.value] = {k: v for k, v in entry.items() if v is not None}
    return {
        "name": scenario.name.value,
        "devices": devices,
        "task_classes": task_classes,
        "task_mixture": _jsonable(scenario.task_mixture),
        "arrival_rate_per_device": scenario.arrival_rate_per_device,
        "links": {t.value: {k: v for k, v in _jsonable(asdict(l)).items() if k != "tier"} for t, l in scenario.links.items()},
        "architectures": {
            a.value: {k: v for k, v in _jsonable(asdict(p)).items() if k != "architecture"}
            for a, p in scenario.architecture_params.items()
        },
        "pricing": asdict(scenario.pricing),
        "duration_s": scenario.duration_s,
        "outage_windows": [_jsonable(asdict(w)) for w in scenario.outage_windows],
        "network": asdict(scenario.network),
        "discovery_delay_s": scenario.discovery_delay_s,
        "cluster_events": [asdict(e) for e in scenario.cluster_events],
    }


def load_scenario(path_or_preset: Union[str, Path]) -> ScenarioConfig:
    """Loads a scenario from a JSON file, or a packaged preset by stem (`drone_fleet`) or name (`DroneFleet`)."""
    key = str(path_or_preset)
    for name, filename in PRESET_FILES.items():
        if key in (name.value, Path(filename).stem, filename):
            return validate_scenario(_preset_document(name))
    with open(path_or_preset, "r") as f:
        return validate_scenario(json.load(f))


def with_duration(scenario: ScenarioConfig, duration_s: float) -> ScenarioConfig:
    """Changes the horizon, clipping outage windows and cluster events to it."""
    if duration_s <= 0:
        raise NegativeParameter("duration_s", duration_s, "must be > 0")
    windows = tuple(
        OutageWindow(w.start_s, min(w.end_s, duration_s), w.mode)
        for w in scenario.outage_windows
        if w.start_s < duration_s
    )
    events = tuple(e for e in scenario.cluster_events if e.t_s < duration_s)
    return replace(scenario, duration_s=float(duration_s), outage_windows=windows, cluster_events=events)


def with_outage(scenario: ScenarioConfig, condition: Union[str, Path, None]) -> ScenarioConfig:
    """
    Replaces the outage schedule. `condition` is `none`, `unstable`, `down` (the whole
    horizon), or the path of a JSON file holding a window list.
    """
    if condition is None or condition == "none":
        return replace(scenario, outage_windows=())
    if condition == "unstable":
        return replace(scenario, outage_windows=(OutageWindow(0.0, scenario.duration_s, OutageMode.INTERNET_UNSTABLE),))
    if condition == "down":
        return replace(scenario, outage_windows=(OutageWindow(0.0, scenario.duration_s, OutageMode.INTERNET_DOWN),))
    with open(condition, "r") as f:
        raw = json.load(f)
    if isinstance(raw, Mapping):
        raw = raw.get("outage_windows", [])
    return replace(scenario, outage_windows=_parse_outages({"outage_windows": raw}, scenario.duration_s))


def resolve_symbol_path(scenario: ScenarioConfig, path: str) -> List[Any]:
    """Walks a dotted path over a scenario; `*` fans out over sequences and mappings."""
    current = [scenario]
    for part in path.split("."):
        following = []
        for node in current:
            if part == "*":
                values = node.values() if isinstance(node, Mapping) else node
                following.extend(values)
            elif isinstance(node, Mapping):
                match = [v for k, v in node.items() if getattr(k, "value", k) == part]
                if not match:
                    raise KeyError(path)
                following.extend(match)
            elif is_dataclass(node) and hasattr(node, part):
                following.append(getattr(node, part))
            else:
                raise KeyError(path)
        current = following
    return current
