# stdlib
import logging
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence, Union

# third party
import numpy as np
from tqdm import tqdm

# Continuum absolute
from continuum_sim import __version__
from continuum_sim.engine.simulator import RunMetrics, capability_fraction, run_simulation, write_trace
from continuum_sim.exceptions.exceptions import EmptyArchitectureSet, EmptyWindow, NegativeParameter
from continuum_sim.metrics.analytic import predict_energy, predict_mean_latency
from continuum_sim.model.scenario import load_scenario, serialize_scenario, with_duration, with_outage
from continuum_sim.model.types import Architecture, ScenarioConfig
from continuum_sim.stats.ttest import SIGNIFICANCE_LEVEL, SummaryStatistics, summarize, welch_t_test
from continuum_sim.workload.generator import dump_workload, generate_stream

log = logging.getLogger(__name__)

DEFAULT_RUNS = 10
DEFAULT_SEED = 42
HEADLINE_METRICS = ("latency_ms", "energy_wh_per_day", "cost_usd_per_year")
COMPARISONS = (Architecture.CLOUD_CENTRIC, Architecture.GATEWAY_EDGE)
ALL_SCENARIOS = "*"
IMPROVEMENT_METRICS = {
    "latency_reduction": "latency_ms",
    "energy_savings": "energy_wh_per_day",
    "cost_savings": "cost_usd_per_year",
}


@dataclass(frozen=True)
class RunRecord:
    scenario: str
    architecture: Architecture
    seed: int
    metrics: Dict[str, float]


def _clean(value):
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, (np.floating, np.integer)):
        return _clean(value.item())
    if isinstance(value, dict):
        return {str(k): _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(v) for v in value]
    return value


def capability(metrics: RunMetrics, windows) -> float:
    """Capability pooled over every window with time-critical arrivals (the whole horizon if none)."""
    windows = list(windows) or [(0.0, metrics.duration_s)]
    succeeded, arrived = 0.0, 0
    for window in windows:
        start, end = (window.start_s, window.end_s) if hasattr(window, "start_s") else window
        n = int(((metrics.created_at >= start) & (metrics.created_at < end) & ~metrics.deferrable).sum())
        try:
            succeeded += capability_fraction(metrics, window) * n
        except EmptyWindow:
            continue
        arrived += n
    return succeeded / arrived if arrived else math.nan


def dump_path(base: Union[str, Path], scenario: str, architecture: Optional[Architecture], single: bool) -> Path:
    base = Path(base)
    if single:
        return base
    suffix = scenario if architecture is None else f"{scenario}_{architecture.short_name}"
    return base.with_name(f"{base.stem}_{suffix}{base.suffix or '.csv'}")


def _run_seed(job) -> List[RunRecord]:
    scenario, architectures, seed, trace_path, workload_path, single = job
    stream = generate_stream(scenario, seed)
    if workload_path is not None:
        dump_workload(stream, dump_path(workload_path, scenario.name.value, None, single))
    records = []
    for arch in architectures:
        metrics = run_simulation(scenario, arch, seed, stream=stream)
        if trace_path is not None:
            write_trace(metrics, dump_path(trace_path, scenario.name.value, arch, single and len(architectures) == 1))
        summary = metrics.summary()
        summary["capability"] = capability(metrics, scenario.outage_windows)
        records.append(RunRecord(scenario.name.value, arch, seed, summary))
    return records


def _summary(values: Sequence[float], metric: str) -> SummaryStatistics:
    if len(values) == 1:
        return SummaryStatistics(n=1, mean=float(values[0]), sample_std=math.nan, ci95_halfwidth=None, metric_id=metric)
    return summarize(values, metric_id=metric)


def calibration_constants(scenario: ScenarioConfig) -> Dict[str, Any]:
    """The scenario constants a run depends on, with devices collapsed to one entry per class."""
    doc = serialize_scenario(scenario)
    classes: Dict[str, Any] = {}
    for device in doc.pop("devices"):
        entry = classes.setdefault(device["class"], {"count": 0})
        entry["count"] += 1
        for key in ("processing_power", "power_profile", "servers", "architectures", "owned_by_enterprise", "streams"):
            entry[key] = device[key]
    doc["device_classes"] = classes
    return doc


@dataclass
class ExperimentReport:
    """Everything one sweep produced, kept in the JSON-ready shape it is emitted in."""

    scenarios: List[str]
    architectures: List[Architecture]
    runs: int
    base_seed: int
    duration_s: Optional[float]
    condition: str
    cells: Dict[str, Dict[str, Dict[str, Any]]] = field(default_factory=dict)
    tests: List[Dict[str, Any]] = field(default_factory=list)
    tests_skipped: List[str] = field(default_factory=list)
    validation: Dict[str, Dict[str, Any]] = field(default_factory=dict)
    calibration: Dict[str, Any] = field(default_factory=dict)

    def summary_rows(self) -> List[Dict[str, Any]]:
        rows = []
        for scenario in self.scenarios:
            for arch in self.architectures:
                for metric, s in self.cells[scenario][arch.value]["summary"].items():
                    rows.append(
                        {
                            "scenario": scenario,
                            "architecture": arch.value,
                            "metric": metric,
                            "mean": s["mean"],
                            "std": s["std"],
                            "ci95": s["ci95"],
                        }
                    )
        improvement = self.validation.get(ALL_SCENARIOS, {}).get("improvement", {})
        for arch, values in improvement.items():
            for metric, value in values.items():
                rows.append(
                    {
                        "scenario": ALL_SCENARIOS,
                        "architecture": arch,
                        "metric": f"{metric}_vs_cloud",
                        "mean": value,
                        "std": None,
                        "ci95": None,
                    }
                )
        return rows

    def to_dict(self) -> Dict[str, Any]:
        return _clean(
            {
                "meta": {
                    "version": __version__,
                    "runs": self.runs,
                    "base_seed": self.base_seed,
                    "seeds": list(range(self.base_seed, self.base_seed + self.runs)),
                    "duration_s": self.duration_s,
                    "condition": self.condition,
                    "test_method": "welch",
                    "significance_level": SIGNIFICANCE_LEVEL,
                },
                "scenarios": self.scenarios,
                "architectures": [a.value for a in self.architectures],
                "cells": self.cells,
                "tests": self.tests,
                "tests_skipped": self.tests_skipped,
                "validation": self.validation,
                "calibration": self.calibration,
            }
        )


def _prepare(
    scenario: Union[str, Path, ScenarioConfig], duration_s: Optional[float], outage: Optional[Union[str, Path]]
) -> ScenarioConfig:
    if not isinstance(scenario, ScenarioConfig):
        scenario = load_scenario(scenario)
    if duration_s is not None:
        scenario = with_duration(scenario, duration_s)
    if outage is not None:
        scenario = with_outage(scenario, outage)
    return scenario


def _condition(outage) -> str:
    if outage is None or outage in ("none", "unstable", "down"):
        return outage or "none"
    return "schedule"


def run_experiment(
    scenarios: Union[str, Path, ScenarioConfig, Sequence[Union[str, Path, ScenarioConfig]]],
    architectures: Iterable[Architecture],
    runs: int = DEFAULT_RUNS,
    base_seed: int = DEFAULT_SEED,
    duration_s: Optional[float] = None,
    outage: Optional[Union[str, Path]] = None,
    parallel: int = 1,
    progress: bool = False,
    trace_path: Optional[Union[str, Path]] = None,
    workload_path: Optional[Union[str, Path]] = None,
) -> ExperimentReport:
    """
    Sweeps scenarios x architectures x seeds and aggregates the runs.

    Seeds are base_seed .. base_seed + runs - 1; all architectures of one seed share a
    single generated task stream. Results are aggregated after sorting by
    (architecture, seed), so the report does not depend on `parallel`.

    Args:
        scenarios: One or more preset names, scenario paths or loaded scenarios.
        architectures: The architectures to run.
        runs (int): Runs per architecture.
        base_seed (int): Seed of the first run.
        duration_s (float, optional): Overrides the scenario horizon.
        outage (str, optional): `none`, `unstable`, `down` or a schedule file.
        parallel (int): Worker processes.
        progress (bool): Show a progress bar.
        trace_path, workload_path: Optional CSV dumps of the base-seed run.
    """
    architectures = sorted(set(architectures), key=lambda a: list(Architecture).index(a))
    if not architectures:
        raise EmptyArchitectureSet()
    if runs < 1:
        raise NegativeParameter("runs", runs, "must be >= 1")
    if isinstance(scenarios, (str, Path, ScenarioConfig)):
        scenarios = [scenarios]
    prepared = [_prepare(s, duration_s, outage) for s in scenarios]
    single = len(prepared) == 1

    jobs = [
        (scenario, architectures, base_seed + r, trace_path if r == 0 else None, workload_path if r == 0 else None, single)
        for scenario in prepared
        for r in range(runs)
    ]
    log.info(f"Running {len(jobs) * len(architectures)} simulations over {len(prepared)} scenario(s)")
    records: List[RunRecord] = []
    with tqdm(total=len(jobs), disable=not progress, desc="runs") as bar:
        if parallel > 1:
            with ProcessPoolExecutor(max_workers=parallel) as pool:
                for result in pool.map(_run_seed, jobs):
                    records.extend(result)
                    bar.update(1)
        else:
            for job in jobs:
                records.extend(_run_seed(job))
                bar.update(1)

    report = ExperimentReport(
        scenarios=[s.name.value for s in prepared],
        architectures=architectures,
        runs=runs,
        base_seed=base_seed,
        duration_s=duration_s,
        condition=_condition(outage),
    )
    for scenario in prepared:
        _aggregate(report, scenario, [r for r in records if r.scenario == scenario.name.value])
    _aggregate_savings(report)
    return report


def _aggregate(report: ExperimentReport, scenario: ScenarioConfig, records: List[RunRecord]) -> None:
    name = scenario.name.value
    records = sorted(records, key=lambda r: (list(Architecture).index(r.architecture), r.seed))
    cells = report.cells.setdefault(name, {})
    samples: Dict[Architecture, Dict[str, List[float]]] = {}
    for arch in report.architectures:
        runs = [r for r in records if r.architecture is arch]
        by_metric = {m: [r.metrics[m] for r in runs] for m in runs[0].metrics}
        samples[arch] = by_metric
        summary = {}
        for metric, values in by_metric.items():
            s = _summary(values, metric)
            summary[metric] = {"n": s.n, "mean": s.mean, "std": s.sample_std, "ci95": s.ci95_halfwidth}
        cell = {"runs": [{"seed": r.seed, "metrics": r.metrics} for r in runs], "summary": summary}
        if report.condition == "none":
            latency = predict_mean_latency(scenario, arch)
            energy = predict_energy(scenario, arch).total
            simulated = summary["latency_ms"]["mean"]
            cell["analytic"] = {
                "latency_ms": latency,
                "energy_wh_per_day": energy,
                "latency_error": abs(simulated - latency) / latency,
            }
        cells[arch.value] = cell
    report.calibration[name] = calibration_constants(scenario)

    validation = report.validation.setdefault(name, {})
    dfc = samples.get(Architecture.DFC_AI)
    for baseline in COMPARISONS:
        other = samples.get(baseline)
        if dfc is None or other is None:
            continue
        tag = f"dfc_vs_{baseline.short_name}"
        for metric in HEADLINE_METRICS:
            base_mean = float(np.mean(other[metric]))
            reduction = 1.0 - float(np.mean(dfc[metric])) / base_mean if base_mean else math.nan
            validation[f"{metric}_reduction_{tag}"] = reduction
            if report.runs < 2:
                continue
            if any(not math.isfinite(v) for v in dfc[metric] + other[metric]):
                report.tests_skipped.append(f"{name} {tag} {metric}: a sample is undefined under this condition")
                continue
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                result = welch_t_test(dfc[metric], other[metric], metric_id=metric)
            report.tests.append(
                {
                    "scenario": name,
                    "comparison": tag,
                    "metric": metric,
                    "t_statistic": result.t_statistic,
                    "degrees_of_freedom": result.degrees_of_freedom,
                    "p_value": result.p_value,
                    "significant": result.significant,
                    "degenerate": result.degenerate,
                    "method": result.method,
                }
            )
            validation[f"p_{metric}_{tag}"] = result.p_value
    if report.runs < 2:
        report.tests_skipped.append(f"{name}: t-tests need at least 2 runs per architecture")

    if report.condition == "none" and dfc is not None and Architecture.CLOUD_CENTRIC in samples:
        predicted = 1.0 - cells[Architecture.DFC_AI.value]["analytic"]["energy_wh_per_day"] / cells[
            Architecture.CLOUD_CENTRIC.value
        ]["analytic"]["energy_wh_per_day"]
        simulated = validation["energy_wh_per_day_reduction_dfc_vs_cloud"]
        validation["energy_savings_predicted"] = predicted
        validation["energy_savings"] = simulated
        validation["energy_savings_error"] = abs(simulated - predicted) / predicted


def _aggregate_savings(report: ExperimentReport) -> None:
    """
    Fills the cross-scenario entry: the DFC-AI energy-savings validation and, per
    architecture, the mean improvement over Cloud-Centric across the scenarios.
    """
    aggregate: Dict[str, Any] = {}
    per_scenario = [v for v in report.validation.values() if "energy_savings" in v]
    if per_scenario:
        simulated = float(np.mean([v["energy_savings"] for v in per_scenario]))
        predicted = float(np.mean([v["energy_savings_predicted"] for v in per_scenario]))
        aggregate.update(
            {
                "energy_savings": simulated,
                "energy_savings_predicted": predicted,
                "energy_savings_error": abs(simulated - predicted) / predicted,
            }
        )
    improvement = improvement_over_cloud(report)
    if improvement:
        aggregate["improvement"] = improvement
    if aggregate:
        aggregate["scenario_count"] = len(report.scenarios)
        report.validation[ALL_SCENARIOS] = aggregate


def _mean_of(cells: Mapping[str, Any], arch: Architecture, metric: str) -> float:
    return float(cells[arch.value]["summary"][metric]["mean"])


def improvement_over_cloud(report: ExperimentReport) -> Dict[str, Dict[str, float]]:
    """
    Per non-cloud architecture, the relative reduction of each headline metric against
    Cloud-Centric averaged over the scenarios. Under an outage condition the mean gain in
    capability over Cloud-Centric is added as `resilience`.
    """
    cloud = Architecture.CLOUD_CENTRIC
    if cloud not in report.architectures:
        return {}
    improvement = {}
    for arch in report.architectures:
        if arch is cloud:
            continue
        values = {}
        for name, metric in IMPROVEMENT_METRICS.items():
            reductions = []
            for cells in report.cells.values():
                base, own = _mean_of(cells, cloud, metric), _mean_of(cells, arch, metric)
                reductions.append(1.0 - own / base if base and math.isfinite(base) else math.nan)
            values[name] = float(np.mean(reductions))
        if report.condition != "none":
            values["resilience"] = float(
                np.mean(
                    [
                        _mean_of(cells, arch, "capability") - _mean_of(cells, cloud, "capability")
                        for cells in report.cells.values()
                    ]
                )
            )
        improvement[arch.value] = values
    return improvement
