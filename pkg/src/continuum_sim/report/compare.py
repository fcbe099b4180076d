# stdlib
import json
import logging
import math
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Union

# third party
import pandas as pd
from termcolor import colored

# Continuum relative
from .experiment import ALL_SCENARIOS, IMPROVEMENT_METRICS, ExperimentReport

# Continuum absolute
from continuum_sim.exceptions.exceptions import MissingReferenceMetric
from continuum_sim.model.scenario import REFERENCE_DIR

log = logging.getLogger(__name__)

DEFAULT_REFERENCE = REFERENCE_DIR / "published_tables.json"
ANALYTIC_PREFIX = "analytic."
IMPROVEMENT_PREFIX = "improvement."


@dataclass(frozen=True)
class CellComparison:
    id: str
    scenario: str
    architecture: Optional[str]
    metric: str
    expected: float
    actual: Optional[float]
    tolerance: str
    error: Optional[float]
    passed: bool
    gating: bool
    skipped: Optional[str] = None


@dataclass
class ComparisonResult:
    reference_id: str
    cells: List[CellComparison]

    @property
    def failures(self) -> List[CellComparison]:
        return [c for c in self.cells if c.gating and c.skipped is None and not c.passed]

    @property
    def passed(self) -> bool:
        return not self.failures

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([asdict(c) for c in self.cells])

    def format(self, color: bool = True) -> str:
        lines = [f"Reference: {self.reference_id}"]
        for c in self.cells:
            where = c.scenario if c.architecture is None else f"{c.scenario}/{c.architecture}"
            if c.skipped is not None:
                status, tint = "SKIP", "yellow"
                detail = c.skipped
            else:
                status, tint = ("PASS", "green") if c.passed else ("FAIL", "red")
                if not c.gating:
                    status, tint = f"{status}*", "cyan" if c.passed else "magenta"
                detail = f"expected {c.expected:g}, got {_fmt(c.actual)}, {c.tolerance}, error {_fmt(c.error)}"
            lines.append(f"{colored(status, tint) if color else status:>6} {c.id} [{where} {c.metric}] {detail}")
        verdict = "all gating cells pass" if self.passed else f"{len(self.failures)} gating cell(s) failed"
        lines.append(verdict + " (* = non-gating)")
        return "\n".join(lines)


def _fmt(value: Optional[float]) -> str:
    return "n/a" if value is None else f"{value:.4g}"


def _load_report(report: Union[ExperimentReport, Mapping, str, Path]) -> Dict[str, Any]:
    if isinstance(report, ExperimentReport):
        return report.to_dict()
    if isinstance(report, Mapping):
        return dict(report)
    path = Path(report)
    if path.is_dir():
        path = path / "report.json"
    with open(path, "r") as f:
        return json.load(f)


def _judge(expected: float, actual: float, tolerance: Mapping[str, Any]):
    kind = tolerance["kind"]
    if kind == "relative":
        error = abs(actual - expected) / abs(expected) if expected else abs(actual)
        return error, error <= tolerance["value"] + 1e-12, f"relative <= {tolerance['value']:g}"
    if kind == "absolute":
        error = abs(actual - expected)
        return error, error <= tolerance["value"] + 1e-12, f"absolute <= {tolerance['value']:g}"
    if kind == "interval":
        low, high = tolerance["low"], tolerance["high"]
        error = max(low - actual, actual - high, 0.0)
        return error, low <= actual <= high, f"within [{low:g}, {high:g}]"
    raise ValueError(f"Unknown tolerance kind '{kind}'")


def _lookup(doc: Mapping[str, Any], entry: Mapping[str, Any], scenario: str) -> Any:
    metric = entry["metric"]
    architecture = entry.get("architecture")
    if architecture is None:
        values = doc["validation"].get(scenario, {})
        if metric not in values:
            raise MissingReferenceMetric(entry["id"], metric)
        return values[metric]
    cell = doc["cells"][scenario][architecture]
    if metric.startswith(ANALYTIC_PREFIX):
        values = cell.get("analytic", {})
        metric = metric[len(ANALYTIC_PREFIX) :]
        if metric not in values:
            raise MissingReferenceMetric(entry["id"], entry["metric"])
        return values[metric]
    if metric not in cell["summary"]:
        raise MissingReferenceMetric(entry["id"], metric)
    return cell["summary"][metric]["mean"]


def _skip(entry, scenario, reason) -> CellComparison:
    return CellComparison(
        id=entry["id"],
        scenario=scenario,
        architecture=entry.get("architecture"),
        metric=entry["metric"],
        expected=entry["expected"],
        actual=None,
        tolerance=entry["tolerance"]["kind"],
        error=None,
        passed=False,
        gating=entry.get("gating", True),
        skipped=reason,
    )


def _compare_improvement(doc: Mapping[str, Any], entry: Mapping[str, Any]) -> CellComparison:
    architecture = entry.get("architecture")
    if architecture not in doc["architectures"]:
        return _skip(entry, ALL_SCENARIOS, "architecture not in report")
    improvement = doc["validation"].get(ALL_SCENARIOS, {}).get("improvement", {}).get(architecture)
    if improvement is None:
        return _skip(entry, ALL_SCENARIOS, "no comparison with Cloud-Centric in report")
    metric = entry["metric"][len(IMPROVEMENT_PREFIX) :]
    if metric not in IMPROVEMENT_METRICS and metric != "resilience":
        raise MissingReferenceMetric(entry["id"], entry["metric"])
    actual = improvement.get(metric)
    if actual is None:
        return _skip(entry, ALL_SCENARIOS, "metric undefined in report")
    error, passed, tolerance = _judge(entry["expected"], actual, entry["tolerance"])
    return CellComparison(
        id=entry["id"],
        scenario=ALL_SCENARIOS,
        architecture=architecture,
        metric=entry["metric"],
        expected=entry["expected"],
        actual=float(actual),
        tolerance=tolerance,
        error=error,
        passed=passed,
        gating=entry.get("gating", True),
    )


def _compare_entry(doc: Mapping[str, Any], entry: Mapping[str, Any]) -> List[CellComparison]:
    condition = doc["meta"]["condition"]
    if entry.get("condition", "none") != condition:
        return [_skip(entry, entry["scenario"], f"condition '{entry.get('condition', 'none')}' not in report")]
    if entry["metric"].startswith(IMPROVEMENT_PREFIX):
        return [_compare_improvement(doc, entry)]
    architecture = entry.get("architecture")
    if entry["scenario"] == ALL_SCENARIOS and architecture is not None:
        scenarios = list(doc["scenarios"])
    else:
        scenarios = [entry["scenario"]]

    results = []
    for scenario in scenarios:
        if scenario != ALL_SCENARIOS and scenario not in doc["scenarios"]:
            results.append(_skip(entry, scenario, "scenario not in report"))
            continue
        if scenario == ALL_SCENARIOS and ALL_SCENARIOS not in doc["validation"]:
            results.append(_skip(entry, scenario, "no cross-scenario validation in report"))
            continue
        if architecture is not None and architecture not in doc["architectures"]:
            results.append(_skip(entry, scenario, "architecture not in report"))
            continue
        if (
            architecture is None
            and entry["metric"].startswith("p_")
            and entry["metric"] not in doc["validation"].get(scenario, {})
        ):
            results.append(_skip(entry, scenario, "significance test not run"))
            continue
        actual = _lookup(doc, entry, scenario)
        if actual is None or (isinstance(actual, float) and math.isnan(actual)):
            results.append(_skip(entry, scenario, "metric undefined in report"))
            continue
        error, passed, tolerance = _judge(entry["expected"], actual, entry["tolerance"])
        results.append(
            CellComparison(
                id=entry["id"],
                scenario=scenario,
                architecture=architecture,
                metric=entry["metric"],
                expected=entry["expected"],
                actual=float(actual),
                tolerance=tolerance,
                error=error,
                passed=passed,
                gating=entry.get("gating", True),
            )
        )
    return results


def resolve_reference(path: Union[str, Path]) -> Path:
    """
    The reference file at `path`, or else the packaged table whose file name or listed
    `aliases` match the name of `path`. Unmatched paths are returned unchanged.
    """
    path = Path(path)
    if path.exists():
        return path
    for candidate in sorted(REFERENCE_DIR.glob("*.json")):
        if candidate.name == path.name:
            return candidate
        with open(candidate, "r") as f:
            if path.name in json.load(f).get("aliases", []):
                log.debug(f"{path} resolved to the packaged {candidate.name}")
                return candidate
    return path


def compare_to_reference(
    report: Union[ExperimentReport, Mapping, str, Path],
    reference_path: Union[str, Path] = DEFAULT_REFERENCE,
) -> ComparisonResult:
    """
    Marks every reference cell pass or fail against a report.

    Args:
        report: An ExperimentReport, its dict form, a report.json path or the directory holding it.
        reference_path: JSON file of entries `{id, scenario, architecture, metric, condition,
            expected, tolerance, gating}`. A `*` scenario applies the entry to every scenario
            in the report (or, without an architecture, to the cross-scenario figures). A
            metric named `improvement.<name>` reads the architecture's average over
            the scenarios relative to Cloud-Centric. A missing path is resolved against
            the packaged tables by name.

    Raises:
        MissingReferenceMetric: A reference cell is present in the report but its metric is not.
    """
    doc = _load_report(report)
    with open(resolve_reference(reference_path), "r") as f:
        reference = json.load(f)
    cells: List[CellComparison] = []
    for entry in reference["entries"]:
        cells.extend(_compare_entry(doc, entry))
    result = ComparisonResult(reference.get("reference_id", str(reference_path)), cells)
    for failure in result.failures:
        log.warning(f"{failure.id}: expected {failure.expected}, got {failure.actual} ({failure.tolerance})")
    return result
