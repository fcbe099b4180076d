# stdlib
import json
import logging
from pathlib import Path
from typing import Any, Callable, Dict, Iterable, List, Mapping, Optional, Union

# third party
import pandas as pd

# Continuum relative
from .experiment import ALL_SCENARIOS, ExperimentReport

# Continuum absolute
from continuum_sim.exceptions.exceptions import ReportWriteError
from continuum_sim.model.types import Architecture, ProcessingLocation

log = logging.getLogger(__name__)

FORMATS = ("md", "csv", "json")
FILE_NAMES = {"md": "report.md", "csv": "report.csv", "json": "report.json"}
CSV_COLUMNS = ["scenario", "architecture", "metric", "mean", "std", "ci95"]

HEADLINE_TABLES = (
    ("Mean latency (ms)", "latency_ms", "{:,.1f}"),
    ("Daily energy (Wh/day)", "energy_wh_per_day", "{:,.1f}"),
    ("Annual cost (USD/year)", "cost_usd_per_year", "{:,.0f}"),
    ("Operational capability", "capability", "{:.1%}"),
)
IMPROVEMENT_COLUMNS = (
    ("Latency reduction", "latency_reduction"),
    ("Energy savings", "energy_savings"),
    ("Cost savings", "cost_savings"),
    ("Resilience gain", "resilience"),
)
LOCATION_COLUMNS = (
    ProcessingLocation.ORIGIN_DEVICE,
    ProcessingLocation.CLUSTER_GPU,
    ProcessingLocation.GATEWAY,
    ProcessingLocation.EDGE_SERVER,
    ProcessingLocation.CLOUD,
)


def _cell(value: Optional[float], pattern: str) -> str:
    return "n/a" if value is None else pattern.format(value)


def _table(header: List[str], rows: Iterable[List[str]]) -> List[str]:
    lines = ["| " + " | ".join(header) + " |", "|" + "|".join("---" for _ in header) + "|"]
    lines.extend("| " + " | ".join(row) + " |" for row in rows)
    return lines


def _pretty(architecture: str) -> str:
    return Architecture(architecture).pretty_name


def _with_ci(summary: Mapping[str, Any], pattern: str) -> str:
    text = _cell(summary["mean"], pattern)
    if summary.get("ci95") is not None:
        text += f" ± {_cell(summary['ci95'], pattern)}"
    return text


def render_markdown(doc: Mapping[str, Any]) -> str:
    """Renders a report dict as markdown tables with architecture rows and scenario columns."""
    meta = doc["meta"]
    scenarios, architectures = doc["scenarios"], doc["architectures"]
    lines = [
        "# Architecture comparison",
        "",
        f"Runs per cell: {meta['runs']}, seeds {meta['seeds'][0]}..{meta['seeds'][-1]}, "
        f"network condition: {meta['condition']}, version {meta['version']}.",
        "Cells show the mean over runs ± the 95% confidence half-width.",
    ]
    for title, metric, pattern in HEADLINE_TABLES:
        rows = [
            [_pretty(a)] + [_with_ci(doc["cells"][s][a]["summary"][metric], pattern) for s in scenarios]
            for a in architectures
        ]
        lines += ["", f"## {title}", ""] + _table(["Architecture"] + scenarios, rows)

    for s in scenarios:
        rows = [
            [_pretty(a)]
            + [_cell(doc["cells"][s][a]["summary"][f"location_{loc.value}"]["mean"], "{:.1%}") for loc in LOCATION_COLUMNS]
            for a in architectures
        ]
        lines += ["", f"## Processing location, {s}", ""]
        lines += _table(["Architecture"] + [loc.value for loc in LOCATION_COLUMNS], rows)

    analytic = [(s, a) for s in scenarios for a in architectures if "analytic" in doc["cells"][s][a]]
    if analytic:
        rows = []
        for s, a in analytic:
            model = doc["cells"][s][a]["analytic"]
            rows.append(
                [
                    s,
                    _pretty(a),
                    _cell(model["latency_ms"], "{:,.1f}"),
                    _cell(doc["cells"][s][a]["summary"]["latency_ms"]["mean"], "{:,.1f}"),
                    _cell(model["latency_error"], "{:.1%}"),
                    _cell(model["energy_wh_per_day"], "{:,.1f}"),
                ]
            )
        lines += ["", "## Model validation", ""]
        lines += _table(["Scenario", "Architecture", "Predicted ms", "Simulated ms", "Error", "Predicted Wh/day"], rows)

    savings = [k for k in scenarios + [ALL_SCENARIOS] if "energy_savings" in doc["validation"].get(k, {})]
    if savings:
        rows = []
        for k in savings:
            v = doc["validation"][k]
            rows.append(
                [
                    "all scenarios" if k == ALL_SCENARIOS else k,
                    _cell(v["energy_savings_predicted"], "{:.1%}"),
                    _cell(v["energy_savings"], "{:.1%}"),
                    _cell(v["energy_savings_error"], "{:.1%}"),
                ]
            )
        lines += ["", "## DFC-AI energy savings over Cloud-Centric", ""]
        lines += _table(["Scenario", "Predicted", "Simulated", "Error"], rows)

    improvement = doc["validation"].get(ALL_SCENARIOS, {}).get("improvement")
    if improvement:
        rows = [
            [_pretty(a)] + [_cell(values.get(key), "{:.1%}") for _, key in IMPROVEMENT_COLUMNS]
            for a, values in improvement.items()
        ]
        lines += ["", "## Average improvement over Cloud-Centric", ""]
        lines += _table(["Architecture"] + [title for title, _ in IMPROVEMENT_COLUMNS], rows)

    if doc["tests"]:
        rows = [
            [
                t["scenario"],
                t["comparison"],
                t["metric"],
                _cell(t["t_statistic"], "{:.3f}"),
                _cell(t["degrees_of_freedom"], "{:.1f}"),
                _cell(t["p_value"], "{:.3g}"),
                "yes" if t["significant"] else "no",
            ]
            for t in doc["tests"]
        ]
        lines += ["", f"## Welch t-tests (significance level {meta['significance_level']})", ""]
        lines += _table(["Scenario", "Comparison", "Metric", "t", "df", "p", "Significant"], rows)
    for reason in doc["tests_skipped"]:
        lines.append(f"- skipped: {reason}")
    return "\n".join(lines) + "\n"


def render_csv(report: ExperimentReport) -> str:
    return pd.DataFrame(report.summary_rows(), columns=CSV_COLUMNS).to_csv(index=False)


def render_json(doc: Mapping[str, Any]) -> str:
    return json.dumps(doc, indent=2, sort_keys=True, allow_nan=False) + "\n"


def _write(path: Path, text: str) -> None:
    try:
        with open(path, "w") as f:
            f.write(text)
    except OSError as e:
        raise ReportWriteError(path, e) from e


def emit_report(
    report: ExperimentReport, formats: Iterable[str] = FORMATS, output_dir: Union[str, Path] = "."
) -> Dict[str, Path]:
    """
    Writes the report in each requested format under `output_dir`.

    Args:
        report (ExperimentReport): A completed report.
        formats: Any of `md`, `csv`, `json`.
        output_dir: Directory to write into; created if missing.

    Returns:
        Dict[str, Path]: The written file for each format.

    Raises:
        ReportWriteError: A file could not be written.
    """
    formats = list(dict.fromkeys(formats))
    unknown = [f for f in formats if f not in FORMATS]
    if unknown:
        raise ValueError(f"Unknown report format(s) {unknown}; choose from {list(FORMATS)}")
    output_dir = Path(output_dir)
    try:
        output_dir.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise ReportWriteError(output_dir, e) from e

    doc = report.to_dict()
    renderers: Dict[str, Callable[[], str]] = {
        "md": lambda: render_markdown(doc),
        "csv": lambda: render_csv(report),
        "json": lambda: render_json(doc),
    }
    written = {}
    for fmt in formats:
        path = output_dir / FILE_NAMES[fmt]
        _write(path, renderers[fmt]())
        log.info(f"Wrote {path}")
        written[fmt] = path
    return written
