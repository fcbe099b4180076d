# stdlib
import json
from pathlib import Path

# third party
import pandas as pd
import pytest

# Continuum absolute
from continuum_sim.exceptions.exceptions import (
    EmptyArchitectureSet,
    MissingReferenceMetric,
    NegativeParameter,
    ReportWriteError,
)
from continuum_sim.model.types import Architecture
from continuum_sim.report import compare_to_reference, emit_report, run_experiment
from continuum_sim.report.compare import DEFAULT_REFERENCE, resolve_reference
from continuum_sim.report.emit import CSV_COLUMNS

ALL = list(Architecture)


@pytest.fixture(scope="module")
def small_report(drone_short):
    return run_experiment(drone_short, ALL, runs=3, base_seed=42)


def test_report_layout(small_report):
    doc = small_report.to_dict()
    assert doc["scenarios"] == ["DroneFleet"]
    assert doc["architectures"] == ["CloudCentric", "GatewayEdge", "DfcAi"]
    assert doc["meta"]["seeds"] == [42, 43, 44]
    assert doc["meta"]["test_method"] == "welch"
    cell = doc["cells"]["DroneFleet"]["DfcAi"]
    assert [r["seed"] for r in cell["runs"]] == [42, 43, 44]
    assert cell["summary"]["latency_ms"]["n"] == 3
    assert cell["summary"]["latency_ms"]["ci95"] > 0
    assert cell["analytic"]["latency_ms"] > 0
    assert "device_classes" in doc["calibration"]["DroneFleet"]


def test_report_tests_and_validation(small_report):
    doc = small_report.to_dict()
    comparisons = {(t["comparison"], t["metric"]) for t in doc["tests"]}
    assert comparisons == {
        (c, m)
        for c in ("dfc_vs_cloud", "dfc_vs_gateway")
        for m in ("latency_ms", "energy_wh_per_day", "cost_usd_per_year")
    }
    validation = doc["validation"]["DroneFleet"]
    assert 0.0 < validation["latency_ms_reduction_dfc_vs_cloud"] < 1.0
    assert validation["p_latency_ms_dfc_vs_cloud"] < 0.05
    assert validation["energy_savings_error"] >= 0.0
    assert doc["validation"]["*"]["scenario_count"] == 1


def test_single_run_skips_tests(drone_short):
    report = run_experiment(drone_short, [Architecture.DFC_AI, Architecture.CLOUD_CENTRIC], runs=1)
    doc = report.to_dict()
    assert doc["tests"] == []
    assert doc["tests_skipped"]
    summary = doc["cells"]["DroneFleet"]["DfcAi"]["summary"]["latency_ms"]
    assert summary["ci95"] is None and summary["std"] is None


def test_experiment_rejects_bad_arguments(drone_short):
    with pytest.raises(EmptyArchitectureSet):
        run_experiment(drone_short, [])
    with pytest.raises(NegativeParameter):
        run_experiment(drone_short, ALL, runs=0)


def test_outage_condition_reports_capability(drone_short):
    report = run_experiment(drone_short, ALL, runs=2, outage="down")
    doc = report.to_dict()
    assert doc["meta"]["condition"] == "down"
    capability = {a: doc["cells"]["DroneFleet"][a]["summary"]["capability"]["mean"] for a in doc["architectures"]}
    assert capability["CloudCentric"] == 0.0
    assert capability["DfcAi"] >= 0.98
    assert "analytic" not in doc["cells"]["DroneFleet"]["DfcAi"]

    improvement = doc["validation"]["*"]["improvement"]
    assert improvement["DfcAi"]["resilience"] == pytest.approx(capability["DfcAi"])
    assert improvement["GatewayEdge"]["resilience"] == pytest.approx(capability["GatewayEdge"])
    assert improvement["DfcAi"]["latency_reduction"] is None


def test_improvement_over_cloud(small_report):
    doc = small_report.to_dict()
    improvement = doc["validation"]["*"]["improvement"]
    assert set(improvement) == {"GatewayEdge", "DfcAi"}
    cells = doc["cells"]["DroneFleet"]
    for arch, values in improvement.items():
        assert set(values) == {"latency_reduction", "energy_savings", "cost_savings"}
        cloud = cells["CloudCentric"]["summary"]["cost_usd_per_year"]["mean"]
        own = cells[arch]["summary"]["cost_usd_per_year"]["mean"]
        assert values["cost_savings"] == pytest.approx(1.0 - own / cloud)
    assert improvement["DfcAi"]["latency_reduction"] == pytest.approx(
        doc["validation"]["DroneFleet"]["latency_ms_reduction_dfc_vs_cloud"]
    )
    assert improvement["DfcAi"]["latency_reduction"] > improvement["GatewayEdge"]["latency_reduction"]


def test_improvement_needs_the_cloud_baseline(drone_short):
    report = run_experiment(drone_short, [Architecture.DFC_AI, Architecture.GATEWAY_EDGE], runs=2)
    assert "*" not in report.validation


def test_emit_report(small_report, tmp_path):
    written = emit_report(small_report, ["md", "csv", "json"], tmp_path / "out")
    assert set(written) == {"md", "csv", "json"}

    markdown = written["md"].read_text()
    assert "## Mean latency (ms)" in markdown
    assert "| DFC-AI |" in markdown
    assert "| Architecture | DroneFleet |" in markdown
    assert "## Average improvement over Cloud-Centric" in markdown

    frame = pd.read_csv(written["csv"])
    assert list(frame.columns) == CSV_COLUMNS
    assert set(frame["architecture"]) == {"CloudCentric", "GatewayEdge", "DfcAi"}
    overall = frame[frame["scenario"] == "*"]
    assert set(overall["architecture"]) == {"GatewayEdge", "DfcAi"}
    assert "latency_reduction_vs_cloud" in set(overall["metric"])

    with open(written["json"]) as f:
        doc = json.load(f)
    assert doc["cells"]["DroneFleet"]["CloudCentric"]["summary"]["cost_usd_per_year"]["mean"] > 0


def test_reports_are_byte_identical(drone_short, tmp_path):
    for name in ("a", "b"):
        report = run_experiment(drone_short, ALL, runs=2, base_seed=5)
        emit_report(report, ["md", "csv", "json"], tmp_path / name)
    for file_name in ("report.md", "report.csv", "report.json"):
        assert (tmp_path / "a" / file_name).read_bytes() == (tmp_path / "b" / file_name).read_bytes()


def test_parallel_sweep_matches_serial(drone_short):
    serial = run_experiment(drone_short, ALL, runs=2, base_seed=8).to_dict()
    parallel = run_experiment(drone_short, ALL, runs=2, base_seed=8, parallel=2).to_dict()
    assert serial == parallel


def test_emit_report_write_error(small_report, tmp_path):
    blocker = tmp_path / "blocker"
    blocker.write_text("not a directory")
    with pytest.raises(ReportWriteError):
        emit_report(small_report, ["json"], blocker / "out")


def test_trace_and_workload_dumps(drone_short, tmp_path):
    run_experiment(
        drone_short,
        [Architecture.DFC_AI],
        runs=2,
        trace_path=tmp_path / "trace.csv",
        workload_path=tmp_path / "workload.csv",
    )
    assert (tmp_path / "trace.csv").exists()
    assert (tmp_path / "workload.csv").exists()


def _reference(write_json, entries):
    return write_json("reference.json", {"reference_id": "test", "entries": entries})


def _entry(**overrides):
    entry = {
        "id": "latency.drone.dfc",
        "scenario": "DroneFleet",
        "architecture": "DfcAi",
        "metric": "latency_ms",
        "condition": "none",
        "expected": 37,
        "tolerance": {"kind": "relative", "value": 0.15},
        "gating": True,
    }
    entry.update(overrides)
    return entry


def test_compare_passes_and_fails(small_report, write_json):
    dfc = small_report.to_dict()["cells"]["DroneFleet"]["DfcAi"]["summary"]["latency_ms"]["mean"]
    path = _reference(
        write_json,
        [
            _entry(id="close", expected=dfc * 1.05),
            _entry(id="far", expected=dfc * 3),
            _entry(id="far-but-informative", expected=dfc * 3, gating=False),
            _entry(id="interval", tolerance={"kind": "interval", "low": 0, "high": dfc * 2}),
            _entry(id="other-scenario", scenario="SensorNetwork"),
            _entry(id="other-condition", condition="down"),
        ],
    )
    result = compare_to_reference(small_report, path)
    by_id = {c.id: c for c in result.cells}
    assert by_id["close"].passed
    assert not by_id["far"].passed and by_id["far"].error == pytest.approx(2 / 3)
    assert not by_id["far-but-informative"].passed
    assert by_id["interval"].passed
    assert by_id["other-scenario"].skipped and by_id["other-condition"].skipped
    assert [c.id for c in result.failures] == ["far"]
    assert not result.passed
    assert "FAIL" in result.format(color=False)
    assert len(result.to_frame()) == 6


def test_compare_reads_report_directories(small_report, tmp_path, write_json):
    emit_report(small_report, ["json"], tmp_path / "out")
    path = _reference(
        write_json,
        [
            _entry(id="savings", scenario="*", architecture=None, metric="energy_savings_error",
                   expected=0.0, tolerance={"kind": "interval", "low": 0.0, "high": 10.0}),
            _entry(id="every-scenario", scenario="*", metric="location_OriginDevice",
                   expected=0.8, tolerance={"kind": "absolute", "value": 1.0}),
        ],
    )
    result = compare_to_reference(tmp_path / "out", path)
    assert result.passed
    assert {c.scenario for c in result.cells} == {"*", "DroneFleet"}


def test_compare_improvement_cells(small_report, write_json):
    dfc = small_report.validation["*"]["improvement"]["DfcAi"]["latency_reduction"]
    path = _reference(
        write_json,
        [
            _entry(id="dfc", scenario="*", metric="improvement.latency_reduction", expected=dfc,
                   tolerance={"kind": "absolute", "value": 1e-9}),
            _entry(id="gateway-offline", scenario="*", architecture="GatewayEdge", metric="improvement.resilience",
                   condition="down", expected=0.4, tolerance={"kind": "absolute", "value": 0.03}),
            _entry(id="undefined", scenario="*", metric="improvement.resilience", expected=0.98,
                   tolerance={"kind": "interval", "low": 0.97, "high": 1.0}),
        ],
    )
    by_id = {c.id: c for c in compare_to_reference(small_report, path).cells}
    assert by_id["dfc"].passed and by_id["dfc"].scenario == "*"
    assert by_id["gateway-offline"].skipped
    assert by_id["undefined"].skipped == "metric undefined in report"

    with pytest.raises(MissingReferenceMetric):
        compare_to_reference(small_report, _reference(write_json, [_entry(scenario="*", metric="improvement.uptime")]))


def test_reference_resolves_packaged_aliases(small_report):
    with open(DEFAULT_REFERENCE) as f:
        aliases = json.load(f)["aliases"]
    assert aliases
    assert resolve_reference(Path("refs") / aliases[0]) == DEFAULT_REFERENCE
    assert resolve_reference(Path("refs") / DEFAULT_REFERENCE.name) == DEFAULT_REFERENCE
    assert resolve_reference("nowhere/unknown.json") == Path("nowhere/unknown.json")
    by_alias = compare_to_reference(small_report, Path("refs") / aliases[0])
    assert by_alias.reference_id == compare_to_reference(small_report).reference_id


def test_compare_missing_metric(small_report, write_json):
    path = _reference(write_json, [_entry(metric="latency_p99_ms")])
    with pytest.raises(MissingReferenceMetric):
        compare_to_reference(small_report, path)


def test_shipped_reference_covers_the_report(small_report):
    result = compare_to_reference(small_report, DEFAULT_REFERENCE)
    assert result.cells
    assert all(c.scenario in ("DroneFleet", "*") for c in result.cells if c.skipped is None)


@pytest.mark.slow
def test_drone_day_matches_published_tables(drone):
    report = run_experiment(drone, ALL, runs=10, base_seed=42)
    result = compare_to_reference(report, DEFAULT_REFERENCE)
    failures = [(c.id, c.expected, c.actual) for c in result.failures]
    assert not failures, failures


@pytest.mark.slow
@pytest.mark.parametrize("condition", ["unstable", "down"])
def test_drone_resilience_matches_published_bands(drone, condition):
    report = run_experiment(drone, ALL, runs=2, base_seed=42, outage=condition, duration_s=21600.0)
    result = compare_to_reference(report, DEFAULT_REFERENCE)
    failures = [(c.id, c.expected, c.actual) for c in result.failures]
    assert not failures, failures
