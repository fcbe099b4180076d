from .experiment import ExperimentReport, RunRecord, run_experiment  # noqa: F401
from .emit import emit_report, render_markdown  # noqa: F401
from .compare import CellComparison, ComparisonResult, compare_to_reference  # noqa: F401
