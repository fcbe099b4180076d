from .generator import (  # noqa: F401
    Task,
    TaskStream,
    classify_task,
    dump_workload,
    expected_task_rate,
    generate_stream,
    sample_interarrival,
)
