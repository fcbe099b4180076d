from .links import (  # noqa: F401
    OutageState,
    Traversal,
    internet_reachable,
    is_available,
    serialization_ms,
    transmission_energy,
    transmission_time,
    traverse,
)
