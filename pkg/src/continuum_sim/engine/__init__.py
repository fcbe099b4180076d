# Hoist the routing policies and the simulator to the top level engine package
from .base import ProcessingDecision, RoutingPolicy, Stage, processing_time  # noqa: F401
from .policies import CloudCentricPolicy, DfcAiPolicy, GatewayEdgePolicy, make_policy, route_task  # noqa: F401
from .queues import ServerPool, ServerQueue  # noqa: F401
from .registry import ClusterRegistry, discover_resources  # noqa: F401
from .simulator import RunMetrics, capability_fraction, run_simulation, write_trace  # noqa: F401
