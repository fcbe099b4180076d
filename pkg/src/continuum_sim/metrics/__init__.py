# accounting must be imported before analytic, which depends on the engine
from .accounting import (  # noqa: F401
    CostBreakdown,
    EnergyBreakdown,
    account_cost,
    account_energy,
    energy_microservices,
)
from .analytic import (  # noqa: F401
    analytic_latency,
    erlang_c_wait,
    expected_trace,
    predict_breakdown,
    predict_energy,
    predict_energy_savings,
    predict_mean_latency,
)
