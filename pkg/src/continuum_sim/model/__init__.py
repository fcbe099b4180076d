# Hoist the scenario types and loaders to the top level model package
from .types import *  # noqa: F401,F403
from .scenario import (  # noqa: F401
    list_presets,
    load_scenario,
    resolve_symbol_path,
    serialize_scenario,
    validate_scenario,
    with_duration,
    with_outage,
)
