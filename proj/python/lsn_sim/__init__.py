from ._core import (
    ConfigError,
    GraphError,
    Trace,
    compare_traces,
    extended_graph_dot,
    invariance_report,
    lsfp_initial_marking,
    normalize,
    simulate,
    sweep_marking,
    validate,
)

__all__ = [
    "ConfigError",
    "GraphError",
    "Trace",
    "compare_traces",
    "extended_graph_dot",
    "invariance_report",
    "lsfp_initial_marking",
    "normalize",
    "simulate",
    "sweep_marking",
    "validate",
]
