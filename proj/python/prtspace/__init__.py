"""Probabilistic real-time reachability and spatiotemporal collision checking.

Probabilities coming out of the checker and the distribution code are exact
``fractions.Fraction`` values; collision probabilities are floats.
"""

from pathlib import Path

from ._prtspace import (
    TICK_SECONDS,
    Box2,
    CheckError,
    CollisionEvent,
    DelayCdf,
    DelayPmf,
    ExprError,
    ImpactReport,
    Model,
    ModelError,
    ModelSyntaxError,
    OccupancyEntry,
    ScenarioConfig,
    SpatioTemporalSpec,
    TraceRecord,
    cdf_to_pmf,
    check_collision,
    convolve,
    convolve_all,
    export_bespaced,
    pmf_to_cdf,
    prob_at_least,
    prob_at_most,
    read_bespaced,
    run_scenario,
    seconds_to_ticks,
    table1,
    threshold_filter,
    ticks_to_seconds,
    trace_to_spec,
    worst_case_sweep,
)


def load_model(path):
    """Parse a model file; raises ModelSyntaxError with file:line:col diagnostics."""
    p = Path(path)
    return Model.parse(p.read_text(), str(p))


__all__ = [name for name in dir() if not name.startswith("_")]
