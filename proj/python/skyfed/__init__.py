"""Drone trajectory planning and federated-learning simulation."""

from ._skyfed import (
    InfeasibleError,
    IoError,
    ParseError,
    Scenario,
    SkyfedError,
    ValidationError,
    atl,
    load_scenario,
    optimize_placement,
    packet_error_rate,
    parse_scenario,
    plan_trajectory,
    round_terms,
    run_cli,
    serialize_scenario,
    train,
)

__all__ = [
    "InfeasibleError",
    "IoError",
    "ParseError",
    "Scenario",
    "SkyfedError",
    "ValidationError",
    "atl",
    "load_scenario",
    "optimize_placement",
    "packet_error_rate",
    "parse_scenario",
    "plan_trajectory",
    "round_terms",
    "run_cli",
    "serialize_scenario",
    "train",
]
