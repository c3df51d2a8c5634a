"""dinerbench: deterministic Dining Philosophers coordination benchmark harness."""

from .env import (
    Action,
    ConfigurationError,
    Decision,
    Observation,
    PhilosopherStatus,
    TableState,
    apply_sequential,
    apply_simultaneous,
    detect_deadlock,
    new_table,
    observe,
)
from .metrics import (
    ConditionReport,
    EpisodeResult,
    aggregate_condition,
    deadlock_rate,
    fairness,
    gini,
    message_action_consistency,
    starvation_count,
    throughput,
    time_to_deadlock,
)
from .policies import Policy, PolicyContext, make_policy
from .runner import ConditionCode, RunConfig, parse_condition, run_condition, run_episode, verify_transcript

__all__ = [
    "Action",
    "ConfigurationError",
    "Decision",
    "Observation",
    "PhilosopherStatus",
    "TableState",
    "apply_sequential",
    "apply_simultaneous",
    "detect_deadlock",
    "new_table",
    "observe",
    "ConditionReport",
    "EpisodeResult",
    "aggregate_condition",
    "deadlock_rate",
    "fairness",
    "gini",
    "message_action_consistency",
    "starvation_count",
    "throughput",
    "time_to_deadlock",
    "Policy",
    "PolicyContext",
    "make_policy",
    "ConditionCode",
    "RunConfig",
    "parse_condition",
    "run_condition",
    "run_episode",
    "verify_transcript",
]
