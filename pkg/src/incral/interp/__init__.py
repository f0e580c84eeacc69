"""Cost-instrumented reference interpreter for the core language."""
from .cost import COUNTERS, CostReport
from .machine import (
    DEFAULT_STEP_LIMIT,
    EvalError,
    Machine,
    State,
    StepLimitExceeded,
    StrictChangeError,
    UnboundVariable,
    apply_update,
    eval_expr,
    evaluate,
    init_state,
    recompute,
    recompute_with_cost,
)

__all__ = [
    "COUNTERS", "CostReport", "DEFAULT_STEP_LIMIT", "EvalError", "Machine",
    "State", "StepLimitExceeded", "StrictChangeError", "UnboundVariable",
    "apply_update", "eval_expr", "evaluate", "init_state", "recompute",
    "recompute_with_cost",
]
