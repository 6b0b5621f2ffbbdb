"""Randomized constraints consensus for uncertain linear programs over directed networks."""
from ._jit import BACKEND
from .config import ExperimentConfig, load_config, table_row_config
from .consensus import AgentState, HaltRule, check_halt, init_agent, optimization_step, verification_step
from .harness import run_experiment, validate_basis, validate_solution
from .lp_core import (
    BoundingBox,
    ConstraintSet,
    Halfspace,
    LpOutcome,
    LpStatus,
    cost_of,
    is_feasible,
    merge,
    solve_lp,
)
from .network import (
    Digraph,
    Schedule,
    diameter,
    generate_random_digraph,
    is_strongly_connected,
    ring_token_schedule,
    run_round,
    validate_schedule,
)
from .probgen import Instance, InstanceSpec, feasibility_margin, generate
from .uncertainty import (
    ProbabilisticLevels,
    UncertainConstraintSet,
    draw_sample,
    instantiate,
    sample_size,
    verify,
)

__version__ = "0.1.0"
