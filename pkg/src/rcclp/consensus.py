"""Per-agent state machine of randomized constraints consensus.

Each round an agent (1) verifies its candidate point against freshly sampled
instances of its own uncertain constraints, unless the point did not move since
the last round, and (2) re-solves an LP over the violating instance (if any),
its current basis and the latest bases received from in-neighbors.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .lp_core import DEFAULT_BOX, BoundingBox, ConstraintSet, InfeasibleLP, merge, solve_lp
from .uncertainty import ProbabilisticLevels, UncertainConstraintSet, instantiate, verify

THETA_EQ_TOL = 1e-12


class ConfigurationError(ValueError):
    """The experiment cannot start (for example an infeasible nominal LP)."""


@dataclass(frozen=True)
class HaltRule:
    """Halt once the candidate point has been unchanged for ``threshold`` rounds."""

    threshold: int

    def __post_init__(self):
        if self.threshold < 3:
            raise ValueError(f"halt threshold must be >= 3, got {self.threshold}")

    @classmethod
    def static(cls, diameter: int) -> "HaltRule":
        return cls(max(3, 2 * diameter + 1))

    @classmethod
    def time_varying(cls, n: int, L: int) -> "HaltRule":
        return cls(max(3, 2 * n * L + 1))


@dataclass(eq=False)
class AgentState:
    id: int
    local_set: UncertainConstraintSet
    levels: ProbabilisticLevels
    rng: np.random.Generator
    theta: np.ndarray
    basis: ConstraintSet
    cost: float
    k: int = 1
    unchanged_count: int = 0
    mailbox: dict = field(default_factory=dict)
    inbox: dict = field(default_factory=dict)
    halted: bool = False
    theta_prev: np.ndarray | None = None
    basis_prev_ids: frozenset | None = None
    solution: np.ndarray | None = None
    last_sent: dict = field(default_factory=dict)
    last_emitted_ids: frozenset | None = None
    transmissions: int = 0
    basis_changed: bool = True
    verified_last: bool = False
    certificates: int = 0

    @property
    def basis_ids(self) -> frozenset:
        return self.basis.id_set()


def same_point(a, b) -> bool:
    if a is None or b is None:
        return False
    return bool(np.all(np.abs(a - b) <= THETA_EQ_TOL * max(1.0, float(np.abs(a).max(initial=0.0)))))


def init_agent(local_set: UncertainConstraintSet, c, levels: ProbabilisticLevels,
               box: BoundingBox = DEFAULT_BOX, rng: np.random.Generator | None = None,
               agent_id: int | None = None) -> AgentState:
    """Start from the nominal LP with ``k = 1``."""
    out = solve_lp(instantiate(local_set), c, box)
    if not out.optimal:
        raise ConfigurationError(f"nominal LP of agent {local_set.owner} is infeasible")
    return AgentState(
        id=local_set.owner if agent_id is None else agent_id,
        local_set=local_set,
        levels=levels,
        rng=rng if rng is not None else np.random.default_rng(),
        theta=out.point,
        basis=out.basis,
        cost=out.cost,
    )


def verification_step(state: AgentState) -> ConstraintSet | None:
    """Return the violation certificate, or None when verified or skipped."""
    if state.halted:
        raise RuntimeError(f"agent {state.id} has halted")
    if state.basis_prev_ids == state.basis_ids or same_point(state.theta, state.theta_prev):
        state.verified_last = False
        return None
    res = verify(state.theta, state.local_set, state.k, state.levels, state.rng)
    state.k += 1
    state.verified_last = True
    if res.violated:
        state.certificates += 1
        return res.certificate
    return None


def optimization_step(state: AgentState, incoming: dict, certificate: ConstraintSet | None, c,
                      box: BoundingBox = DEFAULT_BOX, rule: HaltRule | None = None) -> ConstraintSet | None:
    """Re-solve over certificate, own basis and mailbox; return the basis if it is new.

    ``incoming`` maps in-neighbor id to basis and overwrites the mailbox
    (latest wins). The state is updated in place.
    """
    state.mailbox.update(incoming)
    parts = [state.basis, *state.mailbox.values()]
    if certificate is not None:
        parts.append(certificate)
    H = merge(parts)
    out = solve_lp(H, c, box)
    if not out.optimal:
        raise InfeasibleLP(
            f"agent {state.id}: merged LP with {len(H)} constraints is infeasible "
            f"(certificate={'yes' if certificate is not None else 'no'}, mailbox={sorted(state.mailbox)})"
        )
    old_ids = state.basis_ids
    if same_point(out.point, state.theta) and certificate is None:
        state.unchanged_count += 1
    else:
        state.unchanged_count = 0
    state.theta_prev = state.theta
    state.basis_prev_ids = old_ids
    state.theta = out.point
    state.basis = out.basis
    state.cost = out.cost
    state.basis_changed = out.basis.id_set() != old_ids
    if rule is not None and check_halt(state, rule):
        state.halted = True
        state.solution = state.theta.copy()
    new_ids = state.basis_ids
    if new_ids != state.last_emitted_ids:
        state.last_emitted_ids = new_ids
        return state.basis
    return None


def check_halt(state: AgentState, rule: HaltRule) -> bool:
    return state.unchanged_count >= rule.threshold


def consensus_residual(points) -> float:
    """Largest pairwise Euclidean distance between candidate points."""
    pts = np.asarray(list(points), dtype=float)
    if len(pts) < 2:
        return 0.0
    diff = pts[:, None, :] - pts[None, :, :]
    return float(np.sqrt((diff**2).sum(axis=2)).max())


def cost_agreement(costs) -> float:
    """Largest relative spread of basis costs."""
    costs = np.asarray(list(costs), dtype=float)
    if costs.size == 0:
        return 0.0
    scale = max(1.0, float(np.abs(costs).max()))
    return float((costs.max() - costs.min()) / scale) if math.isfinite(scale) else math.inf
