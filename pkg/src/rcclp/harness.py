"""Experiment orchestration, a-posteriori Monte Carlo checks, metrics and traces."""
from __future__ import annotations

import csv
import io
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import kernels
from .config import ConfigError, ExperimentConfig
from .consensus import (
    HaltRule,
    cost_agreement,
    consensus_residual,
    init_agent,
)
from .lp_core import FEAS_TOL, BoundingBox, ConstraintSet, _solve_sorted, cost_of
from .network import (
    Digraph,
    Schedule,
    diameter,
    generate_random_digraph,
    ring_token_schedule,
    run_round,
    validate_schedule,
)
from .probgen import Instance, InstanceSpec, generate, load_instance
from .uncertainty import ProbabilisticLevels

log = logging.getLogger(__name__)

STRICT_TOL = 1e-9


class RoundCapExceeded(RuntimeError):
    pass


class ScheduleInvalid(ConfigError):
    pass


METRICS_HEADER = [
    "seed", "n", "degree", "m", "d", "radius", "diameter", "halt_threshold", "mode",
    "rounds", "avg_transmissions", "avg_final_k", "violation", "basis_suboptimality",
    "consensus_residual", "cost_spread", "cost", "epsilon", "delta",
]


@dataclass
class RunMetrics:
    seed: int
    n: int
    degree: int | None
    m: int
    d: int
    radius: float
    diameter: int | None
    halt_threshold: int
    mode: str
    rounds: int
    transmissions: list
    final_k: list
    theta_sol: np.ndarray
    cost: float
    violation: float
    basis_suboptimality: float
    consensus_residual: float
    cost_spread: float
    epsilon: float
    delta: float

    @property
    def avg_transmissions(self) -> float:
        return float(np.mean(self.transmissions))

    @property
    def avg_final_k(self) -> float:
        return float(np.mean(self.final_k))

    def row(self) -> dict:
        return {
            "seed": self.seed, "n": self.n, "degree": "" if self.degree is None else self.degree,
            "m": self.m, "d": self.d,
            "radius": self.radius, "diameter": "" if self.diameter is None else self.diameter,
            "halt_threshold": self.halt_threshold, "mode": self.mode, "rounds": self.rounds,
            "avg_transmissions": self.avg_transmissions, "avg_final_k": self.avg_final_k,
            "violation": self.violation, "basis_suboptimality": self.basis_suboptimality,
            "consensus_residual": self.consensus_residual, "cost_spread": self.cost_spread,
            "cost": self.cost, "epsilon": self.epsilon, "delta": self.delta,
        }


@dataclass
class RunResult:
    metrics: RunMetrics
    trace: list
    instance: Instance
    schedule: Schedule
    basis_sol: ConstraintSet
    agents: list = field(repr=False)


# --------------------------------------------------------------------------
# building blocks
# --------------------------------------------------------------------------


def _parse_edges(text: str, n: int) -> Digraph:
    edges = set()
    for tok in text.replace(",", " ").split():
        try:
            i, j = tok.split(">")
            edges.add((int(i), int(j)))
        except ValueError:
            raise ConfigError(f"schedule edges: malformed edge {tok!r} (expected 'i>j')") from None
    try:
        return Digraph(n, frozenset(edges))
    except ValueError as exc:
        raise ConfigError(f"schedule edges: {exc}") from None


def _random_graph(cfg: ExperimentConfig) -> bool:
    return cfg.schedule_kind == "static" and not cfg.edges and cfg.n > 1


def build_schedule(cfg: ExperimentConfig) -> Schedule:
    if cfg.schedule_kind == "ring":
        sched = ring_token_schedule(cfg.n)
    elif cfg.schedule_kind == "periodic":
        graphs = tuple(_parse_edges(part, cfg.n) for part in cfg.graphs.split("|"))
        sched = Schedule(graphs, L=cfg.L, kind="periodic")
    elif cfg.edges:
        sched = Schedule.static(_parse_edges(cfg.edges, cfg.n))
    elif not _random_graph(cfg):
        sched = Schedule.static(Digraph(1, frozenset()))
    else:
        rng = np.random.default_rng([cfg.seed, 1])
        sched = Schedule.static(generate_random_digraph(cfg.n, cfg.degree, rng, target_diameter=cfg.target_diameter))
    if cfg.activation != 1.0:
        sched = Schedule(sched.graphs, sched.L, sched.kind, cfg.activation)
    return sched


def build_instance(cfg: ExperimentConfig) -> Instance:
    if cfg.instance_file:
        return load_instance(cfg.instance_file)
    return generate(InstanceSpec(cfg.n, cfg.m, cfg.d, cfg.radius, cfg.seed), BoundingBox(-cfg.box, cfg.box))


def halt_rule_for(cfg: ExperimentConfig, schedule: Schedule) -> tuple[HaltRule, int | None]:
    diam = None
    if schedule.period == 1:
        diam = diameter(schedule.graphs[0])
    if cfg.halt != "auto":
        return HaltRule(int(cfg.halt)), diam
    if schedule.kind == "static" and diam is not None:
        return HaltRule.static(diam), diam
    return HaltRule.time_varying(schedule.n, schedule.L), diam


# --------------------------------------------------------------------------
# a-posteriori validation
# --------------------------------------------------------------------------


def _trial_blocks(instance: Instance, n_val: int, rng: np.random.Generator, coupling: str, chunk: int):
    """Yield per-agent perturbation stacks ``(K, m_i, d)`` for consecutive trials."""
    done = 0
    while done < n_val:
        K = min(chunk, n_val - done)
        if coupling == "shared":
            shape = instance.sets[0].radius.shape
            if any(s.radius.shape != shape for s in instance.sets):
                raise ValueError("shared coupling needs equal constraint counts on all agents")
            u = rng.random((K,) + shape)
            yield [-s.radius + (2.0 * s.radius) * u for s in instance.sets]
        else:
            yield [s.distribution.draw(rng, s.radius, K) for s in instance.sets]
        done += K


def validate_solution(instance: Instance, theta_sol, n_val: int, rng: np.random.Generator,
                      coupling: str = "joint", chunk: int = 500) -> float:
    """Fraction of fresh uncertainty draws for which ``theta_sol`` violates some agent's set."""
    if n_val < 1:
        raise ValueError("n_val must be >= 1")
    theta = np.ascontiguousarray(theta_sol, dtype=float)
    bad = 0
    for blocks in _trial_blocks(instance, n_val, rng, coupling, chunk):
        hit = np.zeros(blocks[0].shape[0], dtype=bool)
        for s, Q in zip(instance.sets, blocks):
            hit |= kernels.violation_mask(s.nominal, s.rhs, theta, Q, FEAS_TOL)
        bad += int(hit.sum())
    return bad / n_val


def validate_basis(instance: Instance, basis_sol: ConstraintSet, theta_sol, n_val: int,
                   rng: np.random.Generator, coupling: str = "joint", chunk: int = 500) -> float:
    """Fraction of draws ``q`` with ``J(basis_sol + H(q)) > J(basis_sol)``.

    ``H(q)`` collects every agent's constraints instantiated at ``q``. Each
    trial solves the full LP; ``theta_sol`` is only used for logging.
    """
    if n_val < 1:
        raise ValueError("n_val must be >= 1")
    c = instance.c
    box = instance.box
    j_basis = cost_of(basis_sol, c, box)
    order = sorted(range(len(basis_sol)), key=basis_sol.ids.__getitem__)
    Ab = basis_sol.A[order]
    bb = basis_sol.b[order]
    A0 = np.vstack([s.nominal for s in instance.sets])
    b0 = np.concatenate([s.rhs for s in instance.sets])
    A = np.empty((len(bb) + len(b0), instance.d))
    A[: len(bb)] = Ab
    b = np.concatenate([bb, b0])
    thresh = j_basis + STRICT_TOL * max(1.0, abs(j_basis))
    worse = 0
    for blocks in _trial_blocks(instance, n_val, rng, coupling, chunk):
        stacked = np.concatenate(blocks, axis=1)
        for Q in stacked:
            A[len(bb):] = A0 + Q
            status, theta, _, _ = _solve_sorted(A, b, c, box)
            if status != kernels.OPTIMAL or float(c @ theta) > thresh:
                worse += 1
    log.debug("validate_basis: J(B)=%.6g, theta_sol=%s, worse=%d/%d", j_basis, theta_sol, worse, n_val)
    return worse / n_val


# --------------------------------------------------------------------------
# experiment
# --------------------------------------------------------------------------


def run_experiment(cfg: ExperimentConfig, instance: Instance | None = None, *, validate: bool = True,
                   keep_trace: bool = True) -> RunResult:
    """Run the distributed algorithm to completion and compute run metrics."""
    cfg.check()
    if instance is None:
        instance = build_instance(cfg)
    if instance.n != cfg.n:
        cfg = cfg.replace(n=instance.n)
    schedule = build_schedule(cfg)
    if schedule.n != instance.n:
        raise ConfigError(f"schedule has {schedule.n} nodes but the instance has {instance.n} agents")
    horizon = max(schedule.L, schedule.period + schedule.L - 1)
    if not validate_schedule(schedule, horizon):
        raise ScheduleInvalid(f"schedule is not jointly strongly connected over windows of L={schedule.L}")
    rule, diam = halt_rule_for(cfg, schedule)
    levels = ProbabilisticLevels(cfg.epsilon / instance.n, cfg.delta / instance.n)
    agents = [
        init_agent(s, instance.c, levels, instance.box, np.random.default_rng([cfg.seed, 2, i]), agent_id=i)
        for i, s in enumerate(instance.sets)
    ]
    activation_rng = np.random.default_rng([cfg.seed, 4])
    trace: list = []
    sink = trace.append if keep_trace else None
    rounds = 0
    for t in range(1, cfg.round_cap + 1):
        run_round(agents, schedule, t, instance.c, box=instance.box, rule=rule, mode=cfg.mode,
                  activation_rng=activation_rng, sink=sink)
        rounds = t
        halted = [a.halted for a in agents]
        if all(halted) or (cfg.stop == "first" and any(halted)):
            break
    else:
        raise RoundCapExceeded(
            f"round cap {cfg.round_cap} hit with {sum(a.halted for a in agents)}/{len(agents)} agents halted"
        )

    finished = [a for a in agents if a.halted]
    ref = finished[0]
    theta_sol = ref.solution
    basis_sol = ref.basis
    if cfg.stop == "all":
        points = [a.solution for a in agents]
        costs = [a.cost for a in agents]
    else:
        points = [a.theta for a in agents]
        costs = [a.cost for a in agents]
    if keep_trace:
        for rec in trace:
            rec["distance"] = float(np.linalg.norm(np.asarray(rec["theta"]) - theta_sol))

    violation = basis_sub = math.nan
    if validate:
        violation = validate_solution(instance, theta_sol, cfg.n_val, np.random.default_rng([cfg.seed, 3]), cfg.coupling)
        basis_sub = validate_basis(instance, basis_sol, theta_sol, cfg.n_val,
                                   np.random.default_rng([cfg.seed, 3]), cfg.coupling)
    metrics = RunMetrics(
        seed=cfg.seed,
        n=instance.n,
        degree=cfg.degree if _random_graph(cfg) else None,
        m=max(s.m for s in instance.sets),
        d=instance.d,
        radius=float(max(s.radius.max() for s in instance.sets)),
        diameter=diam,
        halt_threshold=rule.threshold,
        mode=cfg.mode,
        rounds=rounds,
        transmissions=[a.transmissions for a in agents],
        final_k=[a.k for a in agents],
        theta_sol=theta_sol,
        cost=float(instance.c @ theta_sol),
        violation=violation,
        basis_suboptimality=basis_sub,
        consensus_residual=consensus_residual(points),
        cost_spread=cost_agreement(costs),
        epsilon=cfg.epsilon,
        delta=cfg.delta,
    )
    return RunResult(metrics, trace, instance, schedule, basis_sol, agents)


# --------------------------------------------------------------------------
# output formats
# --------------------------------------------------------------------------


def write_metrics_csv(rows, out, mean_line: bool = False) -> None:
    """Metrics as CSV with the fixed ``METRICS_HEADER``; optionally a trailing mean row."""
    rows = [r.row() if isinstance(r, RunMetrics) else r for r in rows]
    w = csv.DictWriter(out, fieldnames=METRICS_HEADER, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: _csv_value(r[k]) for k in METRICS_HEADER})
    if mean_line and rows:
        mean = {}
        for k in METRICS_HEADER:
            vals = [r[k] for r in rows]
            if all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in vals):
                mean[k] = _csv_value(float(np.mean(vals)))
            else:
                mean[k] = ""
        mean["seed"] = "mean"
        w.writerow(mean)


def _csv_value(v):
    return repr(v) if isinstance(v, float) else v


def metrics_csv_text(rows, mean_line: bool = False) -> str:
    buf = io.StringIO()
    write_metrics_csv(rows, buf, mean_line)
    return buf.getvalue()


def write_trace(trace, out) -> None:
    """One JSON object per line per (tick, agent)."""
    for rec in trace:
        out.write(json.dumps(rec, sort_keys=True) + "\n")


def read_trace(path) -> list:
    out = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                out.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise ConfigError(f"{path}:{lineno}: bad trace record ({exc.msg})") from None
    return out


def figure_series(trace) -> list:
    """Per-agent cost and distance-to-solution series, one row per (t, agent)."""
    return [
        {"t": r["t"], "agent": r["agent"], "cost": r["cost"], "distance": r["distance"]}
        for r in sorted(trace, key=lambda r: (r["agent"], r["t"]))
    ]


def solution_payload(result: RunResult) -> dict:
    b = result.basis_sol
    return {
        "theta": result.metrics.theta_sol.tolist(),
        "cost": result.metrics.cost,
        "epsilon": result.metrics.epsilon,
        "delta": result.metrics.delta,
        "seed": result.metrics.seed,
        "basis": [
            {"id": list(b.ids[r]), "normal": b.A[r].tolist(), "offset": float(b.b[r])}
            for r in range(len(b))
        ],
    }


def load_solution(path) -> tuple[np.ndarray, ConstraintSet, dict]:
    try:
        data = json.loads(Path(path).read_text())
        theta = np.asarray(data["theta"], dtype=float)
        rows = data.get("basis", [])
        d = theta.shape[0]
        basis = ConstraintSet(
            np.array([r["normal"] for r in rows], dtype=float).reshape(len(rows), d),
            [r["offset"] for r in rows],
            [(int(r["id"][0]), int(r["id"][1]), str(r["id"][2])) for r in rows],
            d,
        )
    except (OSError, KeyError, ValueError, TypeError, IndexError) as exc:
        raise ConfigError(f"{path}: malformed solution file ({exc})") from None
    return theta, basis, data
