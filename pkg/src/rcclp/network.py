"""Directed communication graphs, schedules, and the simulated round loop.

Nodes are numbered ``0 .. n-1``. An edge ``(i, j)`` means ``i`` transmits to
``j``. Universal time is a simulator tick that agents never read.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .consensus import AgentState, HaltRule, optimization_step, verification_step
from .lp_core import DEFAULT_BOX, BoundingBox


@dataclass(frozen=True)
class Digraph:
    n: int
    edges: frozenset

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("graph needs at least one node")
        edges = frozenset((int(i), int(j)) for i, j in self.edges)
        for i, j in edges:
            if i == j:
                raise ValueError(f"self-loop at node {i}")
            if not (0 <= i < self.n and 0 <= j < self.n):
                raise ValueError(f"edge ({i}, {j}) outside 0..{self.n - 1}")
        object.__setattr__(self, "edges", edges)

    def out_neighbors(self, i: int) -> list[int]:
        return sorted(j for a, j in self.edges if a == i)

    def in_neighbors(self, j: int) -> list[int]:
        return sorted(i for i, b in self.edges if b == j)

    def union(self, other: "Digraph") -> "Digraph":
        return Digraph(self.n, self.edges | other.edges)

    def _adjacency(self, reverse=False):
        adj = [[] for _ in range(self.n)]
        for i, j in sorted(self.edges):
            if reverse:
                adj[j].append(i)
            else:
                adj[i].append(j)
        return adj


def _bfs(adj, src):
    dist = [-1] * len(adj)
    dist[src] = 0
    queue = deque([src])
    while queue:
        u = queue.popleft()
        for v in adj[u]:
            if dist[v] < 0:
                dist[v] = dist[u] + 1
                queue.append(v)
    return dist


def is_strongly_connected(g: Digraph) -> bool:
    fwd = _bfs(g._adjacency(), 0)
    bwd = _bfs(g._adjacency(reverse=True), 0)
    return min(fwd) >= 0 and min(bwd) >= 0


def diameter(g: Digraph) -> int:
    """Longest shortest directed path over all ordered pairs."""
    adj = g._adjacency()
    best = 0
    for s in range(g.n):
        dist = _bfs(adj, s)
        if min(dist) < 0:
            raise ValueError("diameter is undefined for a graph that is not strongly connected")
        best = max(best, max(dist))
    return best


def complete_digraph(n: int) -> Digraph:
    return Digraph(n, frozenset((i, j) for i in range(n) for j in range(n) if i != j))


def ring_digraph(n: int) -> Digraph:
    return Digraph(n, frozenset((i, (i + 1) % n) for i in range(n)) if n > 1 else frozenset())


def generate_random_digraph(n: int, degree: int, rng: np.random.Generator, *,
                            target_diameter: int | None = None, max_tries: int = 10_000) -> Digraph:
    """Random digraph where every node has exactly ``degree`` in-neighbors.

    Resamples until strongly connected (and, if requested, until the diameter
    equals ``target_diameter``).
    """
    if not 0 < degree < n:
        raise ValueError(f"degree must satisfy 0 < degree < n, got degree={degree}, n={n}")
    for _ in range(max_tries):
        edges = set()
        for j in range(n):
            others = np.array([i for i in range(n) if i != j])
            for i in rng.choice(others, size=degree, replace=False):
                edges.add((int(i), j))
        g = Digraph(n, frozenset(edges))
        if not is_strongly_connected(g):
            continue
        if target_diameter is not None and diameter(g) != target_diameter:
            continue
        return g
    want = f" with diameter {target_diameter}" if target_diameter is not None else ""
    raise RuntimeError(f"no strongly connected in-degree-{degree} digraph on {n} nodes{want} after {max_tries} draws")


@dataclass(frozen=True)
class Schedule:
    """Time-varying graph given by a periodic list of digraphs (one entry for static)."""

    graphs: tuple
    L: int = 1
    kind: str = "static"
    activation: float = 1.0

    def __post_init__(self):
        if not self.graphs:
            raise ValueError("schedule needs at least one graph")
        if len({g.n for g in self.graphs}) != 1:
            raise ValueError("all graphs in a schedule must share the node count")
        if self.L < 1:
            raise ValueError("window length L must be >= 1")
        if self.kind not in ("static", "periodic"):
            raise ValueError(f"unknown schedule kind {self.kind!r}")
        if not 0.0 < self.activation <= 1.0:
            raise ValueError("activation probability must lie in (0, 1]")

    @property
    def n(self) -> int:
        return self.graphs[0].n

    @property
    def period(self) -> int:
        return len(self.graphs)

    def graph_at(self, t: int) -> Digraph:
        return self.graphs[t % len(self.graphs)]

    @classmethod
    def static(cls, g: Digraph, activation: float = 1.0) -> "Schedule":
        return cls((g,), 1, "static", activation)


def ring_token_schedule(n: int) -> Schedule:
    """One ring edge per tick: at time t only ``(t mod n) -> (t mod n) + 1`` is active."""
    graphs = tuple(Digraph(n, frozenset({(t, (t + 1) % n)})) for t in range(n))
    return Schedule(graphs, L=n, kind="periodic")


def validate_schedule(s: Schedule, horizon: int) -> bool:
    """Check that every window of ``L`` consecutive graphs has a strongly connected union."""
    if horizon < s.L:
        raise ValueError(f"horizon {horizon} shorter than window L={s.L}")
    last_start = horizon - s.L
    if s.kind == "static" or s.period == 1:
        last_start = 0
    else:
        last_start = min(last_start, s.period - 1)
    for t in range(last_start + 1):
        union = s.graph_at(t)
        for tau in range(t + 1, t + s.L):
            union = union.union(s.graph_at(tau))
        if not is_strongly_connected(union):
            return False
    return True


@dataclass(frozen=True)
class Delivery:
    t: int
    sender: int
    recipient: int
    basis_ids: tuple


def _send_phase(agents, g: Digraph, t, awake, log):
    for i, agent in enumerate(agents):
        if not awake[i]:
            continue
        ids = agent.basis_ids
        sent = False
        for j in g.out_neighbors(i):
            if agent.last_sent.get(j) == ids:
                continue
            agents[j].inbox[i] = agent.basis
            agent.last_sent[j] = ids
            log.append(Delivery(t, i, j, tuple(sorted(ids))))
            sent = True
        if sent:
            agent.transmissions += 1
    return log


def run_round(agents: Sequence[AgentState], schedule: Schedule, t: int, c, *,
              box: BoundingBox = DEFAULT_BOX, rule: HaltRule | None = None, mode: str = "deferred",
              activation_rng: np.random.Generator | None = None,
              sink: Callable[[dict], None] | None = None) -> list[Delivery]:
    """Advance every agent by one tick of universal time.

    ``mode="sync"`` delivers bases over ``E(t)`` before anyone re-optimizes,
    so they are used in the same tick; ``"deferred"`` sends the freshly
    computed bases after the update, visible from tick ``t + 1``. A basis is
    only re-sent over an edge when it differs from the last one sent there.
    Halted agents keep answering with their final basis.
    """
    if t < 1:
        raise ValueError("rounds start at t = 1")
    if mode not in ("deferred", "sync"):
        raise ValueError(f"unknown delivery mode {mode!r}")
    g = schedule.graph_at(t)
    if schedule.activation < 1.0:
        rng = activation_rng if activation_rng is not None else np.random.default_rng(t)
        awake = rng.random(len(agents)) < schedule.activation
    else:
        awake = np.ones(len(agents), dtype=bool)
    log: list[Delivery] = []
    sent_before = [a.transmissions for a in agents]
    if mode == "sync":
        _send_phase(agents, g, t, awake, log)
    stepped = [False] * len(agents)
    for i, agent in enumerate(agents):
        if agent.halted or not awake[i]:
            continue
        stepped[i] = True
        certificate = verification_step(agent)
        incoming, agent.inbox = agent.inbox, {}
        optimization_step(agent, incoming, certificate, c, box, rule)
    if mode == "deferred":
        _send_phase(agents, g, t, awake, log)
    if sink is not None:
        for i, agent in enumerate(agents):
            sink({
                "t": t,
                "agent": agent.id,
                "cost": agent.cost,
                "theta": agent.theta.tolist(),
                "basis": [list(x) for x in sorted(agent.basis_ids)],
                "k": agent.k,
                "unchanged_count": agent.unchanged_count,
                "basis_changed": bool(agent.basis_changed and stepped[i]),
                "transmitted": agent.transmissions > sent_before[i],
                "halted": agent.halted,
            })
    return log
