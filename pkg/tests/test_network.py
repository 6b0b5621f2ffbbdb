import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import diameter_floyd, strongly_connected_bruteforce
from rcclp.consensus import HaltRule, init_agent
from rcclp.network import (
    Digraph,
    Schedule,
    complete_digraph,
    diameter,
    generate_random_digraph,
    is_strongly_connected,
    ring_digraph,
    ring_token_schedule,
    run_round,
    validate_schedule,
)
from rcclp.probgen import InstanceSpec, generate
from rcclp.uncertainty import ProbabilisticLevels


def test_ring_is_strongly_connected():
    assert is_strongly_connected(ring_digraph(5))


def test_ring_minus_edge():
    g = ring_digraph(5)
    assert not is_strongly_connected(Digraph(5, g.edges - {(4, 0)}))


def test_single_node():
    g = Digraph(1, frozenset())
    assert is_strongly_connected(g)
    assert diameter(g) == 0


@pytest.mark.parametrize("n", [2, 3, 7, 12])
def test_diameters(n):
    assert diameter(ring_digraph(n)) == n - 1
    assert diameter(complete_digraph(n)) == 1


def test_diameter_rejects_disconnected():
    with pytest.raises(ValueError):
        diameter(Digraph(3, frozenset({(0, 1), (1, 2)})))


def test_digraph_validation():
    with pytest.raises(ValueError):
        Digraph(2, frozenset({(0, 0)}))
    with pytest.raises(ValueError):
        Digraph(2, frozenset({(0, 2)}))


@settings(max_examples=150, deadline=None)
@given(st.integers(1, 8).flatmap(
    lambda n: st.tuples(st.just(n), st.sets(st.tuples(st.integers(0, n - 1), st.integers(0, n - 1)).filter(
        lambda e: e[0] != e[1]), max_size=n * (n - 1)))))
def test_connectivity_and_diameter_match_bruteforce(case):
    n, edges = case
    g = Digraph(n, frozenset(edges))
    sc = strongly_connected_bruteforce(n, edges)
    assert is_strongly_connected(g) == sc
    if sc:
        assert diameter(g) == diameter_floyd(n, edges)


@pytest.mark.parametrize("seed", range(10))
def test_random_digraph_in_degree(seed):
    g = generate_random_digraph(10, 3, np.random.default_rng(seed))
    assert is_strongly_connected(g)
    assert all(len(g.in_neighbors(j)) == 3 for j in range(10))


def test_random_digraph_two_nodes():
    g = generate_random_digraph(2, 1, np.random.default_rng(0))
    assert g.edges == frozenset({(0, 1), (1, 0)})


def test_random_digraph_deterministic_and_targeted():
    a = generate_random_digraph(10, 3, np.random.default_rng([1, 1]), target_diameter=4)
    b = generate_random_digraph(10, 3, np.random.default_rng([1, 1]), target_diameter=4)
    assert a == b and diameter(a) == 4


def test_random_digraph_bounded_rejections():
    with pytest.raises(RuntimeError, match="after 5 draws"):
        generate_random_digraph(10, 3, np.random.default_rng(0), target_diameter=1, max_tries=5)
    with pytest.raises(ValueError):
        generate_random_digraph(3, 3, np.random.default_rng(0))


# --- schedules -------------------------------------------------------------------


def test_static_schedule_valid():
    assert validate_schedule(Schedule.static(ring_digraph(4)), 10)


def test_ring_token_schedule():
    s = ring_token_schedule(5)
    assert s.L == 5 and s.period == 5
    for t in range(12):
        assert s.graph_at(t).edges == frozenset({(t % 5, (t + 1) % 5)})
    assert validate_schedule(s, 20)
    short = Schedule(s.graphs, L=4, kind="periodic")
    assert not validate_schedule(short, 20)


def test_empty_schedule_invalid():
    s = Schedule.static(Digraph(3, frozenset()))
    assert not validate_schedule(s, 5)


def test_validate_schedule_horizon():
    with pytest.raises(ValueError):
        validate_schedule(ring_token_schedule(4), 2)


# --- run_round -------------------------------------------------------------------


def make_agents(n=4, seed=0, radius=0.2):
    inst = generate(InstanceSpec(n, 12, 3, radius, seed=seed))
    lv = ProbabilisticLevels(0.05, 1e-4)
    return inst, [init_agent(s, inst.c, lv, inst.box, np.random.default_rng([seed, 2, i]), i)
                  for i, s in enumerate(inst.sets)]


def test_no_edges_leave_mailboxes_alone():
    inst, agents = make_agents()
    sched = Schedule.static(Digraph(4, frozenset()))
    log = run_round(agents, sched, 1, inst.c, box=inst.box)
    assert log == []
    assert all(not a.mailbox and not a.inbox for a in agents)
    assert all(a.transmissions == 0 for a in agents)


@pytest.mark.parametrize("mode", ["deferred", "sync"])
def test_deliveries_follow_active_edges(mode):
    inst, agents = make_agents()
    sched = ring_token_schedule(4)
    for t in range(1, 40):
        for dl in run_round(agents, sched, t, inst.c, box=inst.box, mode=mode):
            assert (dl.sender, dl.recipient) in sched.graph_at(t).edges
            assert dl.t == t


def test_sync_and_deferred_agree_on_cost():
    finals = {}
    for mode in ("deferred", "sync"):
        inst, agents = make_agents(seed=3)
        sched = Schedule.static(complete_digraph(4))
        rule = HaltRule.static(1)
        for t in range(1, 500):
            run_round(agents, sched, t, inst.c, box=inst.box, rule=rule, mode=mode)
            if all(a.halted for a in agents):
                break
        assert all(a.halted for a in agents)
        finals[mode] = [a.cost for a in agents]
    ref = finals["deferred"][0]
    for costs in finals.values():
        assert costs == pytest.approx([ref] * 4, rel=1e-9)


def test_no_retransmit_of_unchanged_basis():
    inst, agents = make_agents(radius=0.0)
    sched = Schedule.static(complete_digraph(4))
    logs = [run_round(agents, sched, t, inst.c, box=inst.box) for t in range(1, 30)]
    assert logs[-1] == []
    per_edge = {}
    for log in logs:
        for dl in log:
            key = (dl.sender, dl.recipient)
            assert per_edge.get(key) != dl.basis_ids
            per_edge[key] = dl.basis_ids


def test_activation_subsampling_is_seeded():
    def run(seed):
        inst, agents = make_agents(seed=1)
        sched = Schedule.static(complete_digraph(4), activation=0.5)
        rng = np.random.default_rng(seed)
        rec = []
        for t in range(1, 20):
            run_round(agents, sched, t, inst.c, box=inst.box, activation_rng=rng, sink=rec.append)
        return rec

    assert run(9) == run(9)


def test_round_starts_at_one():
    inst, agents = make_agents()
    with pytest.raises(ValueError):
        run_round(agents, Schedule.static(complete_digraph(4)), 0, inst.c)
