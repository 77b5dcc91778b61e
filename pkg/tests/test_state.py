import numpy as np
import pytest

from vnfmigsim.errors import InfeasiblePlacementError
from vnfmigsim.state import NetworkState
from vnfmigsim.workload import generate_requests

from conftest import brute_force_violations, make_fg, make_topology


def two_server_topology():
    return make_topology([(40, 16), (200, 64)], [(0, 1)])


def test_apply_placement_residuals():
    topo = two_server_topology()
    state = NetworkState.fresh(topo)
    fg = make_fg(cpu=(20, 20, 20), mem=(4, 4, 4), bw_mbps=(100, 100))
    state.apply_placement(fg, 0, 0)
    assert state.residual_cpu()[0] == 20 and state.residual_mem()[0] == 12
    state.apply_placement(fg, 1, 0)
    assert state.residual_cpu()[0] == 0 and state.residual_mem()[0] == 8
    with pytest.raises(InfeasiblePlacementError):
        state.apply_placement(fg, 2, 0)
    # failed placement leaves the state untouched
    assert state.residual_cpu()[0] == 0 and state.residual_mem()[0] == 8
    assert state.placements[fg.id][2] is None


def test_apply_remove_round_trip_exact():
    topo = two_server_topology()
    state = NetworkState.fresh(topo)
    fg = make_fg(cpu=(13, 7), mem=(3, 2), bw_mbps=(137,))
    before = state.digest()
    state.apply_placement(fg, 0, 0)
    state.apply_placement(fg, 1, 1)
    state.apply_route(fg, 0, [0])
    state.remove_route(fg, 0)
    state.remove_placement(fg, 1)
    state.remove_placement(fg, 0)
    assert state.digest() == before


def test_cpu_utilization_simple():
    topo = two_server_topology()
    state = NetworkState.fresh(topo)
    assert state.cpu_utilization(0) == 0.0
    fg = make_fg(cpu=(20,), mem=(4,))
    state.apply_placement(fg, 0, 0)
    assert state.cpu_utilization(0) == 0.5


def test_utilization_matches_resummation_oracle():
    rng = np.random.default_rng(21)
    topo = make_topology([(40, 16)] * 5, [(0, 1), (1, 2), (2, 3), (3, 4)])
    state = NetworkState.fresh(topo)
    fgs = generate_requests(6, 0.5, 3, seed=4)
    hosted = {}
    for fg in fgs:
        for v in range(fg.length):
            s = int(rng.integers(5))
            state.apply_placement(fg, v, s, enforce=False)
            hosted.setdefault(s, []).append(fg.vnfs[v].cpu_demand)
    for s in range(5):
        expected = sum(hosted.get(s, [])) / topo.servers[s].cpu_capacity
        assert state.cpu_utilization(s) == pytest.approx(expected, abs=0)


def test_check_constraints_fresh_state_empty():
    topo = two_server_topology()
    state = NetworkState.fresh(topo)
    assert state.check_constraints(topo) == []


def test_threshold_violation_at_ninety_percent():
    topo = two_server_topology()
    state = NetworkState.fresh(topo)
    fg = make_fg(cpu=(36,), mem=(2,))  # 90% of the edge server's 40 CPU
    state.apply_placement(fg, 0, 0)
    assert state.check_constraints(topo) == []
    violations = state.check_constraints(topo, cpu_threshold=0.8, mem_threshold=0.8)
    assert violations == [("server-cpu", 0)]


def test_constraints_match_brute_force_oracle():
    rng = np.random.default_rng(9)
    for trial in range(60):
        n_servers = int(rng.integers(2, 7))
        links = [(u, u + 1) for u in range(n_servers - 1)]
        topo = make_topology(
            [(int(rng.integers(20, 80)), int(rng.integers(4, 20)))] * n_servers,
            links,
            bw_mbps=int(rng.integers(300, 1200)),
        )
        state = NetworkState.fresh(topo)
        fgs = generate_requests(int(rng.integers(1, 5)), 0.5, 3, seed=trial)
        for fg in fgs:
            for v in range(fg.length):
                state.apply_placement(fg, v, int(rng.integers(n_servers)), enforce=False)
            for seg in range(fg.n_segments):
                hops = sorted(rng.choice(len(links), size=rng.integers(0, len(links)) + 1, replace=False))
                state.apply_route(fg, seg, [int(h) for h in hops], enforce=False)
        got = sorted(state.check_constraints(topo))
        expected = sorted(brute_force_violations(topo, fgs, state.placements, state.routes))
        assert got == expected


def test_activation_soundness_random_sequences():
    # incremental activation flags equal recomputation from placements/routes
    rng = np.random.default_rng(33)
    topo = make_topology([(400, 160)] * 4, [(0, 1), (1, 2), (2, 3), (0, 3)])
    state = NetworkState.fresh(topo)
    fgs = generate_requests(8, 0.5, 3, seed=6)
    placed = set()
    for _ in range(400):
        fg = fgs[int(rng.integers(len(fgs)))]
        if fg.id in placed:
            state.remove_fg(fg)
            placed.discard(fg.id)
        else:
            for v in range(fg.length):
                state.apply_placement(fg, v, int(rng.integers(4)), enforce=False)
            for seg in range(fg.n_segments):
                state.apply_route(fg, seg, [int(rng.integers(4))], enforce=False)
            placed.add(fg.id)
        # recompute from scratch
        host = np.zeros(4, dtype=int)
        for fg_id, hosts in state.placements.items():
            for s in hosts:
                if s is not None:
                    host[s] += 1
        link = np.zeros(4, dtype=int)
        for (fg_id, seg), link_ids in state.routes.items():
            for l in link_ids:
                link[l] += 1
        assert np.array_equal(state.server_active(), host > 0)
        assert np.array_equal(state.link_active(), link > 0)
        assert np.array_equal(state.host_count, host)
        assert np.array_equal(state.link_count, link)


def test_conservation_after_mutations():
    rng = np.random.default_rng(41)
    topo = make_topology([(100, 40)] * 3, [(0, 1), (1, 2)], bw_mbps=2000)
    state = NetworkState.fresh(topo)
    fgs = generate_requests(5, 0.5, 2, seed=8)
    for fg in fgs:
        for v in range(fg.length):
            state.apply_placement(fg, v, int(rng.integers(3)), enforce=False)
        for seg in range(fg.n_segments):
            state.apply_route(fg, seg, [int(rng.integers(2))], enforce=False)
        # conservation: used + residual == capacity, exactly
        assert np.array_equal(state.used_cpu + state.residual_cpu(), state.cpu_cap)
        assert np.array_equal(state.used_mem + state.residual_mem(), state.mem_cap)
        assert np.array_equal(
            state.used_bw_mbps + state.residual_bw_mbps(), state.bw_cap_mbps
        )


def test_state_json_snapshot():
    topo = two_server_topology()
    state = NetworkState.fresh(topo)
    fg = make_fg(cpu=(10, 10), mem=(2, 2), bw_mbps=(150,))
    state.apply_placement(fg, 0, 0)
    state.apply_placement(fg, 1, 1)
    state.apply_route(fg, 0, [0])
    import json

    doc = json.loads(state.to_json())
    assert doc["placements"]["0"] == [0, 1]
    assert doc["routes"]["0:0"] == [0]
    assert doc["used_cpu"] == [10, 10]
    assert doc["used_bw_mbps"] == [150]
    assert doc["server_active"] == [True, True]
