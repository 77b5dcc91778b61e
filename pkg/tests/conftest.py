"""Shared builders and independent oracles for the test suite."""

import numpy as np
import pytest

from vnfmigsim.perf import PerfParams
from vnfmigsim.state import NetworkState
from vnfmigsim.topology import CORE, EDGE, Link, Server, Topology
from vnfmigsim.workload import Vnf, VnfFg


def make_topology(caps, links, prop_delays=None, bw_mbps=3500, n_edge=1):
    """Small hand-built topology: caps = [(cpu, mem), ...], links = [(u, v), ...]."""
    servers = [
        Server(
            id=i,
            tier=EDGE if i < n_edge else CORE,
            cpu_capacity=cpu,
            mem_capacity=mem,
            pos=(0.0, 0.0),
        )
        for i, (cpu, mem) in enumerate(caps)
    ]
    prop_delays = prop_delays or [0.5] * len(links)
    link_objs = [
        Link(id=i, endpoints=(min(u, v), max(u, v)), bandwidth_mbps=bw_mbps, prop_delay_ms=d)
        for i, ((u, v), d) in enumerate(zip(links, prop_delays))
    ]
    return Topology(servers=servers, links=link_objs)


def make_fg(
    fg_id=0,
    cpu=(10,),
    mem=(2,),
    bw_mbps=(),
    arrival=0,
    service=100,
    deadline=20.0,
    packet_rate=100.0,
):
    vnfs = [
        Vnf(fg_id=fg_id, position=i, cpu_demand=c, mem_demand=m)
        for i, (c, m) in enumerate(zip(cpu, mem))
    ]
    return VnfFg(
        id=fg_id,
        vnfs=vnfs,
        bw_demands_mbps=list(bw_mbps),
        arrival=arrival,
        service_time=service,
        packet_rate=packet_rate,
        deadline_ms=deadline,
    )


@pytest.fixture
def params():
    return PerfParams()


def fresh_state(topo):
    return NetworkState.fresh(topo)


# -- independent oracles ------------------------------------------------------


def bfs_reachable(n_servers, links):
    """Test-side BFS over raw link endpoint pairs."""
    adj = {i: [] for i in range(n_servers)}
    for u, v in links:
        adj[u].append(v)
        adj[v].append(u)
    seen = {0}
    frontier = [0]
    while frontier:
        nxt = []
        for u in frontier:
            for v in adj[u]:
                if v not in seen:
                    seen.add(v)
                    nxt.append(v)
        frontier = nxt
    return seen


def enumerate_simple_paths(topo, src, dst, feasible_link_ids):
    """All simple paths (as link-id lists) using only the allowed links."""
    paths = []

    def extend(node, visited, trail):
        if node == dst:
            paths.append(list(trail))
            return
        for neigh, link_id in topo.adjacency[node]:
            if link_id in feasible_link_ids and neigh not in visited:
                visited.add(neigh)
                trail.append(link_id)
                extend(neigh, visited, trail)
                trail.pop()
                visited.discard(neigh)

    extend(src, {src}, [])
    return paths


def brute_force_violations(topo, fgs, placements, routes, cpu_thr=1.0, mem_thr=1.0):
    """Re-evaluate Eqs. (5)-(7) from scratch, independent of NetworkState."""
    fg_by_id = {fg.id: fg for fg in fgs}
    cpu_used = np.zeros(topo.n_servers)
    mem_used = np.zeros(topo.n_servers)
    bw_used = np.zeros(topo.n_links)
    for fg_id, hosts in placements.items():
        for v, s in enumerate(hosts):
            if s is not None:
                cpu_used[s] += fg_by_id[fg_id].vnfs[v].cpu_demand
                mem_used[s] += fg_by_id[fg_id].vnfs[v].mem_demand
    for (fg_id, seg), link_ids in routes.items():
        for l in link_ids:
            bw_used[l] += fg_by_id[fg_id].bw_demands_mbps[seg]
    out = []
    for s in range(topo.n_servers):
        if cpu_used[s] > cpu_thr * topo.servers[s].cpu_capacity:
            out.append(("server-cpu", s))
    for s in range(topo.n_servers):
        if mem_used[s] > mem_thr * topo.servers[s].mem_capacity:
            out.append(("server-mem", s))
    for l in range(topo.n_links):
        if bw_used[l] > topo.links[l].bandwidth_mbps:
            out.append(("link-bw", l))
    return out


def finite_difference(params_list, loss_fn, h=1e-5):
    """Central finite-difference gradients for a list of parameter arrays."""
    grads = []
    for p in params_list:
        g = np.zeros_like(p)
        it = np.nditer(p, flags=["multi_index"])
        for _ in it:
            idx = it.multi_index
            orig = p[idx]
            p[idx] = orig + h
            lp = loss_fn()
            p[idx] = orig - h
            lm = loss_fn()
            p[idx] = orig
            g[idx] = (lp - lm) / (2 * h)
        grads.append(g)
    return grads


def max_rel_error(analytic, numeric, floor=1e-6):
    worst = 0.0
    for a, n in zip(analytic, numeric):
        denom = np.maximum(np.maximum(np.abs(a), np.abs(n)), floor)
        worst = max(worst, float((np.abs(a - n) / denom).max()))
    return worst
