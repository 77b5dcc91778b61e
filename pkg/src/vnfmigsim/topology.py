"""Edge-core network topology: Waxman generation, feasible routing, JSON pinning.

Servers 0..n_edge-1 are edge tier, the rest core tier. Link bandwidth is kept
in integer Mbps so that residual-bandwidth bookkeeping stays exact.
"""

import heapq
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError

EDGE = "edge"
CORE = "core"

MBPS_PER_GBPS = 1000


@dataclass(frozen=True)
class Server:
    id: int
    tier: str
    cpu_capacity: int
    mem_capacity: int
    pos: tuple[float, float]


@dataclass(frozen=True)
class Link:
    id: int
    endpoints: tuple[int, int]  # (u, v) with u < v
    bandwidth_mbps: int
    prop_delay_ms: float

    @property
    def bandwidth_gbps(self) -> float:
        return self.bandwidth_mbps / MBPS_PER_GBPS

    def other(self, s: int) -> int:
        u, v = self.endpoints
        return v if s == u else u


@dataclass
class CapacityConfig:
    """Per-tier server capacities and link attribute ranges (section-IV defaults)."""

    edge_cpu: int = 40
    edge_mem: int = 16
    core_cpu: int = 200
    core_mem: int = 64
    link_bw_gbps: float = 3.5
    prop_delay_range_ms: tuple[float, float] = (0.1, 1.0)

    def validate(self):
        if min(self.edge_cpu, self.edge_mem, self.core_cpu, self.core_mem) <= 0:
            raise ConfigurationError("server capacities must be positive")
        if self.link_bw_gbps <= 0:
            raise ConfigurationError("link bandwidth must be positive")
        lo, hi = self.prop_delay_range_ms
        if lo < 0 or hi < lo:
            raise ConfigurationError(f"bad prop delay range {self.prop_delay_range_ms}")


@dataclass
class Topology:
    servers: list[Server]
    links: list[Link]
    # adjacency[s] -> list of (neighbor id, link id)
    adjacency: list[list[tuple[int, int]]] = field(default_factory=list)

    def __post_init__(self):
        if not self.adjacency:
            self.adjacency = [[] for _ in self.servers]
            for link in self.links:
                u, v = link.endpoints
                self.adjacency[u].append((v, link.id))
                self.adjacency[v].append((u, link.id))

    @property
    def n_servers(self) -> int:
        return len(self.servers)

    @property
    def n_links(self) -> int:
        return len(self.links)

    @property
    def n_edge(self) -> int:
        return sum(1 for s in self.servers if s.tier == EDGE)

    def cpu_capacities(self) -> np.ndarray:
        return np.array([s.cpu_capacity for s in self.servers], dtype=np.int64)

    def mem_capacities(self) -> np.ndarray:
        return np.array([s.mem_capacity for s in self.servers], dtype=np.int64)

    def bw_capacities_mbps(self) -> np.ndarray:
        return np.array([l.bandwidth_mbps for l in self.links], dtype=np.int64)

    def is_connected(self) -> bool:
        if not self.servers:
            return True
        seen = {0}
        stack = [0]
        while stack:
            u = stack.pop()
            for v, _ in self.adjacency[u]:
                if v not in seen:
                    seen.add(v)
                    stack.append(v)
        return len(seen) == self.n_servers

    def to_json(self) -> str:
        doc = {
            "servers": [
                {
                    "id": s.id,
                    "tier": s.tier,
                    "cpu_capacity": s.cpu_capacity,
                    "mem_capacity": s.mem_capacity,
                    "pos": list(s.pos),
                }
                for s in self.servers
            ],
            "links": [
                {
                    "id": l.id,
                    "endpoints": list(l.endpoints),
                    "bandwidth_gbps": l.bandwidth_mbps / MBPS_PER_GBPS,
                    "prop_delay_ms": l.prop_delay_ms,
                }
                for l in self.links
            ],
        }
        return json.dumps(doc, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "Topology":
        doc = json.loads(text)
        servers = [
            Server(
                id=s["id"],
                tier=s["tier"],
                cpu_capacity=s["cpu_capacity"],
                mem_capacity=s["mem_capacity"],
                pos=tuple(s["pos"]),
            )
            for s in doc["servers"]
        ]
        links = [
            Link(
                id=l["id"],
                endpoints=tuple(l["endpoints"]),
                bandwidth_mbps=int(round(l["bandwidth_gbps"] * MBPS_PER_GBPS)),
                prop_delay_ms=l["prop_delay_ms"],
            )
            for l in doc["links"]
        ]
        return cls(servers=servers, links=links)


def _pairwise_dist(pos: np.ndarray) -> np.ndarray:
    diff = pos[:, None, :] - pos[None, :, :]
    return np.sqrt((diff**2).sum(axis=2))


def generate_waxman(
    n_edge: int,
    n_core: int,
    alpha: float,
    beta: float,
    seed: int,
    caps: CapacityConfig | None = None,
) -> Topology:
    """Generate a connected Waxman edge-core topology, deterministic per seed.

    Each server pair (u, v) is linked with probability alpha*exp(-d/(beta*L))
    where d is the Euclidean distance between uniform unit-square positions and
    L the maximum pairwise distance. Components left over are then joined via
    the globally closest inter-component server pair until connected.
    """
    if n_edge < 1 or n_core < 1:
        raise ConfigurationError("need at least one edge and one core server")
    if not (0.0 <= alpha <= 1.0):
        raise ConfigurationError(f"alpha must be in [0, 1], got {alpha}")
    if beta <= 0:
        raise ConfigurationError(f"beta must be positive, got {beta}")
    caps = caps or CapacityConfig()
    caps.validate()

    rng = np.random.default_rng(seed)
    n = n_edge + n_core
    pos = rng.uniform(0.0, 1.0, size=(n, 2))
    dist = _pairwise_dist(pos)
    max_dist = float(dist.max()) if n > 1 else 1.0
    if max_dist == 0.0:
        max_dist = 1.0  # degenerate co-located placement

    linked = np.zeros((n, n), dtype=bool)
    for u in range(n):
        for v in range(u + 1, n):
            p = alpha * math.exp(-dist[u, v] / (beta * max_dist))
            if rng.random() < p:
                linked[u, v] = True

    # Repair connectivity: repeatedly join the two closest servers in
    # different components.
    comp = list(range(n))

    def find(x):
        while comp[x] != x:
            comp[x] = comp[comp[x]]
            x = comp[x]
        return x

    for u in range(n):
        for v in range(u + 1, n):
            if linked[u, v]:
                comp[find(u)] = find(v)
    while True:
        roots = {find(x) for x in range(n)}
        if len(roots) == 1:
            break
        best = None
        for u in range(n):
            for v in range(u + 1, n):
                if find(u) != find(v):
                    if best is None or dist[u, v] < dist[best[0], best[1]]:
                        best = (u, v)
        u, v = best
        linked[u, v] = True
        comp[find(u)] = find(v)

    bw_mbps = int(round(caps.link_bw_gbps * MBPS_PER_GBPS))
    lo, hi = caps.prop_delay_range_ms
    links = []
    for u in range(n):
        for v in range(u + 1, n):
            if linked[u, v]:
                links.append(
                    Link(
                        id=len(links),
                        endpoints=(u, v),
                        bandwidth_mbps=bw_mbps,
                        prop_delay_ms=float(rng.uniform(lo, hi)),
                    )
                )

    servers = []
    for s in range(n):
        edge = s < n_edge
        servers.append(
            Server(
                id=s,
                tier=EDGE if edge else CORE,
                cpu_capacity=caps.edge_cpu if edge else caps.core_cpu,
                mem_capacity=caps.edge_mem if edge else caps.core_mem,
                pos=(float(pos[s, 0]), float(pos[s, 1])),
            )
        )
    return Topology(servers=servers, links=links)


def shortest_feasible_path(
    topo: Topology,
    src: int,
    dst: int,
    bw_demand_mbps: int,
    residual_bw_mbps,
) -> list[int] | None:
    """Minimum-hop path from src to dst using links with enough residual bandwidth.

    Ties are broken by smallest cumulative propagation delay, then by
    lexicographically smallest link-id sequence. Returns link ids in path
    order, [] when src == dst, or None when no feasible path exists.
    """
    if src == dst:
        return []
    # Label = (hops, prop_delay, link-id tuple); all three extend monotonically,
    # so a Dijkstra settle order on the composite label is optimal.
    start = (0, 0.0, ())
    heap = [(start, src)]
    settled = set()
    while heap:
        (hops, prop, path), u = heapq.heappop(heap)
        if u in settled:
            continue
        settled.add(u)
        if u == dst:
            return list(path)
        for v, link_id in topo.adjacency[u]:
            if v in settled:
                continue
            if residual_bw_mbps[link_id] < bw_demand_mbps:
                continue
            link = topo.links[link_id]
            label = (hops + 1, prop + link.prop_delay_ms, path + (link_id,))
            heapq.heappush(heap, (label, v))
    return None
