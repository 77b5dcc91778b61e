"""Mutable network state: placements y, routings z, activation flags, residuals.

All resource bookkeeping is integer (CPU/MEM units, bandwidth in Mbps), so
apply/remove pairs restore residuals exactly and state digests are stable.
"""

import hashlib
from dataclasses import dataclass, field

import numpy as np

from .errors import InfeasiblePlacementError
from .topology import Topology
from .workload import VnfFg

CPU = "server-cpu"
MEM = "server-mem"
BW = "link-bw"


@dataclass
class NetworkState:
    cpu_cap: np.ndarray
    mem_cap: np.ndarray
    bw_cap_mbps: np.ndarray
    used_cpu: np.ndarray
    used_mem: np.ndarray
    used_bw_mbps: np.ndarray
    host_count: np.ndarray  # VNFs placed per server
    link_count: np.ndarray  # logical links routed per physical link
    # placement y: fg id -> hosting server per VNF position (None = unplaced)
    placements: dict = field(default_factory=dict)
    # routing z: (fg id, segment) -> tuple of link ids
    routes: dict = field(default_factory=dict)
    prev_active: np.ndarray = None  # activation flags at the previous step boundary

    @classmethod
    def fresh(cls, topo: Topology) -> "NetworkState":
        n, m = topo.n_servers, topo.n_links
        return cls(
            cpu_cap=topo.cpu_capacities(),
            mem_cap=topo.mem_capacities(),
            bw_cap_mbps=topo.bw_capacities_mbps(),
            used_cpu=np.zeros(n, dtype=np.int64),
            used_mem=np.zeros(n, dtype=np.int64),
            used_bw_mbps=np.zeros(m, dtype=np.int64),
            host_count=np.zeros(n, dtype=np.int64),
            link_count=np.zeros(m, dtype=np.int64),
            prev_active=np.zeros(n, dtype=bool),
        )

    # -- activation views (Eqs. 3-4; link flags from routing z) --------------

    def server_active(self) -> np.ndarray:
        return self.host_count > 0

    def link_active(self) -> np.ndarray:
        return self.link_count > 0

    def residual_cpu(self) -> np.ndarray:
        return self.cpu_cap - self.used_cpu

    def residual_mem(self) -> np.ndarray:
        return self.mem_cap - self.used_mem

    def residual_bw_mbps(self) -> np.ndarray:
        return self.bw_cap_mbps - self.used_bw_mbps

    def cpu_utilization(self, s: int) -> float:
        return self.used_cpu[s] / self.cpu_cap[s]

    def mem_utilization(self, s: int) -> float:
        return self.used_mem[s] / self.mem_cap[s]

    def host_of(self, fg_id: int, v: int):
        placed = self.placements.get(fg_id)
        return None if placed is None else placed[v]

    def is_placed(self, fg: VnfFg) -> bool:
        placed = self.placements.get(fg.id)
        return placed is not None and all(s is not None for s in placed)

    # -- mutations ------------------------------------------------------------

    def apply_placement(self, fg: VnfFg, v: int, s: int, enforce: bool = True):
        """Place VNF v of fg on server s, decrementing residuals.

        With enforce=True (the orchestrator path) a placement that would push
        usage past hard capacity raises InfeasiblePlacementError and leaves
        the state untouched. enforce=False builds arbitrary, possibly
        overloaded instances for oracles and what-if analysis.
        """
        placed = self.placements.setdefault(fg.id, [None] * fg.length)
        if placed[v] is not None:
            raise ValueError(f"VNF {v} of FG {fg.id} is already placed")
        vnf = fg.vnfs[v]
        if enforce and (
            self.used_cpu[s] + vnf.cpu_demand > self.cpu_cap[s]
            or self.used_mem[s] + vnf.mem_demand > self.mem_cap[s]
        ):
            raise InfeasiblePlacementError(
                f"server {s} cannot host VNF {v} of FG {fg.id}"
            )
        placed[v] = s
        self.used_cpu[s] += vnf.cpu_demand
        self.used_mem[s] += vnf.mem_demand
        self.host_count[s] += 1

    def remove_placement(self, fg: VnfFg, v: int) -> int:
        """Unplace VNF v of fg, restoring residuals; returns its former host."""
        placed = self.placements[fg.id]
        s = placed[v]
        if s is None:
            raise ValueError(f"VNF {v} of FG {fg.id} is not placed")
        vnf = fg.vnfs[v]
        placed[v] = None
        self.used_cpu[s] -= vnf.cpu_demand
        self.used_mem[s] -= vnf.mem_demand
        self.host_count[s] -= 1
        if all(x is None for x in placed):
            del self.placements[fg.id]
        return s

    def apply_route(self, fg: VnfFg, seg: int, link_ids, enforce: bool = True):
        """Route logical link `seg` of fg over the given physical links."""
        key = (fg.id, seg)
        if key in self.routes:
            raise ValueError(f"segment {seg} of FG {fg.id} is already routed")
        demand = fg.bw_demands_mbps[seg]
        link_ids = tuple(link_ids)
        if enforce:
            for l in link_ids:
                if self.used_bw_mbps[l] + demand > self.bw_cap_mbps[l]:
                    raise InfeasiblePlacementError(
                        f"link {l} cannot carry segment {seg} of FG {fg.id}"
                    )
        self.routes[key] = link_ids
        for l in link_ids:
            self.used_bw_mbps[l] += demand
            self.link_count[l] += 1

    def remove_route(self, fg: VnfFg, seg: int) -> tuple:
        """Drop the routing of logical link `seg`; returns the former link ids."""
        link_ids = self.routes.pop((fg.id, seg))
        demand = fg.bw_demands_mbps[seg]
        for l in link_ids:
            self.used_bw_mbps[l] -= demand
            self.link_count[l] -= 1
        return link_ids

    def remove_fg(self, fg: VnfFg):
        """Remove every placement and route of fg (expiry / rollback)."""
        for seg in range(fg.n_segments):
            if (fg.id, seg) in self.routes:
                self.remove_route(fg, seg)
        placed = self.placements.get(fg.id)
        if placed is not None:
            for v, s in enumerate(placed):
                if s is not None:
                    self.remove_placement(fg, v)

    def snapshot_activation(self):
        """Record current activation flags as the t-1 reference."""
        self.prev_active = self.server_active().copy()

    # -- constraint evaluation (Eqs. 5-7 plus utilization thresholds) ---------

    def check_constraints(
        self, topo: Topology, cpu_threshold: float = 1.0, mem_threshold: float = 1.0
    ) -> list[tuple[str, int]]:
        """List (kind, id) violations; empty iff Eqs. (5)-(7) hold at the thresholds.

        With thresholds at 1.0 this is exactly the hard capacity check; the
        section-IV setting passes 0.8 for CPU and MEM. Bandwidth has no
        threshold, only capacity.
        """
        violations = []
        for s in np.nonzero(self.used_cpu > cpu_threshold * self.cpu_cap)[0]:
            violations.append((CPU, int(s)))
        for s in np.nonzero(self.used_mem > mem_threshold * self.mem_cap)[0]:
            violations.append((MEM, int(s)))
        for l in np.nonzero(self.used_bw_mbps > self.bw_cap_mbps)[0]:
            violations.append((BW, int(l)))
        return violations

    def to_json(self) -> str:
        """Debug/export snapshot: placements, routes, usage, activation flags."""
        import json

        return json.dumps(
            {
                "placements": {str(k): v for k, v in sorted(self.placements.items())},
                "routes": {
                    f"{fg_id}:{seg}": list(links)
                    for (fg_id, seg), links in sorted(self.routes.items())
                },
                "used_cpu": self.used_cpu.tolist(),
                "used_mem": self.used_mem.tolist(),
                "used_bw_mbps": self.used_bw_mbps.tolist(),
                "server_active": self.server_active().tolist(),
                "link_active": self.link_active().tolist(),
                "prev_active": self.prev_active.tolist(),
            },
            indent=2,
        )

    def digest(self) -> str:
        """Stable hash of the full state, for revert-exactness checks."""
        h = hashlib.md5()
        h.update(self.used_cpu.tobytes())
        h.update(self.used_mem.tobytes())
        h.update(self.used_bw_mbps.tobytes())
        h.update(self.host_count.tobytes())
        h.update(self.link_count.tobytes())
        h.update(self.prev_active.tobytes())
        h.update(repr(sorted((k, tuple(v)) for k, v in self.placements.items())).encode())
        h.update(repr(sorted(self.routes.items())).encode())
        return h.hexdigest()
