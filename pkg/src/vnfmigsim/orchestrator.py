"""Per-step simulation driver: expiry, first-fit deployment, gated migration.

The per-step procedure is: remove timed-out FGs, deploy the step's arrivals,
ask the policy for one migration decision per active FG (executing each under
the C1/C2 gates with exact rollback), then refresh the activation snapshot.
"""

from dataclasses import dataclass, field

from .errors import CommandError, InfeasiblePlacementError, SaturationError
from .perf import (
    PerfParams,
    e2e_delay,
    lambda_composite,
    network_energy,
    steady_energy,
)
from .state import NetworkState
from .topology import EDGE, Topology, shortest_feasible_path
from .workload import VnfFg, service_status


@dataclass(frozen=True)
class MigrationCommand:
    """Move VNF `vnf` of FG `fg_id` to server `dest`; all-None is a no-op."""

    fg_id: int | None = None
    vnf: int | None = None
    dest: int | None = None

    @property
    def is_noop(self) -> bool:
        return self.fg_id is None

    @classmethod
    def noop(cls) -> "MigrationCommand":
        return cls()


@dataclass(frozen=True)
class MigrationOutcome:
    applied: bool
    delta: float = 0.0  # E2E delay reduction, ms
    eta: float = 0.0  # energy reduction
    lam: float = 0.0  # Eq.-(16) composite
    reason: str | None = None  # revert reason for applied=False

    @property
    def constraint(self) -> str | None:
        if self.applied:
            return None
        return "C2" if self.reason == "delay" else "C1"


APPLIED_NOOP = MigrationOutcome(applied=True)


class MigrationPolicy:
    """Decision interface consulted once per active FG per step."""

    def decide(self, world: "World", fg: VnfFg) -> MigrationCommand:
        raise NotImplementedError

    def observe(self, world, fg, cmd, outcome):  # post-execution hook
        pass

    def after_step(self, world, report):
        pass

    def after_episode(self, world):
        pass


class NoopPolicy(MigrationPolicy):
    def decide(self, world, fg):
        return MigrationCommand.noop()


@dataclass
class StepReport:
    t: int
    active: int = 0
    arrivals: int = 0
    accepts: int = 0
    rejects: int = 0
    energy: float = 0.0
    delay_sum_ms: float = 0.0
    delay_count: int = 0
    migrations: int = 0
    reverts: int = 0
    noops: int = 0
    outcomes: list = field(default_factory=list)


class World:
    """One simulation instance; single-threaded, deterministic given its inputs."""

    def __init__(
        self,
        topo: Topology,
        fgs: list[VnfFg],
        params: PerfParams | None = None,
        cpu_threshold: float = 0.8,
        mem_threshold: float = 0.8,
        event_sink=None,
    ):
        self.topo = topo
        self.params = params or PerfParams()
        self.cpu_threshold = cpu_threshold
        self.mem_threshold = mem_threshold
        self.state = NetworkState.fresh(topo)
        self.fgs = {fg.id: fg for fg in fgs}
        self.arrivals_by_t = {}
        for fg in fgs:
            self.arrivals_by_t.setdefault(fg.arrival, []).append(fg.id)
        self.last_arrival = max((fg.arrival for fg in fgs), default=-1)
        self.active_ids = set()
        self.delay_cache = {}  # fg id -> total E2E delay ms
        self.event_sink = event_sink

    # -- helpers ---------------------------------------------------------------

    def _emit(self, record: dict):
        if self.event_sink is not None:
            self.event_sink(record)

    def _fg_delay(self, fg: VnfFg) -> float:
        return e2e_delay(self.state, self.topo, fg, self.params).total_ms

    def _fgs_on_servers(self, servers) -> set:
        """Active FGs with at least one VNF on any of the given servers."""
        servers = set(servers)
        hit = set()
        for fg_id in self.active_ids:
            placed = self.state.placements.get(fg_id)
            if placed and any(s in servers for s in placed):
                hit.add(fg_id)
        return hit

    def _refresh_delays(self, fg_ids) -> bool:
        """Recompute cached delays; False if any FG violates C2 or saturates."""
        updates = {}
        for fg_id in fg_ids:
            fg = self.fgs[fg_id]
            try:
                total = self._fg_delay(fg)
            except SaturationError:
                return False
            if total > fg.deadline_ms:
                return False
            updates[fg_id] = total
        self.delay_cache.update(updates)
        return True

    def total_delay(self) -> float:
        return sum(self.delay_cache[i] for i in sorted(self.active_ids))

    def fits_thresholds(self, s: int, cpu_extra: int, mem_extra: int) -> bool:
        st = self.state
        return (
            st.used_cpu[s] + cpu_extra <= self.cpu_threshold * st.cpu_cap[s]
            and st.used_mem[s] + mem_extra <= self.mem_threshold * st.mem_cap[s]
        )

    # -- stage 1: expiry ---------------------------------------------------------

    def expire_timeouts(self, t: int):
        for fg_id in sorted(self.active_ids):
            fg = self.fgs[fg_id]
            if service_status(fg, t) == 0:
                self.state.remove_fg(fg)
                self.active_ids.discard(fg_id)
                self.delay_cache.pop(fg_id, None)
                self._emit({"event": "expire", "t": t, "fg": fg_id})

    # -- stage 2: deployment -------------------------------------------------------

    def deploy_fg(self, fg: VnfFg) -> bool:
        """First-fit chain deployment; True on accept, False (state untouched) on reject.

        Per VNF, feasible servers are tried edge tier first, ordered by
        current CPU utilization (ties by id); a candidate is kept only if the
        incoming logical link can also be routed. After the whole chain is
        mapped, C2 is verified for the new FG and every FG sharing its
        servers; any failure rolls everything back.
        """
        state = self.state
        placed_ops = []  # (vnf index, seg routed or None)
        prev_host = None
        ok = True
        for v, vnf in enumerate(fg.vnfs):
            order = sorted(
                range(self.topo.n_servers),
                key=lambda s: (
                    self.topo.servers[s].tier != EDGE,
                    state.cpu_utilization(s),
                    s,
                ),
            )
            chosen = None
            for s in order:
                if not self.fits_thresholds(s, vnf.cpu_demand, vnf.mem_demand):
                    continue
                route = None
                if v > 0:
                    route = shortest_feasible_path(
                        self.topo,
                        prev_host,
                        s,
                        fg.bw_demands_mbps[v - 1],
                        state.residual_bw_mbps(),
                    )
                    if route is None:
                        continue
                state.apply_placement(fg, v, s)
                if v > 0:
                    state.apply_route(fg, v - 1, route)
                chosen = s
                placed_ops.append(v)
                break
            if chosen is None:
                ok = False
                break
            prev_host = chosen

        if ok:
            affected = self._fgs_on_servers(state.placements[fg.id]) | {fg.id}
            self.active_ids.add(fg.id)
            if not self._refresh_delays(affected):
                self.active_ids.discard(fg.id)
                ok = False
        if not ok:
            state.remove_fg(fg)
            # delay_cache entries of other FGs were only updated on success
            return False
        return True

    # -- stage 3: migration --------------------------------------------------------

    def execute_migration(self, cmd: MigrationCommand, t: int) -> MigrationOutcome:
        """Tentatively apply cmd under C1 (capacity+thresholds) and C2 (deadline).

        Commits and returns the delay/energy/composite gains on success;
        otherwise restores the state exactly and reports the revert reason.
        """
        if cmd.is_noop:
            return APPLIED_NOOP
        fg = self.fgs.get(cmd.fg_id)
        if fg is None or cmd.fg_id not in self.active_ids:
            raise CommandError(f"FG {cmd.fg_id} is not active")
        if not (0 <= cmd.vnf < fg.length):
            raise CommandError(f"FG {cmd.fg_id} has no VNF {cmd.vnf}")
        if not (0 <= cmd.dest < self.topo.n_servers):
            raise CommandError(f"no server {cmd.dest}")

        state = self.state
        src = state.host_of(fg.id, cmd.vnf)
        if cmd.dest == src:
            # moving onto the current host changes nothing: no flag flips,
            # so the energy term is zero as well
            if self.event_sink is not None:
                upsilon = self.total_delay()
                energy = steady_energy(state, self.params)
                self._emit(
                    {
                        "event": "migrate",
                        "t": t,
                        "fg": fg.id,
                        "vnf": cmd.vnf,
                        "src": src,
                        "dest": cmd.dest,
                        "applied": True,
                        "delta": 0.0,
                        "eta": 0.0,
                        "lam": 0.0,
                        "upsilon_before": upsilon,
                        "upsilon_after": upsilon,
                        "energy_before": energy,
                        "energy_after": energy,
                    }
                )
            return APPLIED_NOOP

        upsilon_before = self.total_delay()
        energy_before = steady_energy(state, self.params)
        active_before = state.server_active()

        segs = [s for s in (cmd.vnf - 1, cmd.vnf) if 0 <= s < fg.n_segments]
        old_routes = {}
        placed = False
        new_segs = []
        reason = None
        try:
            for seg in segs:
                old_routes[seg] = state.remove_route(fg, seg)
            state.remove_placement(fg, cmd.vnf)
            try:
                state.apply_placement(fg, cmd.vnf, cmd.dest)
            except InfeasiblePlacementError:
                reason = "capacity"
                raise
            placed = True
            hosts = state.placements[fg.id]
            for seg in segs:
                route = shortest_feasible_path(
                    self.topo,
                    hosts[seg],
                    hosts[seg + 1],
                    fg.bw_demands_mbps[seg],
                    state.residual_bw_mbps(),
                )
                if route is None:
                    reason = "route"
                    raise InfeasiblePlacementError("no feasible route")
                state.apply_route(fg, seg, route)
                new_segs.append(seg)
            if state.check_constraints(
                self.topo, self.cpu_threshold, self.mem_threshold
            ):
                reason = "threshold"
                raise InfeasiblePlacementError("utilization threshold exceeded")
            affected = self._fgs_on_servers({src, cmd.dest}) | {fg.id}
            if not self._refresh_delays(affected):
                reason = "delay"
                raise InfeasiblePlacementError("deadline exceeded")
        except InfeasiblePlacementError:
            for seg in reversed(new_segs):
                state.remove_route(fg, seg)
            if placed:
                state.remove_placement(fg, cmd.vnf)
            state.apply_placement(fg, cmd.vnf, src, enforce=False)
            for seg in segs:
                state.apply_route(fg, seg, old_routes[seg], enforce=False)
            return MigrationOutcome(applied=False, reason=reason)

        upsilon_after = self.total_delay()
        active_after = state.server_active()
        flips = int(active_before[src] != active_after[src]) + int(
            active_before[cmd.dest] != active_after[cmd.dest]
        )
        energy_after = steady_energy(state, self.params) + self.params.eps_trans * flips
        delta = upsilon_before - upsilon_after
        eta = energy_before - energy_after
        lam = lambda_composite(delta, eta, self.params, upsilon_before, energy_before)
        self._emit(
            {
                "event": "migrate",
                "t": t,
                "fg": fg.id,
                "vnf": cmd.vnf,
                "src": src,
                "dest": cmd.dest,
                "applied": True,
                "delta": delta,
                "eta": eta,
                "lam": lam,
                "upsilon_before": upsilon_before,
                "upsilon_after": upsilon_after,
                "energy_before": energy_before,
                "energy_after": energy_after,
            }
        )
        return MigrationOutcome(applied=True, delta=delta, eta=eta, lam=lam)

    # -- full step -------------------------------------------------------------------

    def step(self, t: int, policy: MigrationPolicy) -> StepReport:
        report = StepReport(t=t)
        self.expire_timeouts(t)

        for fg_id in self.arrivals_by_t.get(t, []):
            fg = self.fgs[fg_id]
            report.arrivals += 1
            accepted = self.deploy_fg(fg)
            if accepted:
                report.accepts += 1
            else:
                fg.service_time = 0
                fg.rejected = True
                report.rejects += 1
            self._emit(
                {
                    "event": "deploy",
                    "t": t,
                    "fg": fg_id,
                    "accepted": accepted,
                    "delay_ms": self.delay_cache.get(fg_id),
                }
            )

        for fg_id in sorted(self.active_ids):
            fg = self.fgs[fg_id]
            cmd = policy.decide(self, fg)
            outcome = self.execute_migration(cmd, t)
            if cmd.is_noop:
                report.noops += 1
            elif outcome.applied:
                report.migrations += 1
            else:
                report.reverts += 1
                self._emit(
                    {
                        "event": "migrate",
                        "t": t,
                        "fg": fg_id,
                        "vnf": cmd.vnf,
                        "dest": cmd.dest,
                        "applied": False,
                        "reason": outcome.reason,
                    }
                )
            report.outcomes.append(outcome)
            policy.observe(self, fg, cmd, outcome)

        report.active = len(self.active_ids)
        report.energy = network_energy(self.state, self.params).total
        report.delay_sum_ms = self.total_delay()
        report.delay_count = len(self.active_ids)
        self.state.snapshot_activation()
        self._emit(
            {
                "event": "step",
                "t": t,
                "active": report.active,
                "arrivals": report.arrivals,
                "accepts": report.accepts,
                "rejects": report.rejects,
                "energy": report.energy,
                "delay_sum_ms": report.delay_sum_ms,
                "delay_count": report.delay_count,
                "migrations": report.migrations,
                "reverts": report.reverts,
                "noops": report.noops,
            }
        )
        return report

    def done(self, t: int) -> bool:
        return t > self.last_arrival and not self.active_ids
