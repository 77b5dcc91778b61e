"""The two non-learning comparison policies: threshold-triggered and random."""

import numpy as np

from .orchestrator import MigrationCommand, MigrationPolicy, World
from .workload import VnfFg


def threshold_policy(
    world: World, fg: VnfFg, cpu_threshold: float = 0.8, mem_threshold: float = 0.8
) -> MigrationCommand:
    """Move the largest-CPU VNF off an over-threshold host to the least-loaded server.

    No-op when none of fg's hosts exceeds a utilization threshold or when no
    alternative server could take the VNF within the thresholds (such a move
    would only be reverted). Ties break toward the lowest server id.
    """
    state = world.state
    placed = state.placements.get(fg.id)
    if placed is None:
        return MigrationCommand.noop()

    overloaded = [
        (v, s)
        for v, s in enumerate(placed)
        if s is not None
        and (
            state.cpu_utilization(s) > cpu_threshold
            or state.mem_utilization(s) > mem_threshold
        )
    ]
    if not overloaded:
        return MigrationCommand.noop()
    v, src = max(overloaded, key=lambda vs: (fg.vnfs[vs[0]].cpu_demand, -vs[0]))
    vnf = fg.vnfs[v]

    best = None
    for s in range(world.topo.n_servers):
        if s == src:
            continue
        if not world.fits_thresholds(s, vnf.cpu_demand, vnf.mem_demand):
            continue
        key = (state.cpu_utilization(s), s)
        if best is None or key < best[0]:
            best = (key, s)
    if best is None:
        return MigrationCommand.noop()
    return MigrationCommand(fg_id=fg.id, vnf=v, dest=best[1])


def random_policy(
    world: World, fg: VnfFg, rng: np.random.Generator, p_mig: float = 0.5
) -> MigrationCommand:
    """With probability p_mig move a uniformly random VNF to a uniformly random server."""
    if rng.random() >= p_mig:
        return MigrationCommand.noop()
    v = int(rng.integers(fg.length))
    dest = int(rng.integers(world.topo.n_servers))
    return MigrationCommand(fg_id=fg.id, vnf=v, dest=dest)


class ThresholdPolicy(MigrationPolicy):
    def __init__(self, cpu_threshold: float = 0.8, mem_threshold: float = 0.8):
        self.cpu_threshold = cpu_threshold
        self.mem_threshold = mem_threshold

    def decide(self, world, fg):
        return threshold_policy(world, fg, self.cpu_threshold, self.mem_threshold)


class RandomPolicy(MigrationPolicy):
    def __init__(self, rng: np.random.Generator, p_mig: float = 0.5):
        self.rng = rng
        self.p_mig = p_mig

    def decide(self, world, fg):
        return random_policy(world, fg, self.rng, self.p_mig)
