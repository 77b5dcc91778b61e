"""MDP surface: the eight-component state vector, the discrete action space,
and the sigmoid reward.

State layout (dimension 6*n_servers + 3*p, everything in [0, 1]):
  previous-step activation flags | hosting flags | CPU utilizations |
  MEM utilizations | energy / eps_max | processing delay / deadline |
  per-VNF hosting-server index / n_servers | per-VNF (cpu, mem) demand fractions
"""

import math

import numpy as np

from .orchestrator import MigrationCommand, MigrationOutcome
from .perf import PerfParams
from .state import NetworkState
from .topology import Topology
from .workload import VnfFg

REVERT_REWARD = -0.5  # sigm(0) - 1: infeasible actions sit strictly below neutral


def state_dim(n_servers: int, chain_len: int) -> int:
    return 6 * n_servers + 3 * chain_len


def n_actions(n_servers: int, chain_len: int) -> int:
    return chain_len * n_servers + 1


def encode_state(
    state: NetworkState,
    topo: Topology,
    fg: VnfFg,
    params: PerfParams,
    cpu_demand_max: int = 20,
    mem_demand_max: int = 4,
) -> np.ndarray:
    """Deterministic feature vector for one focal FG against the shared network."""
    n = topo.n_servers
    active = state.host_count > 0
    cpu_util = state.used_cpu / state.cpu_cap
    mem_util = state.used_mem / state.mem_cap
    energy = np.where(active, params.eps_base + params.eps_cons * cpu_util, 0.0)
    energy /= params.eps_max
    with np.errstate(divide="ignore"):
        proc = np.where(cpu_util < 1.0, cpu_util * params.tau_ms / (1.0 - cpu_util), np.inf)
    proc = np.minimum(proc, fg.deadline_ms) / fg.deadline_ms

    hosts = np.zeros(fg.length)
    placed = state.placements.get(fg.id)
    if placed is not None:
        for v, s in enumerate(placed):
            if s is not None:
                hosts[v] = s / n
    demands = np.empty(2 * fg.length)
    for v, vnf in enumerate(fg.vnfs):
        demands[2 * v] = vnf.cpu_demand / cpu_demand_max
        demands[2 * v + 1] = vnf.mem_demand / mem_demand_max

    vec = np.concatenate(
        [
            state.prev_active.astype(float),
            active.astype(float),
            cpu_util,
            mem_util,
            energy,
            proc,
            hosts,
            demands,
        ]
    )
    return np.clip(vec, 0.0, 1.0)


def decode_action(a: int, fg: VnfFg, n_servers: int) -> MigrationCommand:
    """Inverse of the action encoding: a = vnf * n_servers + server; last index = no-op."""
    total = n_actions(n_servers, fg.length)
    if not (0 <= a < total):
        raise ValueError(f"action {a} out of range [0, {total})")
    if a == total - 1:
        return MigrationCommand.noop()
    return MigrationCommand(fg_id=fg.id, vnf=a // n_servers, dest=a % n_servers)


def encode_action(cmd: MigrationCommand, fg: VnfFg, n_servers: int) -> int:
    if cmd.is_noop:
        return fg.length * n_servers
    return cmd.vnf * n_servers + cmd.dest


def sigm(x: float) -> float:
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


def reward(outcome: MigrationOutcome) -> float:
    """Eq.-(22) reward: sigm(lambda) for applied moves, sigm(0)-1 for reverts."""
    if outcome.applied:
        return sigm(outcome.lam)
    return REVERT_REWARD
