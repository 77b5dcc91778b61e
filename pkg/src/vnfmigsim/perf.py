"""Delay and energy models plus the migration-gain composite.

Transmission delay is per-packet (packet_size / bandwidth), propagation comes
from the topology, processing delay is the M/M/1-style Gamma*tau/(1-Gamma)
form, and server energy is baseline + proportional + transition terms.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import IncompleteMappingError, SaturationError
from .state import NetworkState
from .topology import Link, Topology
from .workload import VnfFg


@dataclass
class PerfParams:
    tau_ms: float = 1.0  # baseline per-packet processing delay
    packet_bytes: int = 1500
    eps_base: float = 10.0
    eps_max: float = 110.0
    eps_trans: float = 2.0
    tau1: float = 0.5  # delay weight in the composite
    tau2: float = 0.5  # energy weight in the composite
    normalize: bool = True
    gain: float = 1.0  # scales the normalized fractions (see NormConfig notes)

    @property
    def eps_cons(self) -> float:
        return self.eps_max - self.eps_base

    @property
    def packet_bits(self) -> int:
        return self.packet_bytes * 8


@dataclass
class DelayBreakdown:
    trans_ms: float = 0.0
    prop_ms: float = 0.0
    proc_ms: float = 0.0

    @property
    def total_ms(self) -> float:
        return self.trans_ms + self.prop_ms + self.proc_ms


@dataclass
class EnergyReport:
    per_server: np.ndarray
    total: float


def link_delay(link: Link, params: PerfParams) -> tuple[float, float]:
    """(transmission, propagation) delay in ms for one packet on this link."""
    trans_ms = params.packet_bits / (link.bandwidth_gbps * 1e9) * 1e3
    return trans_ms, link.prop_delay_ms


def proc_delay(state: NetworkState, s: int, params: PerfParams) -> float:
    """Processing delay Gamma*tau/(1-Gamma) in ms; saturated servers are an error."""
    util = state.cpu_utilization(s)
    if util >= 1.0:
        raise SaturationError(f"server {s} CPU utilization {util:.3f} >= 1")
    return util * params.tau_ms / (1.0 - util)


def e2e_delay(
    state: NetworkState, topo: Topology, fg: VnfFg, params: PerfParams
) -> DelayBreakdown:
    """Total end-to-end delay of fg: routed link terms plus one processing term per VNF."""
    placed = state.placements.get(fg.id)
    if placed is None or any(s is None for s in placed):
        raise IncompleteMappingError(f"FG {fg.id} is not fully placed")
    out = DelayBreakdown()
    for seg in range(fg.n_segments):
        key = (fg.id, seg)
        if key not in state.routes:
            raise IncompleteMappingError(f"segment {seg} of FG {fg.id} is not routed")
        for l in state.routes[key]:
            trans, prop = link_delay(topo.links[l], params)
            out.trans_ms += trans
            out.prop_ms += prop
    for s in placed:
        out.proc_ms += proc_delay(state, s, params)
    return out


def server_energy(
    state: NetworkState, s: int, params: PerfParams, transitioned: bool | None = None
) -> float:
    """Eq.-(13) energy of server s for the current step.

    Hosting servers draw eps_base + eps_cons*Gamma; eps_trans is added when
    the activation flag differs from the previous step (pass `transitioned`
    to override the prev_active comparison, e.g. for migration what-ifs).
    """
    active = state.host_count[s] > 0
    if transitioned is None:
        transitioned = bool(active) != bool(state.prev_active[s])
    energy = 0.0
    if active:
        energy += params.eps_base + params.eps_cons * state.cpu_utilization(s)
    if transitioned:
        energy += params.eps_trans
    return energy


def network_energy(state: NetworkState, params: PerfParams) -> EnergyReport:
    """Per-server and total energy for the current step (transition included)."""
    per_server = np.array(
        [server_energy(state, s, params) for s in range(len(state.cpu_cap))]
    )
    return EnergyReport(per_server=per_server, total=float(per_server.sum()))


def steady_energy(state: NetworkState, params: PerfParams) -> float:
    """Total hosting energy with no transition terms (the migration baseline)."""
    total = 0.0
    for s in range(len(state.cpu_cap)):
        if state.host_count[s] > 0:
            total += params.eps_base + params.eps_cons * state.cpu_utilization(s)
    return total


def migration_deltas(
    upsilon_before: float,
    upsilon_after: float,
    lambda_before: float,
    lambda_after: float,
) -> tuple[float, float]:
    """Eqs. (14)-(15): (delta, eta) reductions; positive means improvement."""
    return upsilon_before - upsilon_after, lambda_before - lambda_after


def lambda_composite(
    delta: float,
    eta: float,
    params: PerfParams,
    upsilon_before: float = 0.0,
    lambda_before: float = 0.0,
) -> float:
    """Eq.-(16) composite gain tau1*delta^ + tau2*eta^.

    In normalized mode the reductions become fractions of the pre-migration
    totals (times `gain`); raw mode combines the ms / energy-unit values
    directly.
    """
    if params.normalize:
        eps = 1e-9
        delta = params.gain * delta / max(upsilon_before, eps)
        eta = params.gain * eta / max(lambda_before, eps)
    return params.tau1 * delta + params.tau2 * eta


def objective_value(lambdas, horizon: int) -> float:
    """Eq.-(17): time-averaged sum of composite gains over migration events."""
    if horizon <= 0:
        raise ValueError("horizon must be positive")
    return float(sum(lambdas)) / horizon
