"""VNF-FG request generation (Poisson-like arrivals) and service status."""

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError
from .topology import MBPS_PER_GBPS


@dataclass
class DemandConfig:
    """Per-VNF and per-logical-link demand ranges (section-IV defaults)."""

    cpu_range: tuple[int, int] = (1, 20)
    mem_range: tuple[int, int] = (1, 4)
    bw_range_gbps: tuple[float, float] = (0.1, 0.5)
    mean_service_steps: float = 100.0
    packet_rate: float = 100.0  # packets/s
    deadline_ms: float = 20.0

    def validate(self):
        for lo, hi in (self.cpu_range, self.mem_range):
            if lo < 1 or hi < lo:
                raise ConfigurationError(f"bad demand range ({lo}, {hi})")
        lo, hi = self.bw_range_gbps
        if lo <= 0 or hi < lo:
            raise ConfigurationError(f"bad bandwidth range ({lo}, {hi})")
        if self.mean_service_steps < 1:
            raise ConfigurationError("mean service time must be >= 1 step")
        if self.packet_rate <= 0 or self.deadline_ms <= 0:
            raise ConfigurationError("packet rate and deadline must be positive")


@dataclass
class Vnf:
    fg_id: int
    position: int
    cpu_demand: int
    mem_demand: int


@dataclass
class VnfFg:
    """One service request: an ordered VNF chain plus its logical links.

    service_time is reset to 0 by the orchestrator when deployment is
    rejected, which makes the request permanently inactive (Eq.-(8) style
    status).
    """

    id: int
    vnfs: list[Vnf]
    bw_demands_mbps: list[int]  # one per consecutive-VNF logical link
    arrival: int
    service_time: int
    packet_rate: float
    deadline_ms: float
    rejected: bool = field(default=False)

    @property
    def length(self) -> int:
        return len(self.vnfs)

    @property
    def n_segments(self) -> int:
        return len(self.bw_demands_mbps)


def generate_requests(
    count: int,
    rate: float,
    chain_len: int,
    seed: int,
    ranges: DemandConfig | None = None,
) -> list[VnfFg]:
    """Draw `count` VNF-FG requests with geometric inter-arrival gaps (mean 1/rate).

    Gaps live on {1, 2, ...} (a Bernoulli arrival process), so arrivals are
    strictly increasing; rate=1.0 therefore means one arrival every step.
    Demands: CPU ~ U{cpu_range}, MEM ~ U{mem_range} per VNF; bandwidth per
    logical link uniform in bw_range (stored as integer Mbps); service time
    geometric with the configured mean. Deterministic per seed.
    """
    if count < 1:
        raise ConfigurationError("count must be >= 1")
    if not (0.0 < rate <= 1.0):
        raise ConfigurationError(f"rate must be in (0, 1], got {rate}")
    if chain_len < 1:
        raise ConfigurationError("chain_len must be >= 1")
    ranges = ranges or DemandConfig()
    ranges.validate()

    rng = np.random.default_rng(seed)
    gaps = rng.geometric(rate, size=count)
    arrivals = np.cumsum(gaps) - 1

    cpu_lo, cpu_hi = ranges.cpu_range
    mem_lo, mem_hi = ranges.mem_range
    bw_lo = int(round(ranges.bw_range_gbps[0] * MBPS_PER_GBPS))
    bw_hi = int(round(ranges.bw_range_gbps[1] * MBPS_PER_GBPS))

    requests = []
    for r in range(count):
        vnfs = [
            Vnf(
                fg_id=r,
                position=v,
                cpu_demand=int(rng.integers(cpu_lo, cpu_hi + 1)),
                mem_demand=int(rng.integers(mem_lo, mem_hi + 1)),
            )
            for v in range(chain_len)
        ]
        bw = [int(rng.integers(bw_lo, bw_hi + 1)) for _ in range(chain_len - 1)]
        service = int(rng.geometric(1.0 / ranges.mean_service_steps))
        requests.append(
            VnfFg(
                id=r,
                vnfs=vnfs,
                bw_demands_mbps=bw,
                arrival=int(arrivals[r]),
                service_time=service,
                packet_rate=ranges.packet_rate,
                deadline_ms=ranges.deadline_ms,
            )
        )
    return requests


def service_status(fg: VnfFg, t: int) -> int:
    """Eq.-(8) status: 1 iff arrival <= t < arrival + service_time."""
    if t < 0:
        raise ValueError("time step must be non-negative")
    return 1 if fg.arrival <= t < fg.arrival + fg.service_time else 0


def requests_to_json(requests: list[VnfFg]) -> str:
    doc = [
        {
            "id": fg.id,
            "arrival": fg.arrival,
            "service_time": fg.service_time,
            "packet_rate": fg.packet_rate,
            "deadline_ms": fg.deadline_ms,
            "cpu_demands": [v.cpu_demand for v in fg.vnfs],
            "mem_demands": [v.mem_demand for v in fg.vnfs],
            "bw_demands_gbps": [b / MBPS_PER_GBPS for b in fg.bw_demands_mbps],
        }
        for fg in requests
    ]
    return json.dumps(doc, indent=2)


def requests_from_json(text: str) -> list[VnfFg]:
    doc = json.loads(text)
    requests = []
    for rec in doc:
        vnfs = [
            Vnf(fg_id=rec["id"], position=v, cpu_demand=c, mem_demand=m)
            for v, (c, m) in enumerate(zip(rec["cpu_demands"], rec["mem_demands"]))
        ]
        requests.append(
            VnfFg(
                id=rec["id"],
                vnfs=vnfs,
                bw_demands_mbps=[
                    int(round(b * MBPS_PER_GBPS)) for b in rec["bw_demands_gbps"]
                ],
                arrival=rec["arrival"],
                service_time=rec["service_time"],
                packet_rate=rec["packet_rate"],
                deadline_ms=rec["deadline_ms"],
            )
        )
    return requests
