import numpy as np
import pytest

from vnfmigsim.errors import ConfigurationError
from vnfmigsim.workload import (
    DemandConfig,
    generate_requests,
    requests_from_json,
    requests_to_json,
    service_status,
)

from conftest import make_fg


def test_paper_scale_generation():
    fgs = generate_requests(300, 0.2, 4, seed=1)
    assert len(fgs) == 300
    assert all(fg.length == 4 for fg in fgs)
    assert all(fg.n_segments == 3 for fg in fgs)


def test_demand_ranges_default():
    fgs = generate_requests(200, 0.2, 4, seed=2)
    for fg in fgs:
        for v in fg.vnfs:
            assert 1 <= v.cpu_demand <= 20
            assert 1 <= v.mem_demand <= 4
        for bw in fg.bw_demands_mbps:
            assert 100 <= bw <= 500
        assert fg.service_time >= 1
        assert fg.packet_rate == 100.0
        assert fg.deadline_ms == 20.0


def test_arrivals_nondecreasing_and_deterministic():
    a = generate_requests(100, 0.3, 3, seed=5)
    b = generate_requests(100, 0.3, 3, seed=5)
    assert [fg.arrival for fg in a] == [fg.arrival for fg in b]
    arrivals = [fg.arrival for fg in a]
    assert arrivals == sorted(arrivals)
    assert arrivals[0] >= 0


def test_rate_one_means_every_step():
    fgs = generate_requests(50, 1.0, 2, seed=7)
    assert [fg.arrival for fg in fgs] == list(range(50))


def test_mean_interarrival_close_to_inverse_rate():
    # sample-mean oracle over 10^4 gaps
    fgs = generate_requests(10_000, 0.2, 1, seed=11)
    arrivals = np.array([fg.arrival for fg in fgs])
    gaps = np.diff(arrivals)
    assert abs(gaps.mean() - 5.0) / 5.0 < 0.05
    fgs = generate_requests(10_000, 1.0, 1, seed=11)
    gaps = np.diff([fg.arrival for fg in fgs])
    assert abs(np.mean(gaps) - 1.0) < 0.05


def test_chain_len_one_has_no_logical_links():
    fgs = generate_requests(5, 0.5, 1, seed=3)
    assert all(fg.n_segments == 0 for fg in fgs)


def test_config_validation():
    with pytest.raises(ConfigurationError):
        generate_requests(0, 0.2, 4, seed=1)
    with pytest.raises(ConfigurationError):
        generate_requests(10, 0.0, 4, seed=1)
    with pytest.raises(ConfigurationError):
        generate_requests(10, 1.5, 4, seed=1)
    with pytest.raises(ConfigurationError):
        generate_requests(10, 0.2, 0, seed=1)
    with pytest.raises(ConfigurationError):
        generate_requests(10, 0.2, 4, seed=1, ranges=DemandConfig(cpu_range=(5, 2)))


def test_status_before_arrival_is_zero():
    fg = make_fg(arrival=10, service=5)
    assert service_status(fg, 3) == 0


def test_rejected_fg_always_inactive():
    fg = make_fg(arrival=2, service=0)
    assert all(service_status(fg, t) == 0 for t in range(20))


def test_status_window_scan():
    # direct scan oracle: active exactly for t in {5, 6, 7}
    fg = make_fg(arrival=5, service=3)
    observed = [t for t in range(11) if service_status(fg, t) == 1]
    assert observed == [5, 6, 7]


def test_json_round_trip():
    fgs = generate_requests(20, 0.4, 4, seed=13)
    clone = requests_from_json(requests_to_json(fgs))
    assert requests_to_json(clone) == requests_to_json(fgs)
    assert [fg.arrival for fg in clone] == [fg.arrival for fg in fgs]
    assert [fg.bw_demands_mbps for fg in clone] == [fg.bw_demands_mbps for fg in fgs]
