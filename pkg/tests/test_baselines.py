import numpy as np

from vnfmigsim.baselines import random_policy, threshold_policy
from vnfmigsim.orchestrator import World
from vnfmigsim.perf import PerfParams

from conftest import make_fg, make_topology


def build_world(caps, links, fgs, thresholds=0.8):
    topo = make_topology(caps, links, n_edge=1)
    return World(topo, fgs, PerfParams(), thresholds, thresholds)


def test_threshold_noop_below_thresholds():
    fg = make_fg(cpu=(10, 10), mem=(2, 2), bw_mbps=(100,))
    world = build_world([(40, 16), (200, 64)], [(0, 1)], [fg])
    assert world.deploy_fg(fg)
    world.active_ids.add(fg.id)
    assert threshold_policy(world, fg).is_noop


def test_threshold_targets_least_loaded_feasible_server():
    # server 0 pushed past 80% CPU; the argmin oracle scans every server
    fg = make_fg(fg_id=0, cpu=(20, 4), mem=(2, 2), bw_mbps=(100,))
    filler = make_fg(fg_id=1, cpu=(15,), mem=(2,))
    load2 = make_fg(fg_id=2, cpu=(30,), mem=(4,))
    world = build_world(
        [(40, 16), (200, 64), (200, 64), (200, 64)],
        [(0, 1), (1, 2), (2, 3)],
        [fg, filler, load2],
    )
    state = world.state
    state.apply_placement(fg, 0, 0)
    state.apply_placement(fg, 1, 1)
    state.apply_route(fg, 0, [0])
    state.apply_placement(filler, 0, 0)  # server 0 at (20+15)/40 = 87.5%
    state.apply_placement(load2, 0, 2)  # server 2 at 15%
    world.active_ids.update({0, 1, 2})
    cmd = threshold_policy(world, fg)
    assert not cmd.is_noop
    assert cmd.vnf == 0  # the largest-CPU VNF of fg on an overloaded server
    # oracle: lowest CPU utilization among feasible servers != 0
    utils = {
        s: state.cpu_utilization(s)
        for s in range(world.topo.n_servers)
        if s != 0 and world.fits_thresholds(s, 20, 2)
    }
    expected = min(utils, key=lambda s: (utils[s], s))
    assert cmd.dest == expected


def test_threshold_noop_when_no_feasible_destination():
    fg = make_fg(cpu=(20,), mem=(2,))
    filler = make_fg(fg_id=1, cpu=(15,), mem=(2,))
    blocker = make_fg(fg_id=2, cpu=(30,), mem=(14,))
    world = build_world([(40, 16), (40, 16)], [(0, 1)], [fg, filler, blocker])
    state = world.state
    state.apply_placement(fg, 0, 0)
    state.apply_placement(filler, 0, 0)  # 87.5% on server 0
    state.apply_placement(blocker, 0, 1, enforce=False)  # server 1 cannot take more
    world.active_ids.update({0, 1, 2})
    assert threshold_policy(world, fg).is_noop


def test_random_policy_probability_extremes():
    fg = make_fg(cpu=(5, 5), mem=(1, 1), bw_mbps=(100,))
    world = build_world([(40, 16)], [], [fg])
    rng = np.random.default_rng(1)
    assert all(random_policy(world, fg, rng, p_mig=0.0).is_noop for _ in range(100))
    for _ in range(50):
        cmd = random_policy(world, fg, rng, p_mig=1.0)
        assert not cmd.is_noop
        assert cmd.dest == 0  # single server


def test_random_policy_histogram_uniform():
    # frequency oracle: chi^2 over (vnf, server) cells
    fg = make_fg(cpu=(5, 5), mem=(1, 1), bw_mbps=(100,))
    world = build_world([(40, 16), (40, 16), (40, 16)], [(0, 1), (1, 2)], [fg])
    rng = np.random.default_rng(7)
    counts = np.zeros((2, 3))
    n = 10_000
    for _ in range(n):
        cmd = random_policy(world, fg, rng, p_mig=1.0)
        counts[cmd.vnf, cmd.dest] += 1
    expected = n / 6
    chi2 = float(((counts - expected) ** 2 / expected).sum())
    # 5 dof, 99.9% quantile is 20.5
    assert chi2 < 20.5


def test_policies_are_replayable_given_rng():
    fg = make_fg(cpu=(5, 5), mem=(1, 1), bw_mbps=(100,))
    world = build_world([(40, 16), (40, 16)], [(0, 1)], [fg])
    cmds1 = [random_policy(world, fg, np.random.default_rng(3)) for _ in range(1)]
    cmds2 = [random_policy(world, fg, np.random.default_rng(3)) for _ in range(1)]
    assert cmds1 == cmds2
