"""Experiment driver: configuration, seeding, episode loop, metric aggregation,
policy comparison, and the event-log replay oracle.

A run is fully determined by (config, seed): every random stream is derived
from cfg.seed, and metrics.csv is byte-identical across repeats.
"""

import csv
import dataclasses
import json
import os
from dataclasses import dataclass, field

import numpy as np

from . import mdp
from .a2c import A2CConfig, ActorCritic, select_action, update
from .baselines import RandomPolicy, ThresholdPolicy
from .dt import TwinConfig, TwinTrainer
from .errors import ConfigurationError
from .experience import (
    PHYSICAL_FAIL,
    PHYSICAL_SUCCESS,
    BufferSet,
    Experience,
    sample_dt,
    sample_physical,
)
from .neural import save_checkpoint
from .orchestrator import MigrationPolicy, World
from .perf import PerfParams, objective_value
from .topology import CapacityConfig, Topology, generate_waxman
from .workload import DemandConfig, generate_requests

POLICIES = ("a2c-dt", "a2c-plain", "threshold", "random")

CSV_HEADER = [
    "episode",
    "policy",
    "seed",
    "avg_delay_ms",
    "avg_energy",
    "cum_reward",
    "norm_reward",
    "accept_rate",
    "migrations",
    "reverts",
]


@dataclass
class ExperimentConfig:
    """Every knob of a run; defaults follow the section-IV / Table-I values."""

    # topology
    n_edge: int = 20
    n_core: int = 40
    alpha: float = 0.5
    beta: float = 0.2
    edge_cpu: int = 40
    edge_mem: int = 16
    core_cpu: int = 200
    core_mem: int = 64
    link_bw_gbps: float = 3.5
    prop_delay_min_ms: float = 0.1
    prop_delay_max_ms: float = 1.0
    # workload
    requests: int = 300
    arrival_rate: float = 0.2
    chain_len: int = 4
    cpu_demand_min: int = 1
    cpu_demand_max: int = 20
    mem_demand_min: int = 1
    mem_demand_max: int = 4
    bw_demand_min_gbps: float = 0.1
    bw_demand_max_gbps: float = 0.5
    mean_service_steps: float = 100.0
    packet_rate: float = 100.0
    deadline_ms: float = 20.0
    # delay / energy / composite
    tau_ms: float = 1.0
    packet_bytes: int = 1500
    eps_base: float = 10.0
    eps_max: float = 110.0
    eps_trans: float = 2.0
    tau1: float = 0.5
    tau2: float = 0.5
    normalize_lambda: bool = True
    reward_gain: float = 1.0
    cpu_threshold: float = 0.8
    mem_threshold: float = 0.8
    # learning (Table I)
    buffer_success: int = 4000
    buffer_fail: int = 2000
    buffer_dt: int = 6000
    balance: float = 0.35
    learning_rate: float = 1e-3  # Table I says 0.1; see paper_defaults()
    gamma: float = 0.95
    batch_physical: int = 32
    batch_dt: int = 32
    hidden: tuple = (256, 128, 64)
    tanh_units: int = 64
    entropy_coef: float = 0.01
    grad_clip: float = 5.0
    explore_floor: float = 0.0
    reward_baseline: float = 0.0
    importance_weighting: bool = False
    # actor-loss weight of synthetic samples (their argmax-collapsed action
    # distribution is far off-policy, so the policy gradient may down-weight them)
    dt_actor_weight: float = 1.0
    # per-episode exploration schedule: the excess above the _min values decays
    # by exploration_decay at each episode end
    exploration_decay: float = 1.0
    entropy_min: float = 0.0
    explore_floor_min: float = 0.0
    warmup: int = 500
    update_every: int = 1
    # digital twin
    dt_latent: int = 16
    dt_lstm_hidden: int = 64
    dt_learning_rate: float = 1e-3
    dt_train_steps: int = 200
    dt_batch: int = 32
    dt_k1: float = 1.0
    dt_k2: float = 1.0
    dt_warmup_episodes: int = 0  # episodes before the twin starts generating
    # run control
    policy: str = "a2c-dt"
    episodes: int = 10
    seed: int = 0
    p_mig: float = 0.5
    log_events: bool = True
    collect_experience: bool | None = None  # None: only for a2c policies

    def validate(self):
        if self.policy not in POLICIES:
            raise ConfigurationError(f"unknown policy {self.policy!r}")
        if self.episodes < 1:
            raise ConfigurationError("episodes must be >= 1")
        if self.requests < 1:
            raise ConfigurationError("requests must be >= 1")
        if not (0.0 < self.arrival_rate <= 1.0):
            raise ConfigurationError("arrival_rate must be in (0, 1]")
        if self.chain_len < 1:
            raise ConfigurationError("chain_len must be >= 1")
        if not (0.0 <= self.balance <= 1.0):
            raise ConfigurationError("balance must be in [0, 1]")
        if not (0.0 <= self.gamma < 1.0):
            raise ConfigurationError("gamma must be in [0, 1)")
        if not (0.0 <= self.tau1 <= 1.0 and 0.0 <= self.tau2 <= 1.0):
            raise ConfigurationError("tau1 and tau2 must be in [0, 1]")
        if not (0.0 < self.cpu_threshold <= 1.0 and 0.0 < self.mem_threshold <= 1.0):
            raise ConfigurationError("utilization thresholds must be in (0, 1]")
        if not (0.0 <= self.p_mig <= 1.0):
            raise ConfigurationError("p_mig must be in [0, 1]")
        if self.update_every < 1 or self.warmup < 0:
            raise ConfigurationError("bad update cadence")
        self.capacity_config().validate()
        self.demand_config().validate()

    # -- sub-config views -------------------------------------------------------

    def capacity_config(self) -> CapacityConfig:
        return CapacityConfig(
            edge_cpu=self.edge_cpu,
            edge_mem=self.edge_mem,
            core_cpu=self.core_cpu,
            core_mem=self.core_mem,
            link_bw_gbps=self.link_bw_gbps,
            prop_delay_range_ms=(self.prop_delay_min_ms, self.prop_delay_max_ms),
        )

    def demand_config(self) -> DemandConfig:
        return DemandConfig(
            cpu_range=(self.cpu_demand_min, self.cpu_demand_max),
            mem_range=(self.mem_demand_min, self.mem_demand_max),
            bw_range_gbps=(self.bw_demand_min_gbps, self.bw_demand_max_gbps),
            mean_service_steps=self.mean_service_steps,
            packet_rate=self.packet_rate,
            deadline_ms=self.deadline_ms,
        )

    def perf_params(self) -> PerfParams:
        return PerfParams(
            tau_ms=self.tau_ms,
            packet_bytes=self.packet_bytes,
            eps_base=self.eps_base,
            eps_max=self.eps_max,
            eps_trans=self.eps_trans,
            tau1=self.tau1,
            tau2=self.tau2,
            normalize=self.normalize_lambda,
            gain=self.reward_gain,
        )

    def a2c_config(self) -> A2CConfig:
        return A2CConfig(
            hidden=tuple(self.hidden),
            tanh_units=self.tanh_units,
            learning_rate=self.learning_rate,
            gamma=self.gamma,
            entropy_coef=self.entropy_coef,
            grad_clip=self.grad_clip,
            explore_floor=self.explore_floor,
            reward_baseline=self.reward_baseline,
        )

    def twin_config(self) -> TwinConfig:
        return TwinConfig(
            latent_dim=self.dt_latent,
            lstm_hidden=self.dt_lstm_hidden,
            learning_rate=self.dt_learning_rate,
            k1=self.dt_k1,
            k2=self.dt_k2,
            grad_clip=self.grad_clip,
            train_steps=self.dt_train_steps,
            batch_size=self.dt_batch,
        )

    # -- (de)serialization --------------------------------------------------------

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["hidden"] = list(self.hidden)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigurationError(f"unknown config fields: {sorted(unknown)}")
        cfg = cls(**d)
        cfg.hidden = tuple(cfg.hidden)
        return cfg

    @classmethod
    def paper_defaults(cls, **overrides) -> "ExperimentConfig":
        """All Table-I values verbatim, including the 0.1 learning rate."""
        cfg = cls(learning_rate=0.1, **overrides)
        return cfg


def make_desk_config(**overrides) -> ExperimentConfig:
    """Desk-scale configuration used by the acceptance suite: 12 servers
    (4 edge / 8 core), 80 FGs per episode, small networks, single-core-friendly."""
    cfg = ExperimentConfig(
        n_edge=4,
        n_core=8,
        requests=80,
        arrival_rate=0.25,
        mean_service_steps=30.0,
        episodes=60,
        learning_rate=1e-3,
        hidden=(48, 48),
        tanh_units=24,
        warmup=400,
        update_every=4,
        dt_train_steps=150,
        reward_gain=12.0,
        log_events=False,
    )
    for k, v in overrides.items():
        setattr(cfg, k, v)
    return cfg


@dataclass
class EpisodeMetrics:
    episode: int
    policy: str
    seed: int
    avg_delay_ms: float
    avg_energy: float
    cum_reward: float
    norm_reward: float = 0.0
    accept_rate: float = 0.0
    migrations: int = 0
    reverts: int = 0
    steps: int = 0
    objective: float = 0.0  # Eq.-(17) style: sum of composite gains / steps

    def csv_row(self) -> list:
        return [
            self.episode,
            self.policy,
            self.seed,
            self.avg_delay_ms,
            self.avg_energy,
            self.cum_reward,
            self.norm_reward,
            self.accept_rate,
            self.migrations,
            self.reverts,
        ]


@dataclass
class RunResult:
    config: ExperimentConfig
    metrics: list
    policy: MigrationPolicy
    topology: Topology
    # per-step (active, energy, delay_sum, delay_count) for load-bucket views
    step_stats: np.ndarray = None
    out_dir: str | None = None


def normalize_rewards(values) -> list[float]:
    """Min-max normalization over the run; a constant series maps to all ones."""
    values = [float(v) for v in values]
    if not values:
        return []
    lo, hi = min(values), max(values)
    if hi == lo:
        return [1.0] * len(values)
    return [(v - lo) / (hi - lo) for v in values]


# -- policies -----------------------------------------------------------------


class A2CAgentPolicy(MigrationPolicy):
    """Actor-critic decision maker plus its trainer and buffers.

    Experiences are routed success/fail by outcome; the newest one is held
    back until its terminal flag is known (episode end) so buffer entries
    stay immutable. With the digital twin enabled, both twin models retrain
    at each episode end and refill the synthetic buffer with as many tuples
    as the episode produced physical transitions.
    """

    def __init__(self, cfg: ExperimentConfig, n_servers: int, seed_state: np.ndarray):
        self.cfg = cfg
        self.n_servers = n_servers
        self.state_dim = mdp.state_dim(n_servers, cfg.chain_len)
        self.n_actions = mdp.n_actions(n_servers, cfg.chain_len)
        init_rng = np.random.default_rng(seed_state[0])
        self.ac = ActorCritic(self.state_dim, self.n_actions, cfg.a2c_config(), init_rng)
        self.action_rng = np.random.default_rng(seed_state[1])
        self.sample_rng = np.random.default_rng(seed_state[2])
        self.buffers = BufferSet(cfg.buffer_success, cfg.buffer_fail, cfg.buffer_dt)
        self.twin = None
        if cfg.policy == "a2c-dt":
            twin_rng = np.random.default_rng(seed_state[3])
            self.twin = TwinTrainer(
                self.state_dim, self.n_actions, cfg.twin_config(), twin_rng
            )
        self._last = None
        self._pending = None
        self.episode_transitions = 0
        self.env_steps = 0
        self.updates = 0
        self.losses = []
        self.online_success_share = 0.5  # EMA of applied-outcome frequency
        self.episodes_seen = 0

    def _encode(self, world, fg):
        return mdp.encode_state(
            world.state,
            world.topo,
            fg,
            world.params,
            self.cfg.cpu_demand_max,
            self.cfg.mem_demand_max,
        )

    def decide(self, world, fg):
        s = self._encode(world, fg)
        a = select_action(self.ac, s, self.action_rng)
        self._last = (s, a)
        return mdp.decode_action(a, fg, self.n_servers)

    def observe(self, world, fg, cmd, outcome):
        s, a = self._last
        exp = Experience(
            s=s,
            a=a,
            r=mdp.reward(outcome),
            s_next=self._encode(world, fg),
            terminal=False,
            origin=PHYSICAL_SUCCESS if outcome.applied else PHYSICAL_FAIL,
        )
        if self._pending is not None:
            self.buffers.push(self._pending)
        self._pending = exp
        self.episode_transitions += 1
        self.online_success_share += 0.002 * (
            (1.0 if outcome.applied else 0.0) - self.online_success_share
        )

    def after_step(self, world, report):
        self.env_steps += 1
        if self.buffers.physical_size < self.cfg.warmup:
            return
        if self.env_steps % self.cfg.update_every != 0:
            return
        batch = sample_physical(
            self.buffers, self.cfg.batch_physical, self.cfg.balance, self.sample_rng
        )
        batch += sample_dt(self.buffers.dt, self.cfg.batch_dt, self.sample_rng)
        weights = self._batch_weights(batch) if self.cfg.importance_weighting else None
        self.losses.append(update(self.ac, batch, weights))
        self.updates += 1

    def _batch_weights(self, batch):
        """Undo the class-balanced sampling bias in the policy gradient:
        physical samples are reweighted to the online success/fail mix,
        synthetic samples stay at weight 1."""
        origins = [e.origin for e in batch]
        n_succ = origins.count(PHYSICAL_SUCCESS)
        n_fail = origins.count(PHYSICAL_FAIL)
        n_phys = n_succ + n_fail
        share = min(max(self.online_success_share, 0.05), 0.95)
        w_succ = share * n_phys / n_succ if n_succ else 0.0
        w_fail = (1.0 - share) * n_phys / n_fail if n_fail else 0.0
        lookup = {PHYSICAL_SUCCESS: w_succ, PHYSICAL_FAIL: w_fail}
        dt_w = self.cfg.dt_actor_weight
        return np.array([lookup.get(o, dt_w) for o in origins])

    def after_episode(self, world):
        if self._pending is not None:
            self._pending.terminal = True
            self.buffers.push(self._pending)
            self._pending = None
        decay = self.cfg.exploration_decay
        acfg = self.ac.cfg
        acfg.entropy_coef = self.cfg.entropy_min + decay * (
            acfg.entropy_coef - self.cfg.entropy_min
        )
        acfg.explore_floor = self.cfg.explore_floor_min + decay * (
            acfg.explore_floor - self.cfg.explore_floor_min
        )
        if self.twin is not None and self.episode_transitions > 0:
            physical = self.buffers.success.snapshot() + self.buffers.fail.snapshot()
            if physical:
                self.twin.train(physical)
                self.episodes_seen += 1
                if self.episodes_seen > self.cfg.dt_warmup_episodes:
                    for exp in self.twin.generate(physical, self.episode_transitions):
                        self.buffers.push(exp)
        self.episode_transitions = 0

    def checkpoint(self, path_prefix: str):
        named = {"actor": self.ac.actor.params(), "critic": self.ac.critic.params()}
        if self.twin is not None:
            named["vae"] = self.twin.vae.params()
            named["lstm"] = self.twin.twin.params()
        save_checkpoint(path_prefix, named)


class RecordingPolicy(MigrationPolicy):
    """Wraps any policy and records its transitions (for twin training on
    baseline-generated data)."""

    def __init__(self, inner: MigrationPolicy, cfg: ExperimentConfig, n_servers: int):
        self.inner = inner
        self.cfg = cfg
        self.n_servers = n_servers
        self.buffers = BufferSet(cfg.buffer_success, cfg.buffer_fail, cfg.buffer_dt)
        self._last_state = None

    def _encode(self, world, fg):
        return mdp.encode_state(
            world.state,
            world.topo,
            fg,
            world.params,
            self.cfg.cpu_demand_max,
            self.cfg.mem_demand_max,
        )

    def decide(self, world, fg):
        self._last_state = self._encode(world, fg)
        return self.inner.decide(world, fg)

    def observe(self, world, fg, cmd, outcome):
        exp = Experience(
            s=self._last_state,
            a=mdp.encode_action(cmd, fg, self.n_servers),
            r=mdp.reward(outcome),
            s_next=self._encode(world, fg),
            terminal=False,
            origin=PHYSICAL_SUCCESS if outcome.applied else PHYSICAL_FAIL,
        )
        self.buffers.push(exp)
        self.inner.observe(world, fg, cmd, outcome)


def build_policy(cfg: ExperimentConfig, n_servers: int, seed_state: np.ndarray):
    if cfg.policy in ("a2c-dt", "a2c-plain"):
        return A2CAgentPolicy(cfg, n_servers, seed_state)
    if cfg.policy == "threshold":
        return ThresholdPolicy(cfg.cpu_threshold, cfg.mem_threshold)
    if cfg.policy == "random":
        return RandomPolicy(np.random.default_rng(seed_state[1]), cfg.p_mig)
    raise ConfigurationError(f"unknown policy {cfg.policy!r}")


# -- the experiment loop ----------------------------------------------------------


def run_experiment(cfg: ExperimentConfig, out_dir: str | None = None) -> RunResult:
    """Run cfg.episodes episodes on one pinned topology and write artifacts.

    Workloads are regenerated per episode from derived seeds; the learner
    persists across episodes. Artifacts (when out_dir is given): metrics.csv,
    summary.json, events.jsonl (cfg.log_events), checkpoint.{bin,json}.
    """
    cfg.validate()
    seeds = np.random.SeedSequence(cfg.seed).generate_state(cfg.episodes + 16)
    topo = generate_waxman(
        cfg.n_edge, cfg.n_core, cfg.alpha, cfg.beta, int(seeds[0]), cfg.capacity_config()
    )
    policy = build_policy(cfg, topo.n_servers, seeds[1:5])
    collect = cfg.collect_experience
    if collect is None:
        collect = cfg.policy in ("a2c-dt", "a2c-plain")
    if collect and not isinstance(policy, A2CAgentPolicy):
        policy = RecordingPolicy(policy, cfg, topo.n_servers)

    events_fh = None
    event_sink = None
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        if cfg.log_events:
            events_fh = open(os.path.join(out_dir, "events.jsonl"), "w")

            def event_sink(rec):
                events_fh.write(json.dumps(rec, separators=(",", ":")) + "\n")

    metrics = []
    step_stats = []
    try:
        for ep in range(cfg.episodes):
            if event_sink is not None:
                event_sink({"event": "episode_start", "episode": ep})
            fgs = generate_requests(
                cfg.requests,
                cfg.arrival_rate,
                cfg.chain_len,
                int(seeds[8 + ep]),
                cfg.demand_config(),
            )
            world = World(
                topo,
                fgs,
                cfg.perf_params(),
                cfg.cpu_threshold,
                cfg.mem_threshold,
                event_sink=event_sink,
            )
            energy_sum = 0.0
            delay_sum = 0.0
            delay_count = 0
            reward_sum = 0.0
            lam_sum = 0.0
            accepts = migrations = reverts = steps = 0
            t = 0
            while not world.done(t):
                report = world.step(t, policy)
                energy_sum += report.energy
                delay_sum += report.delay_sum_ms
                delay_count += report.delay_count
                reward_sum += sum(mdp.reward(o) for o in report.outcomes)
                lam_sum += sum(o.lam for o in report.outcomes if o.applied)
                accepts += report.accepts
                migrations += report.migrations
                reverts += report.reverts
                step_stats.append(
                    (report.active, report.energy, report.delay_sum_ms, report.delay_count)
                )
                policy.after_step(world, report)
                steps += 1
                t += 1
            policy.after_episode(world)
            metrics.append(
                EpisodeMetrics(
                    episode=ep,
                    policy=cfg.policy,
                    seed=cfg.seed,
                    avg_delay_ms=delay_sum / delay_count if delay_count else 0.0,
                    avg_energy=energy_sum / steps if steps else 0.0,
                    cum_reward=reward_sum,
                    accept_rate=accepts / cfg.requests,
                    migrations=migrations,
                    reverts=reverts,
                    steps=steps,
                    objective=objective_value([lam_sum], steps) if steps else 0.0,
                )
            )
    finally:
        if events_fh is not None:
            events_fh.close()

    for m, norm in zip(metrics, normalize_rewards([m.cum_reward for m in metrics])):
        m.norm_reward = norm

    result = RunResult(
        config=cfg,
        metrics=metrics,
        policy=policy,
        topology=topo,
        step_stats=np.array(step_stats) if step_stats else np.zeros((0, 4)),
        out_dir=out_dir,
    )
    if out_dir is not None:
        write_metrics_csv(os.path.join(out_dir, "metrics.csv"), metrics)
        with open(os.path.join(out_dir, "summary.json"), "w") as fh:
            json.dump(run_summary(result), fh, indent=2)
        with open(os.path.join(out_dir, "topology.json"), "w") as fh:
            fh.write(topo.to_json())
        agent = policy.inner if isinstance(policy, RecordingPolicy) else policy
        if isinstance(agent, A2CAgentPolicy):
            agent.checkpoint(os.path.join(out_dir, "checkpoint"))
    return result


def write_metrics_csv(path: str, metrics):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_HEADER)
        for m in metrics:
            writer.writerow(m.csv_row())


def read_metrics_csv(path: str) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def run_summary(result: RunResult) -> dict:
    ms = result.metrics
    return {
        "config": result.config.to_dict(),
        "episodes": [dataclasses.asdict(m) for m in ms],
        "totals": {
            "episodes": len(ms),
            "mean_avg_delay_ms": float(np.mean([m.avg_delay_ms for m in ms])),
            "mean_avg_energy": float(np.mean([m.avg_energy for m in ms])),
            "mean_accept_rate": float(np.mean([m.accept_rate for m in ms])),
            "migrations": int(sum(m.migrations for m in ms)),
            "reverts": int(sum(m.reverts for m in ms)),
        },
    }


# -- policy comparison --------------------------------------------------------------


def trained_window(metrics, window: int = 10) -> list:
    """The trailing episodes that represent trained behavior."""
    return metrics[-min(window, len(metrics)) :]


def compare_policies(
    cfg: ExperimentConfig,
    policies,
    seeds,
    out_dir: str | None = None,
    window: int = 10,
    progress=None,
) -> dict:
    """Run each (policy, seed), report per-policy trained medians, pairwise
    reductions, and avg-energy / avg-delay medians bucketed by concurrent
    active-FG deciles (the Fig.-3(a)/(b) style view)."""
    if not seeds:
        raise ConfigurationError("at least one seed is required")
    runs = {}
    all_metrics = []
    for policy in policies:
        for seed in seeds:
            sub = dataclasses.replace(cfg, policy=policy, seed=seed)
            sub_dir = None
            if out_dir is not None:
                sub_dir = os.path.join(out_dir, f"{policy}-seed{seed}")
            if progress is not None:
                progress(policy, seed)
            runs[(policy, seed)] = run_experiment(sub, sub_dir)
            all_metrics.extend(runs[(policy, seed)].metrics)

    summary = {"policies": {}, "reductions": {}, "buckets": {}}
    medians = {}
    for policy in policies:
        energies, delays, finals = [], [], []
        for seed in seeds:
            ms = trained_window(runs[(policy, seed)].metrics, window)
            energies.append(float(np.mean([m.avg_energy for m in ms])))
            delays.append(float(np.mean([m.avg_delay_ms for m in ms])))
            finals.append(float(np.mean([m.norm_reward for m in ms])))
        medians[policy] = {
            "avg_energy": float(np.median(energies)),
            "avg_delay_ms": float(np.median(delays)),
            "final_norm_reward": float(np.median(finals)),
        }
        summary["policies"][policy] = medians[policy]

    for a in policies:
        for b in policies:
            if a == b:
                continue
            red = {}
            for key in ("avg_energy", "avg_delay_ms"):
                base = medians[b][key]
                red[key] = (base - medians[a][key]) / base if base else 0.0
            summary["reductions"][f"{a} vs {b}"] = red

    # concurrent-active-FG decile buckets over pooled step samples
    pooled = np.concatenate(
        [runs[(p, s)].step_stats for p in policies for s in seeds]
    )
    loaded = pooled[pooled[:, 0] > 0]
    if loaded.size:
        edges = np.unique(
            np.percentile(loaded[:, 0], np.linspace(0, 100, 11), method="nearest")
        )
        summary["buckets"]["active_fg_edges"] = edges.tolist()
        for policy in policies:
            rows = np.concatenate([runs[(policy, s)].step_stats for s in seeds])
            rows = rows[rows[:, 0] > 0]
            which = np.clip(np.searchsorted(edges, rows[:, 0], side="right") - 1, 0, len(edges) - 1)
            energy_med, delay_med = [], []
            for b in range(len(edges)):
                sel = rows[which == b]
                if sel.size:
                    energy_med.append(float(np.median(sel[:, 1])))
                    counts = np.maximum(sel[:, 3], 1)
                    delay_med.append(float(np.median(sel[:, 2] / counts)))
                else:
                    energy_med.append(None)
                    delay_med.append(None)
            summary["buckets"][policy] = {"avg_energy": energy_med, "avg_delay_ms": delay_med}

    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        write_metrics_csv(os.path.join(out_dir, "metrics.csv"), all_metrics)
        with open(os.path.join(out_dir, "summary.json"), "w") as fh:
            json.dump(summary, fh, indent=2)
    return summary


# -- event-log replay oracle -----------------------------------------------------------


def replay_events(path: str) -> list[dict]:
    """Recompute per-episode metrics purely from an events.jsonl file.

    No-op decisions are not logged individually; each step record carries
    their count and every no-op contributes exactly sigm(0) = 0.5 reward.
    """
    episodes = []
    current = None

    def close():
        if current is not None and current["steps"]:
            episodes.append(
                {
                    "episode": current["episode"],
                    "avg_delay_ms": (
                        current["delay_sum"] / current["delay_count"]
                        if current["delay_count"]
                        else 0.0
                    ),
                    "avg_energy": current["energy"] / current["steps"],
                    "cum_reward": current["reward"],
                    "accept_rate": (
                        current["accepts"] / current["arrivals"]
                        if current["arrivals"]
                        else 0.0
                    ),
                    "migrations": current["migrations"],
                    "reverts": current["reverts"],
                }
            )

    with open(path) as fh:
        for line in fh:
            rec = json.loads(line)
            kind = rec["event"]
            if kind == "episode_start":
                close()
                current = {
                    "episode": rec["episode"],
                    "steps": 0,
                    "energy": 0.0,
                    "delay_sum": 0.0,
                    "delay_count": 0,
                    "reward": 0.0,
                    "accepts": 0,
                    "arrivals": 0,
                    "migrations": 0,
                    "reverts": 0,
                }
            elif kind == "step":
                current["steps"] += 1
                current["energy"] += rec["energy"]
                current["delay_sum"] += rec["delay_sum_ms"]
                current["delay_count"] += rec["delay_count"]
                current["reward"] += 0.5 * rec["noops"]
                current["migrations"] += rec["migrations"]
                current["reverts"] += rec["reverts"]
                current["arrivals"] += rec["arrivals"]
                current["accepts"] += rec["accepts"]
            elif kind == "migrate":
                if rec["applied"]:
                    current["reward"] += mdp.sigm(rec["lam"])
                else:
                    current["reward"] += mdp.REVERT_REWARD
    close()
    return episodes
