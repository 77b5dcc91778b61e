"""Advantage actor-critic over replayed physical + synthetic mini-batches.

The actor is a softmax policy over the per-FG action space; the critic a
scalar value head. Updates recompute advantages with the current critic
(replayed A2C, no importance weights) and take one clipped Adam step per
network.
"""

from dataclasses import dataclass

import numpy as np

from .errors import TrainingError
from .neural import AdamState, DenseNet, adam_update, clip_grad_norm


@dataclass
class A2CConfig:
    hidden: tuple = (256, 128, 64)
    tanh_units: int = 64
    learning_rate: float = 1e-3
    gamma: float = 0.95
    entropy_coef: float = 0.01
    grad_clip: float = 5.0
    # epsilon-soft behavior floor: sampling mixes this much uniform mass into
    # the softmax so heavily-suppressed actions keep being retried; the actor
    # loss itself stays on the raw policy probabilities
    explore_floor: float = 0.0
    # subtracted from rewards when forming update targets (reward centering);
    # advantages are shift-invariant once the critic converges, but centering
    # at the neutral sigm(0) level stops the early all-actions-look-good phase
    reward_baseline: float = 0.0


class ActorCritic:
    def __init__(self, state_dim: int, n_actions: int, cfg: A2CConfig, rng):
        self.cfg = cfg
        self.n_actions = n_actions
        actor_sizes = [state_dim, *cfg.hidden, cfg.tanh_units, n_actions]
        actor_acts = ["relu"] * len(cfg.hidden) + ["tanh", "softmax"]
        self.actor = DenseNet(actor_sizes, actor_acts, rng)
        critic_sizes = [state_dim, *cfg.hidden, 1]
        critic_acts = ["relu"] * len(cfg.hidden) + ["linear"]
        self.critic = DenseNet(critic_sizes, critic_acts, rng)
        self.actor_opt = AdamState(learning_rate=cfg.learning_rate)
        self.critic_opt = AdamState(learning_rate=cfg.learning_rate)

    def action_probs(self, s: np.ndarray) -> np.ndarray:
        return self.actor.forward(np.atleast_2d(s))

    def value(self, s: np.ndarray) -> np.ndarray:
        return self.critic.forward(np.atleast_2d(s))[:, 0]


def select_action(
    ac: ActorCritic, s: np.ndarray, rng: np.random.Generator, mode: str = "sample"
) -> int:
    """Draw from the categorical policy, or take the argmax in greedy mode.

    In sample mode the behavior distribution is the epsilon-soft mixture
    (1 - floor) * pi + floor * uniform when cfg.explore_floor > 0.
    """
    probs = ac.action_probs(s)[0]
    if mode == "greedy":
        return int(np.argmax(probs))
    if mode != "sample":
        raise ValueError(f"unknown mode {mode!r}")
    floor = ac.cfg.explore_floor
    if floor > 0.0:
        probs = (1.0 - floor) * probs + floor / len(probs)
    cum = np.cumsum(probs)
    return int(np.searchsorted(cum, rng.random() * cum[-1], side="right").clip(0, len(probs) - 1))


def advantage(
    ac: ActorCritic, s, a, r: float, s_next, terminal: bool = False
) -> float:
    """A = r + gamma * V(s') * (1 - terminal) - V(s)."""
    v_s = float(ac.value(s)[0])
    v_next = 0.0 if terminal else float(ac.value(s_next)[0])
    return r + ac.cfg.gamma * v_next - v_s


def update(ac: ActorCritic, batch, weights=None) -> tuple[float, float]:
    """One actor and one critic Adam step on a batch of Experience.

    Critic: MSE against the bootstrap target r + gamma*V(s') (target
    detached). Actor: -log pi(a|s) * A with A held constant, minus an entropy
    bonus; `weights` (per sample) let the caller undo the success/fail
    class-balanced sampling bias in the policy gradient. Returns
    (actor loss, critic loss).
    """
    if not batch:
        raise ValueError("empty batch")
    B = len(batch)
    S = np.stack([e.s for e in batch])
    S_next = np.stack([e.s_next for e in batch])
    a = np.array([e.a for e in batch])
    r = np.array([e.r for e in batch], dtype=float) - ac.cfg.reward_baseline
    live = np.array([0.0 if e.terminal else 1.0 for e in batch])
    w = np.ones(B) if weights is None else np.asarray(weights, dtype=float)

    gamma = ac.cfg.gamma
    v_next = ac.value(S_next)
    target = r + gamma * v_next * live

    v = ac.critic.forward(S)[:, 0]
    critic_loss = float(((v - target) ** 2).mean())
    grad_v = (2.0 / B) * (v - target)
    critic_grads, _ = ac.critic.backward(grad_v[:, None])

    adv = target - v  # recomputed with the current critic, treated as constant
    probs = ac.actor.forward(S)
    rows = np.arange(B)
    chosen = probs[rows, a]
    log_probs = np.log(np.clip(probs, 1e-12, None))
    entropy = float(-(probs * log_probs).sum(axis=1).mean())
    actor_loss = float(-(w * np.log(np.clip(chosen, 1e-12, None)) * adv).mean())
    actor_loss -= ac.cfg.entropy_coef * entropy

    grad_p = np.zeros_like(probs)
    grad_p[rows, a] = -w * adv / (B * np.clip(chosen, 1e-12, None))
    # entropy term: d(-c*H)/dp = c*(log p + 1)/B
    grad_p += ac.cfg.entropy_coef * (log_probs + 1.0) / B
    actor_grads, _ = ac.actor.backward(grad_p)

    if not (np.isfinite(actor_loss) and np.isfinite(critic_loss)):
        raise TrainingError("non-finite actor/critic loss")

    adam_update(
        ac.critic.params(), clip_grad_norm(critic_grads, ac.cfg.grad_clip), ac.critic_opt
    )
    adam_update(
        ac.actor.params(), clip_grad_norm(actor_grads, ac.cfg.grad_clip), ac.actor_opt
    )
    return actor_loss, critic_loss
