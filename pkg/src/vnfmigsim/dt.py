"""Digital twin: multi-task VAE (synthetic state-action pairs) and multi-task
LSTM (next-state and reward prediction) feeding the synthetic buffer.

Both models are compositions of the neural-module primitives; decoder heads
are kept as logits internally and squashed where outputs are consumed, so
the binary cross-entropy gradients stay numerically exact.
"""

from dataclasses import dataclass

import numpy as np

from .errors import GenerationError, TrainingError
from .experience import SYNTHETIC, Experience
from .neural import (
    LOGVAR_MAX,
    LOGVAR_MIN,
    AdamState,
    DenseNet,
    LstmCell,
    adam_update,
    bce_logits,
    clip_grad_norm,
    gaussian_reparam,
)


def _sigmoid(z):
    return 1.0 / (1.0 + np.exp(-np.clip(z, -60.0, 60.0)))


def one_hot(a, n: int) -> np.ndarray:
    a = np.atleast_1d(a)
    out = np.zeros((a.shape[0], n))
    out[np.arange(a.shape[0]), a] = 1.0
    return out


class TwinVae:
    """Encoder 64/32 relu with mean/logvar heads; shared 64-relu decoder with
    state and action heads."""

    def __init__(
        self,
        state_dim: int,
        action_dim: int,
        rng: np.random.Generator,
        latent_dim: int = 16,
        enc_hidden: tuple = (64, 32),
        dec_hidden: int = 64,
    ):
        self.state_dim = state_dim
        self.action_dim = action_dim
        self.latent_dim = latent_dim
        in_dim = state_dim + action_dim
        self.enc_trunk = DenseNet(
            [in_dim, *enc_hidden], ["relu"] * len(enc_hidden), rng
        )
        self.enc_mean = DenseNet([enc_hidden[-1], latent_dim], ["linear"], rng)
        self.enc_logvar = DenseNet([enc_hidden[-1], latent_dim], ["linear"], rng)
        self.dec_trunk = DenseNet([latent_dim, dec_hidden], ["relu"], rng)
        self.dec_state = DenseNet([dec_hidden, state_dim], ["linear"], rng)
        self.dec_action = DenseNet([dec_hidden, action_dim], ["linear"], rng)

    def nets(self):
        return [
            self.enc_trunk,
            self.enc_mean,
            self.enc_logvar,
            self.dec_trunk,
            self.dec_state,
            self.dec_action,
        ]

    def params(self):
        return [p for net in self.nets() for p in net.params()]


def vae_loss(vae: TwinVae, s, a_onehot, rng: np.random.Generator, noise=None):
    """Mean per-sample loss: state BCE + action BCE + KL(q || N(0,I)), with
    exact gradients for every VAE parameter. Returns (loss, grads, noise)."""
    s = np.atleast_2d(np.asarray(s, dtype=float))
    a_onehot = np.atleast_2d(np.asarray(a_onehot, dtype=float))
    B = s.shape[0]
    x = np.concatenate([s, a_onehot], axis=1)

    h = vae.enc_trunk.forward(x)
    mean = vae.enc_mean.forward(h)
    logvar_raw = vae.enc_logvar.forward(h)
    logvar = np.clip(logvar_raw, LOGVAR_MIN, LOGVAR_MAX)
    z, noise = gaussian_reparam(mean, logvar, rng, noise)

    d = vae.dec_trunk.forward(z)
    s_logits = vae.dec_state.forward(d)
    a_logits = vae.dec_action.forward(d)

    recon = bce_logits(s_logits, s) + bce_logits(a_logits, a_onehot)
    kl = float(-0.5 * (1.0 + logvar - mean**2 - np.exp(logvar)).sum())
    loss = (recon + kl) / B
    if not np.isfinite(loss):
        raise TrainingError("non-finite VAE loss")

    g_state, d_dec1 = vae.dec_state.backward((_sigmoid(s_logits) - s) / B)
    g_action, d_dec2 = vae.dec_action.backward((_sigmoid(a_logits) - a_onehot) / B)
    g_dec_trunk, d_z = vae.dec_trunk.backward(d_dec1 + d_dec2)

    d_mean = d_z + mean / B
    d_logvar = d_z * (0.5 * np.exp(0.5 * logvar) * noise)
    d_logvar += 0.5 * (np.exp(logvar) - 1.0) / B
    d_logvar *= (logvar_raw > LOGVAR_MIN) & (logvar_raw < LOGVAR_MAX)

    g_mean, d_h1 = vae.enc_mean.backward(d_mean)
    g_logvar, d_h2 = vae.enc_logvar.backward(d_logvar)
    g_enc_trunk, _ = vae.enc_trunk.backward(d_h1 + d_h2)

    grads = g_enc_trunk + g_mean + g_logvar + g_dec_trunk + g_state + g_action
    return loss, grads, noise


def vae_generate(
    vae: TwinVae, s, a_onehot, rng: np.random.Generator, sample_latent: bool = True
):
    """Encode a physical (state, action) pair, sample z, decode a synthetic pair.

    The state head output (sigmoid) is used directly; the action head is
    collapsed to one-hot by argmax so the pair stays a valid discrete
    experience.
    """
    s = np.atleast_2d(np.asarray(s, dtype=float))
    a_onehot = np.atleast_2d(np.asarray(a_onehot, dtype=float))
    x = np.concatenate([s, a_onehot], axis=1)
    h = vae.enc_trunk.forward(x)
    mean = vae.enc_mean.forward(h)
    if sample_latent:
        logvar = np.clip(vae.enc_logvar.forward(h), LOGVAR_MIN, LOGVAR_MAX)
        z, _ = gaussian_reparam(mean, logvar, rng)
    else:
        z = mean
    d = vae.dec_trunk.forward(z)
    s_dt = _sigmoid(vae.dec_state.forward(d))
    a_dt = one_hot(np.argmax(vae.dec_action.forward(d), axis=1), vae.action_dim)
    return s_dt, a_dt


class TwinLstm:
    """Single LSTM step (stateless, zero initial state) + shared relu layer +
    linear next-state and reward heads."""

    def __init__(
        self,
        state_dim: int,
        action_dim: int,
        rng: np.random.Generator,
        hidden_dim: int = 64,
        fc_units: int = 64,
    ):
        self.state_dim = state_dim
        self.action_dim = action_dim
        self.cell = LstmCell(state_dim + action_dim, hidden_dim, rng)
        self.fc = DenseNet([hidden_dim, fc_units], ["relu"], rng)
        self.head_state = DenseNet([fc_units, state_dim], ["linear"], rng)
        self.head_reward = DenseNet([fc_units, 1], ["linear"], rng)

    def params(self):
        return (
            self.cell.params()
            + self.fc.params()
            + self.head_state.params()
            + self.head_reward.params()
        )

    def _forward_raw(self, s, a_onehot):
        s = np.atleast_2d(np.asarray(s, dtype=float))
        a_onehot = np.atleast_2d(np.asarray(a_onehot, dtype=float))
        x = np.concatenate([s, a_onehot], axis=1)
        h, _ = self.cell.forward(x)  # fresh zero state per sample batch
        f = self.fc.forward(h)
        return self.head_state.forward(f), self.head_reward.forward(f)


def lstm_predict(twin: TwinLstm, s, a_onehot):
    """(next-state prediction clamped to [0,1], reward prediction)."""
    s_next, r = twin._forward_raw(s, a_onehot)
    return np.clip(s_next, 0.0, 1.0), r[:, 0]


def lstm_loss(
    twin: TwinLstm,
    s,
    a_onehot,
    s_true_next,
    r_true,
    k1: float = 1.0,
    k2: float = 1.0,
):
    """Eq.-(26) weighted squared error (mean per sample) with exact gradients."""
    s_true_next = np.atleast_2d(np.asarray(s_true_next, dtype=float))
    r_true = np.atleast_1d(np.asarray(r_true, dtype=float))
    B = s_true_next.shape[0]
    s_pred, r_pred = twin._forward_raw(s, a_onehot)
    err_s = s_pred - s_true_next
    err_r = r_pred[:, 0] - r_true
    loss = (k1 * float((err_s**2).sum()) + k2 * float((err_r**2).sum())) / B
    if not np.isfinite(loss):
        raise TrainingError("non-finite LSTM loss")

    g_state, d_f1 = twin.head_state.backward(2.0 * k1 * err_s / B)
    g_reward, d_f2 = twin.head_reward.backward((2.0 * k2 * err_r / B)[:, None])
    g_fc, d_h = twin.fc.backward(d_f1 + d_f2)
    g_cell, _, _, _ = twin.cell.backward(d_h)
    return loss, g_cell + g_fc + g_state + g_reward


def populate_dt_buffer(
    vae: TwinVae,
    twin: TwinLstm,
    physical_samples,
    count: int,
    rng: np.random.Generator,
) -> list:
    """Generate `count` synthetic experiences seeded by physical samples."""
    if count == 0:
        return []
    if not physical_samples:
        raise GenerationError("no physical samples to seed generation")
    out = []
    idx = rng.integers(0, len(physical_samples), size=count)
    for i in idx:
        seed = physical_samples[int(i)]
        a_hot = one_hot(seed.a, vae.action_dim)
        s_dt, a_dt = vae_generate(vae, seed.s, a_hot, rng)
        s_next, r = lstm_predict(twin, s_dt, a_dt)
        out.append(
            Experience(
                s=s_dt[0],
                a=int(np.argmax(a_dt[0])),
                r=float(r[0]),
                s_next=s_next[0],
                terminal=False,
                origin=SYNTHETIC,
            )
        )
    return out


@dataclass
class TwinConfig:
    latent_dim: int = 16
    lstm_hidden: int = 64
    learning_rate: float = 1e-3
    k1: float = 1.0
    k2: float = 1.0
    grad_clip: float = 5.0
    train_steps: int = 200  # per episode end
    batch_size: int = 32


class TwinTrainer:
    """Owns both twin models; retrains them on the physical buffers between
    episodes and fills the synthetic buffer."""

    def __init__(self, state_dim: int, action_dim: int, cfg: TwinConfig, rng):
        self.cfg = cfg
        self.rng = rng
        self.vae = TwinVae(state_dim, action_dim, rng, latent_dim=cfg.latent_dim)
        self.twin = TwinLstm(state_dim, action_dim, rng, hidden_dim=cfg.lstm_hidden)
        self.vae_opt = AdamState(learning_rate=cfg.learning_rate)
        self.lstm_opt = AdamState(learning_rate=cfg.learning_rate)

    def train(self, physical_samples, steps: int | None = None):
        """Minimize both losses over uniform mini-batches; returns loss traces."""
        steps = self.cfg.train_steps if steps is None else steps
        if not physical_samples:
            return [], []
        vae_losses, lstm_losses = [], []
        n = len(physical_samples)
        for _ in range(steps):
            idx = self.rng.integers(0, n, size=min(self.cfg.batch_size, n))
            batch = [physical_samples[int(i)] for i in idx]
            S = np.stack([e.s for e in batch])
            A = one_hot([e.a for e in batch], self.vae.action_dim)
            S_next = np.stack([e.s_next for e in batch])
            R = np.array([e.r for e in batch])

            loss_v, grads_v, _ = vae_loss(self.vae, S, A, self.rng)
            adam_update(
                self.vae.params(),
                clip_grad_norm(grads_v, self.cfg.grad_clip),
                self.vae_opt,
            )
            vae_losses.append(loss_v)

            loss_l, grads_l = lstm_loss(
                self.twin, S, A, S_next, R, self.cfg.k1, self.cfg.k2
            )
            adam_update(
                self.twin.params(),
                clip_grad_norm(grads_l, self.cfg.grad_clip),
                self.lstm_opt,
            )
            lstm_losses.append(loss_l)
        return vae_losses, lstm_losses

    def generate(self, physical_samples, count: int) -> list:
        return populate_dt_buffer(self.vae, self.twin, physical_samples, count, self.rng)
