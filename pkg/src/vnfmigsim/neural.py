"""Minimal numpy neural substrate with hand-written backpropagation.

Everything operates on batches (B x dim). A DenseNet is a stack of affine
layers with per-layer activations; backward() consumes dL/d(output) and
returns exact parameter gradients plus dL/d(input), so networks compose by
chaining backward calls. The LSTM cell supports a single gated recurrence
step (the digital twin uses it statelessly from zero state).
"""

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import TrainingError

ACTIVATIONS = ("relu", "tanh", "sigmoid", "linear", "softmax")

LOGVAR_MIN, LOGVAR_MAX = -20.0, 5.0


def _apply_activation(name: str, z: np.ndarray) -> np.ndarray:
    if name == "relu":
        return np.maximum(z, 0.0)
    if name == "tanh":
        return np.tanh(z)
    if name == "sigmoid":
        return 1.0 / (1.0 + np.exp(-np.clip(z, -60.0, 60.0)))
    if name == "linear":
        return z
    if name == "softmax":
        shifted = z - z.max(axis=-1, keepdims=True)
        e = np.exp(shifted)
        return e / e.sum(axis=-1, keepdims=True)
    raise ValueError(f"unknown activation {name!r}")


def _activation_backward(name: str, a: np.ndarray, grad_a: np.ndarray) -> np.ndarray:
    """dL/dz given the activation output a and dL/da."""
    if name == "relu":
        return grad_a * (a > 0.0)
    if name == "tanh":
        return grad_a * (1.0 - a * a)
    if name == "sigmoid":
        return grad_a * a * (1.0 - a)
    if name == "linear":
        return grad_a
    if name == "softmax":
        # full Jacobian: dz = a * (grad - sum(grad * a))
        inner = (grad_a * a).sum(axis=-1, keepdims=True)
        return a * (grad_a - inner)
    raise ValueError(f"unknown activation {name!r}")


class DenseNet:
    """Fully connected stack; weights init uniform(-1,1)/sqrt(fan_in)."""

    def __init__(self, layer_sizes, activations, rng: np.random.Generator):
        assert len(activations) == len(layer_sizes) - 1
        for act in activations:
            if act not in ACTIVATIONS:
                raise ValueError(f"unknown activation {act!r}")
        self.sizes = list(layer_sizes)
        self.activations = list(activations)
        self.weights = []
        self.biases = []
        for fan_in, fan_out in zip(layer_sizes, layer_sizes[1:]):
            limit = 1.0 / np.sqrt(fan_in)
            self.weights.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
            self.biases.append(np.zeros(fan_out))
        self._cache = None

    @property
    def in_dim(self) -> int:
        return self.sizes[0]

    @property
    def out_dim(self) -> int:
        return self.sizes[-1]

    def params(self):
        return self.weights + self.biases

    def forward(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if x.shape[1] != self.in_dim:
            raise ValueError(f"expected input dim {self.in_dim}, got {x.shape[1]}")
        outs = [x]
        for w, b, act in zip(self.weights, self.biases, self.activations):
            x = _apply_activation(act, x @ w + b)
            outs.append(x)
        self._cache = outs
        return x

    def backward(self, grad_out: np.ndarray):
        """Gradients for the last forward; returns (param grads, dL/dinput)."""
        if self._cache is None:
            raise TrainingError("backward called without a cached forward pass")
        outs = self._cache
        grad = np.atleast_2d(np.asarray(grad_out, dtype=float))
        grads_w = [None] * len(self.weights)
        grads_b = [None] * len(self.biases)
        for i in reversed(range(len(self.weights))):
            grad_z = _activation_backward(self.activations[i], outs[i + 1], grad)
            grads_w[i] = outs[i].T @ grad_z
            grads_b[i] = grad_z.sum(axis=0)
            grad = grad_z @ self.weights[i].T
        return grads_w + grads_b, grad


class LstmCell:
    """Single LSTM step with gate order (input, forget, candidate, output)."""

    def __init__(self, input_dim: int, hidden_dim: int, rng: np.random.Generator):
        self.input_dim = input_dim
        self.hidden_dim = hidden_dim
        lim_x = 1.0 / np.sqrt(input_dim)
        lim_h = 1.0 / np.sqrt(hidden_dim)
        self.w_x = rng.uniform(-lim_x, lim_x, size=(input_dim, 4 * hidden_dim))
        self.w_h = rng.uniform(-lim_h, lim_h, size=(hidden_dim, 4 * hidden_dim))
        self.b = np.zeros(4 * hidden_dim)
        self._cache = None

    def params(self):
        return [self.w_x, self.w_h, self.b]

    def zero_state(self, batch: int):
        return np.zeros((batch, self.hidden_dim)), np.zeros((batch, self.hidden_dim))

    def forward(self, x: np.ndarray, h_prev=None, c_prev=None):
        """One recurrence step; returns (h, c) without mutating any state."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if x.shape[1] != self.input_dim:
            raise ValueError(f"expected input dim {self.input_dim}, got {x.shape[1]}")
        if h_prev is None:
            h_prev, c_prev = self.zero_state(x.shape[0])
        h_prev = np.atleast_2d(h_prev)
        c_prev = np.atleast_2d(c_prev)
        z = x @ self.w_x + h_prev @ self.w_h + self.b
        H = self.hidden_dim
        i = _apply_activation("sigmoid", z[:, :H])
        f = _apply_activation("sigmoid", z[:, H : 2 * H])
        g = _apply_activation("tanh", z[:, 2 * H : 3 * H])
        o = _apply_activation("sigmoid", z[:, 3 * H :])
        c = f * c_prev + i * g
        tanh_c = np.tanh(c)
        h = o * tanh_c
        self._cache = (x, h_prev, c_prev, i, f, g, o, c, tanh_c)
        return h, c

    def backward(self, grad_h: np.ndarray, grad_c=None):
        """Gradients for one step; returns (param grads, dL/dx, dL/dh_prev, dL/dc_prev)."""
        if self._cache is None:
            raise TrainingError("backward called without a cached forward pass")
        x, h_prev, c_prev, i, f, g, o, c, tanh_c = self._cache
        grad_h = np.atleast_2d(np.asarray(grad_h, dtype=float))
        if grad_c is None:
            grad_c = np.zeros_like(c)
        d_o = grad_h * tanh_c
        d_c = grad_c + grad_h * o * (1.0 - tanh_c * tanh_c)
        d_f = d_c * c_prev
        d_i = d_c * g
        d_g = d_c * i
        d_c_prev = d_c * f
        dz = np.concatenate(
            [
                d_i * i * (1.0 - i),
                d_f * f * (1.0 - f),
                d_g * (1.0 - g * g),
                d_o * o * (1.0 - o),
            ],
            axis=1,
        )
        grads = [x.T @ dz, h_prev.T @ dz, dz.sum(axis=0)]
        return grads, dz @ self.w_x.T, dz @ self.w_h.T, d_c_prev


def lstm_step(cell: LstmCell, x: np.ndarray, h_prev=None, c_prev=None):
    """Functional wrapper: (output, (h, c)) for one recurrence step."""
    h, c = cell.forward(x, h_prev, c_prev)
    return h, (h, c)


def gaussian_reparam(
    mean: np.ndarray, logvar: np.ndarray, rng: np.random.Generator, noise=None
):
    """Reparameterized draw mean + exp(logvar/2) * eps; returns (sample, eps)."""
    logvar = np.clip(logvar, LOGVAR_MIN, LOGVAR_MAX)
    if noise is None:
        noise = rng.standard_normal(mean.shape)
    return mean + np.exp(0.5 * logvar) * noise, noise


@dataclass
class AdamState:
    """Bias-corrected Adam over a list of parameter arrays."""

    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: list = field(default_factory=list)
    v: list = field(default_factory=list)

    def init_like(self, params):
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        return self


def adam_update(params, grads, opt: AdamState):
    """One in-place Adam step; raises TrainingError on non-finite gradients."""
    if not opt.m:
        opt.init_like(params)
    opt.step += 1
    bias1 = 1.0 - opt.beta1**opt.step
    bias2 = 1.0 - opt.beta2**opt.step
    for p, g, m, v in zip(params, grads, opt.m, opt.v):
        if not np.all(np.isfinite(g)):
            raise TrainingError("non-finite gradient")
        m *= opt.beta1
        m += (1.0 - opt.beta1) * g
        v *= opt.beta2
        v += (1.0 - opt.beta2) * g * g
        p -= opt.learning_rate * (m / bias1) / (np.sqrt(v / bias2) + opt.eps)
    return params


def clip_grad_norm(grads, max_norm: float = 5.0):
    """Scale the gradient list so its global L2 norm is at most max_norm."""
    total = np.sqrt(sum(float((g * g).sum()) for g in grads))
    if total > max_norm and total > 0.0:
        scale = max_norm / total
        grads = [g * scale for g in grads]
    return grads


def bce(p: np.ndarray, target: np.ndarray, eps: float = 1e-12) -> float:
    """Binary cross-entropy summed over elements (soft targets allowed)."""
    p = np.clip(p, eps, 1.0 - eps)
    return float(-(target * np.log(p) + (1.0 - target) * np.log(1.0 - p)).sum())


def bce_logits(logits: np.ndarray, target: np.ndarray) -> float:
    """Numerically stable BCE from pre-sigmoid logits, summed over elements."""
    return float(
        (np.maximum(logits, 0.0) - logits * target + np.log1p(np.exp(-np.abs(logits)))).sum()
    )


def params_flat(param_lists) -> np.ndarray:
    """Concatenate parameter arrays into one float64 vector (checkpoint format)."""
    return np.concatenate([np.asarray(p, dtype=np.float64).ravel() for p in param_lists])


def params_unflatten(flat: np.ndarray, like):
    out = []
    idx = 0
    for p in like:
        n = p.size
        out.append(flat[idx : idx + n].reshape(p.shape))
        idx += n
    if idx != flat.size:
        raise ValueError("flat vector size does not match parameter shapes")
    return out


def save_checkpoint(path_prefix: str, named_params: dict):
    """Write <prefix>.bin (flat float64) plus <prefix>.json shape manifest."""
    manifest = []
    chunks = []
    for name, plist in named_params.items():
        for i, p in enumerate(plist):
            arr = np.asarray(p, dtype=np.float64)
            manifest.append({"name": f"{name}.{i}", "shape": list(arr.shape)})
            chunks.append(arr.ravel())
    flat = np.concatenate(chunks) if chunks else np.zeros(0)
    flat.tofile(f"{path_prefix}.bin")
    with open(f"{path_prefix}.json", "w") as fh:
        json.dump(manifest, fh, indent=2)


def load_checkpoint(path_prefix: str, named_params: dict):
    """Load a checkpoint written by save_checkpoint into the given arrays."""
    with open(f"{path_prefix}.json") as fh:
        manifest = json.load(fh)
    flat = np.fromfile(f"{path_prefix}.bin", dtype=np.float64)
    flat_params = [p for plist in named_params.values() for p in plist]
    if len(manifest) != len(flat_params):
        raise ValueError("checkpoint manifest does not match model structure")
    idx = 0
    for entry, p in zip(manifest, flat_params):
        n = int(np.prod(entry["shape"])) if entry["shape"] else 1
        p[...] = flat[idx : idx + n].reshape(entry["shape"])
        idx += n
