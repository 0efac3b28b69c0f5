"""Deep feedforward classifier: ReLU hidden layers with inverted dropout and a
softmax head, plus the exact reverse-mode gradients for all parameters."""

import json
from dataclasses import dataclass, field

import numpy as np

from .linalg import bernoulli_mask, check_matrix, he_init

CHECKPOINT_FORMAT_VERSION = 1


@dataclass
class LayerParams:
    """One dense layer: weights are (fan_out x fan_in), bias has length fan_out."""

    weights: np.ndarray
    bias: np.ndarray

    @property
    def fan_in(self) -> int:
        return self.weights.shape[1]

    @property
    def fan_out(self) -> int:
        return self.weights.shape[0]


@dataclass
class MlpModel:
    """Layer parameters plus the architecture they must chain through.

    layers holds the hidden layers in order followed by the output layer;
    consecutive fan_in/fan_out must match and the last fan_out is num_classes.
    """

    input_dim: int
    hidden_dims: tuple[int, ...]
    num_classes: int
    layers: list[LayerParams]

    def params(self) -> list[np.ndarray]:
        """Flat [W0, b0, W1, b1, ...] view of the parameter arrays (not copies)."""
        out = []
        for layer in self.layers:
            out.append(layer.weights)
            out.append(layer.bias)
        return out


@dataclass
class ForwardCache:
    """Everything backward needs: per-layer inputs, pre-activations, dropout
    masks (None when no mask was applied), and the head's probabilities."""

    inputs: list[np.ndarray]
    pre_acts: list[np.ndarray]
    masks: list[np.ndarray | None]
    probs: np.ndarray
    log_probs: np.ndarray
    keep_prob: float
    mode: str
    layer_dims: list[tuple[int, int]] = field(default_factory=list)


def init_mlp(
    input_dim: int,
    hidden_dims: tuple[int, ...] | list[int],
    num_classes: int,
    rng: np.random.Generator,
) -> MlpModel:
    """Fresh model with He-initialized weights and zero biases."""
    if input_dim < 1 or num_classes < 1:
        raise ValueError(f"need input_dim >= 1 and num_classes >= 1, got {input_dim}, {num_classes}")
    dims = [input_dim, *hidden_dims, num_classes]
    layers = []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        layers.append(LayerParams(he_init(rng, fan_in, fan_out), np.zeros(fan_out)))
    return MlpModel(input_dim, tuple(hidden_dims), num_classes, layers)


def softmax_log_probs(logits: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Row-wise (probs, log_probs) via max-shifted exponentials.

    log_probs stays finite for arbitrarily large logit spreads; probs can
    underflow to exactly 0 when a row's spread exceeds float64 exp range.
    """
    logits = check_matrix(logits, "logits")
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    log_probs = shifted - log_norm
    return np.exp(log_probs), log_probs


def forward(
    model: MlpModel,
    x: np.ndarray,
    keep_prob: float = 1.0,
    mode: str = "eval",
    rng: np.random.Generator | None = None,
) -> tuple[np.ndarray, ForwardCache]:
    """Run the network on a (batch x input_dim) matrix.

    Train mode masks each hidden layer's output with Bernoulli(keep_prob)
    draws and rescales the survivors by 1/keep_prob, so eval mode needs no
    adjustment. Masks are only drawn when keep_prob < 1. The raw input and
    the output logits are never masked. Eval mode ignores keep_prob and is a
    pure function of (model, x).
    """
    x = check_matrix(x, "input")
    if x.shape[1] != model.input_dim:
        raise ValueError(f"input has {x.shape[1]} columns, model expects {model.input_dim}")
    if mode not in ("train", "eval"):
        raise ValueError(f"mode must be 'train' or 'eval', got {mode!r}")
    use_dropout = mode == "train" and keep_prob < 1.0
    if mode == "train":
        if not 0.0 < keep_prob <= 1.0:
            raise ValueError(f"train-mode keep_prob must be in (0, 1], got {keep_prob}")
        if use_dropout and rng is None:
            raise ValueError("train-mode forward with keep_prob < 1 needs an rng")

    inputs, pre_acts, masks = [], [], []
    act = x
    for layer in model.layers[:-1]:
        inputs.append(act)
        z = act @ layer.weights.T + layer.bias
        act = np.maximum(z, 0.0)
        pre_acts.append(z)
        if use_dropout:
            mask = bernoulli_mask(rng, act.size, keep_prob).reshape(act.shape)
            act = act * mask / keep_prob
            masks.append(mask)
        else:
            masks.append(None)
    inputs.append(act)
    out = model.layers[-1]
    logits = act @ out.weights.T + out.bias
    probs, log_probs = softmax_log_probs(logits)
    cache = ForwardCache(
        inputs, pre_acts, masks, probs, log_probs, keep_prob, mode,
        layer_dims=[(l.fan_in, l.fan_out) for l in model.layers],
    )
    return probs, cache


def backward(model: MlpModel, cache: ForwardCache, dloss_dlogits: np.ndarray) -> list[np.ndarray]:
    """Gradients of the loss for every parameter, as [dW0, db0, dW1, db1, ...].

    dloss_dlogits is the (batch x num_classes) gradient at the softmax input,
    batch averaging included. Dropout masks stored in the cache gate the
    gradient exactly as they gated the activations; the ReLU subgradient is 0
    at pre-activations that are exactly 0.
    """
    dloss_dlogits = check_matrix(dloss_dlogits, "dloss_dlogits")
    if cache.layer_dims != [(l.fan_in, l.fan_out) for l in model.layers]:
        raise ValueError("cache does not match this model's architecture")
    if dloss_dlogits.shape != cache.probs.shape:
        raise ValueError(
            f"dloss_dlogits shape {dloss_dlogits.shape} != probs shape {cache.probs.shape}"
        )
    if len(cache.inputs) != len(model.layers):
        raise ValueError("stale cache: layer count mismatch")

    grads: list[np.ndarray] = [np.empty(0)] * (2 * len(model.layers))
    delta = dloss_dlogits
    out_index = len(model.layers) - 1
    grads[2 * out_index] = delta.T @ cache.inputs[out_index]
    grads[2 * out_index + 1] = delta.sum(axis=0)
    d_act = delta @ model.layers[out_index].weights

    for i in range(out_index - 1, -1, -1):
        mask = cache.masks[i]
        if mask is not None:
            d_act = d_act * mask / cache.keep_prob
        d_z = d_act * (cache.pre_acts[i] > 0.0)
        grads[2 * i] = d_z.T @ cache.inputs[i]
        grads[2 * i + 1] = d_z.sum(axis=0)
        if i > 0:
            d_act = d_z @ model.layers[i].weights
    return grads


def predict(model: MlpModel, x: np.ndarray) -> np.ndarray:
    """Eval-mode class labels, argmax per row with ties broken toward the
    lowest class index (so the benign class, index 0, wins exact ties)."""
    probs, _ = forward(model, x, mode="eval")
    return np.argmax(probs, axis=1)


def save_checkpoint(model: MlpModel, path) -> None:
    """Write the model to an .npz container; round-trips value-exact."""
    meta = {
        "format_version": CHECKPOINT_FORMAT_VERSION,
        "input_dim": model.input_dim,
        "hidden_dims": list(model.hidden_dims),
        "num_classes": model.num_classes,
    }
    arrays = {}
    for i, layer in enumerate(model.layers):
        arrays[f"w{i}"] = layer.weights
        arrays[f"b{i}"] = layer.bias
    np.savez(path, meta=np.array(json.dumps(meta)), **arrays)


def load_checkpoint(path) -> MlpModel:
    """Load a model written by save_checkpoint, checking the format version."""
    with np.load(path) as archive:
        meta = json.loads(str(archive["meta"][()]))
        if meta.get("format_version") != CHECKPOINT_FORMAT_VERSION:
            raise ValueError(
                f"unsupported checkpoint format_version {meta.get('format_version')!r}, "
                f"expected {CHECKPOINT_FORMAT_VERSION}"
            )
        n_layers = len(meta["hidden_dims"]) + 1
        layers = [
            LayerParams(archive[f"w{i}"].astype(np.float64), archive[f"b{i}"].astype(np.float64))
            for i in range(n_layers)
        ]
    return MlpModel(meta["input_dim"], tuple(meta["hidden_dims"]), meta["num_classes"], layers)
