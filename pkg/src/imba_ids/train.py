"""Minibatch training loop, evaluation, finite-difference gradient checking,
and the strategy-comparison harness.

Randomness layout per run seed: stream 0 initializes parameters, stream 1
drives resampling, stream (2, epoch) shuffles, stream (3, epoch) draws
dropout masks. Identical config + seed + data therefore reproduce identical
parameters bit for bit.
"""

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .data import EncodedDataset, oversample, undersample
from .linalg import make_rng
from .losses import (
    LOSS_KINDS,
    LossSpec,
    inverse_frequency_weights,
    loss_grad_logits,
    loss_value,
)
from .metrics import ClassReport
from .model import MlpModel, backward, forward, init_mlp, predict
from .optim import Adam, SGD

OPTIMIZERS = ("adam", "sgd")
RESAMPLING = ("none", "over", "under")

_LOSS_ALIASES = {
    "ce": "cross_entropy",
    "as": "attack_sharing",
    "wce": "weighted_ce",
}


def normalize_loss_name(name: str) -> str:
    canon = _LOSS_ALIASES.get(name, name)
    if canon not in LOSS_KINDS:
        raise ValueError(f"loss must be one of {LOSS_KINDS} (or aliases {tuple(_LOSS_ALIASES)}), got {name!r}")
    return canon


@dataclass
class TrainConfig:
    """One experiment's knobs. Defaults are the reference setup: 10 hidden
    layers of 100 units, keep_prob 0.8, attack-sharing loss with lambda 10,
    adaptive-moment updates at learning rate 1e-4, batches of 128, 10 epochs.
    """

    hidden_width: int = 100
    hidden_layers: int = 10
    keep_prob: float = 0.8
    loss: str = "attack_sharing"
    lam: float = 10.0
    class_weights: tuple[float, ...] | None = None
    optimizer: str = "adam"
    learning_rate: float = 1e-4
    rho1: float = 0.9
    rho2: float = 0.999
    delta: float = 1e-8
    batch_size: int = 128
    epochs: int = 10
    seed: int = 0
    resampling: str = "none"

    def validate(self) -> None:
        """Raise ValueError naming the offending key."""
        if self.hidden_width < 1:
            raise ValueError(f"hidden_width must be >= 1, got {self.hidden_width}")
        if self.hidden_layers < 0:
            raise ValueError(f"hidden_layers must be >= 0, got {self.hidden_layers}")
        if not 0.0 < self.keep_prob <= 1.0:
            raise ValueError(f"keep_prob must be in (0, 1], got {self.keep_prob}")
        if self.loss not in LOSS_KINDS:
            raise ValueError(f"loss must be one of {LOSS_KINDS}, got {self.loss!r}")
        if self.lam < 0:
            raise ValueError(f"lam must be >= 0, got {self.lam}")
        if self.optimizer not in OPTIMIZERS:
            raise ValueError(f"optimizer must be one of {OPTIMIZERS}, got {self.optimizer!r}")
        if self.learning_rate <= 0:
            raise ValueError(f"learning_rate must be > 0, got {self.learning_rate}")
        if not 0.0 <= self.rho1 < 1.0:
            raise ValueError(f"rho1 must be in [0, 1), got {self.rho1}")
        if not 0.0 <= self.rho2 < 1.0:
            raise ValueError(f"rho2 must be in [0, 1), got {self.rho2}")
        if self.delta <= 0:
            raise ValueError(f"delta must be > 0, got {self.delta}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.epochs < 0:
            raise ValueError(f"epochs must be >= 0, got {self.epochs}")
        if self.resampling not in RESAMPLING:
            raise ValueError(f"resampling must be one of {RESAMPLING}, got {self.resampling!r}")
        if self.class_weights is not None and any(w < 0 for w in self.class_weights):
            raise ValueError("class_weights must be non-negative")

    def hidden_dims(self) -> list[int]:
        return [self.hidden_width] * self.hidden_layers

    def to_dict(self) -> dict:
        return {
            "hidden_width": self.hidden_width,
            "hidden_layers": self.hidden_layers,
            "keep_prob": self.keep_prob,
            "loss": self.loss,
            "lam": self.lam,
            "class_weights": list(self.class_weights) if self.class_weights is not None else None,
            "optimizer": self.optimizer,
            "learning_rate": self.learning_rate,
            "rho1": self.rho1,
            "rho2": self.rho2,
            "delta": self.delta,
            "batch_size": self.batch_size,
            "epochs": self.epochs,
            "seed": self.seed,
            "resampling": self.resampling,
        }


@dataclass
class TrainHistory:
    train_loss: list[float] = field(default_factory=list)
    eval_reports: list[ClassReport] = field(default_factory=list)
    epoch_seconds: list[float] = field(default_factory=list)

    def to_record(self) -> dict:
        return {
            "train_loss": list(self.train_loss),
            "eval_reports": [r.to_record() for r in self.eval_reports],
            "epoch_seconds": list(self.epoch_seconds),
        }


class TrainingDivergedError(RuntimeError):
    """Loss went non-finite. Carries where: global step, epoch, batch index."""

    def __init__(self, step: int, epoch: int, batch: int, loss: float):
        self.step = step
        self.epoch = epoch
        self.batch = batch
        self.loss = loss
        super().__init__(
            f"training diverged: loss {loss} at step {step} (epoch {epoch}, batch {batch})"
        )


def build_loss_spec(config: TrainConfig, class_counts: np.ndarray) -> LossSpec:
    """LossSpec for a config. Weighted CE without explicit weights falls back
    to inverse class frequency of the data actually being fit (post-resample)."""
    if config.loss == "weighted_ce":
        if config.class_weights is not None:
            weights = tuple(float(w) for w in config.class_weights)
        else:
            weights = tuple(inverse_frequency_weights(class_counts).tolist())
        return LossSpec(kind="weighted_ce", weights=weights)
    if config.loss == "attack_sharing":
        return LossSpec(kind="attack_sharing", lam=config.lam, benign_index=0)
    return LossSpec(kind="cross_entropy")


def _make_optimizer(config: TrainConfig, params):
    if config.optimizer == "adam":
        return Adam(params, zeta=config.learning_rate, rho1=config.rho1,
                    rho2=config.rho2, delta=config.delta)
    return SGD(learning_rate=config.learning_rate)


def _resample(config: TrainConfig, ds: EncodedDataset) -> EncodedDataset:
    if config.resampling == "over":
        return oversample(ds, make_rng(config.seed, 1))
    if config.resampling == "under":
        return undersample(ds, make_rng(config.seed, 1))
    return ds


def train(
    config: TrainConfig,
    train_ds: EncodedDataset,
    eval_ds: EncodedDataset | None = None,
) -> tuple[MlpModel, TrainHistory]:
    """Fit a fresh model on train_ds under config.

    Runs epochs * ceil(n / batch_size) optimizer steps with a fresh shuffle
    each epoch; the last batch of an epoch may be short. When eval_ds is
    given, an evaluation report is recorded after every epoch. A non-finite
    loss aborts immediately (TrainingDivergedError) rather than training on.
    """
    config.validate()
    if train_ds.n == 0:
        raise ValueError("training dataset is empty")

    ds = _resample(config, train_ds)
    spec = build_loss_spec(config, ds.class_counts())
    spec.check_num_classes(ds.num_classes)

    model = init_mlp(ds.features.shape[1], config.hidden_dims(), ds.num_classes,
                     make_rng(config.seed, 0))
    opt = _make_optimizer(config, model.params())
    history = TrainHistory()

    step = 0
    for epoch in range(config.epochs):
        t0 = time.perf_counter()
        order = make_rng(config.seed, 2, epoch).permutation(ds.n)
        drop_rng = make_rng(config.seed, 3, epoch)
        loss_sum = 0.0
        for batch, start in enumerate(range(0, ds.n, config.batch_size)):
            idx = order[start:start + config.batch_size]
            x, y = ds.features[idx], ds.labels[idx]
            _, cache = forward(model, x, keep_prob=config.keep_prob, mode="train", rng=drop_rng)
            loss = loss_value(spec, cache.log_probs, y)
            if not np.isfinite(loss):
                raise TrainingDivergedError(step, epoch, batch, loss)
            dlogits = loss_grad_logits(spec, cache.probs, cache.log_probs, y)
            grads = backward(model, cache, dlogits)
            opt.step(model.params(), grads)
            loss_sum += loss * idx.size
            step += 1
        history.train_loss.append(loss_sum / ds.n)
        history.epoch_seconds.append(time.perf_counter() - t0)
        if eval_ds is not None:
            history.eval_reports.append(evaluate(model, eval_ds))
    return model, history


def evaluate(model: MlpModel, ds: EncodedDataset, batch_size: int = 4096) -> ClassReport:
    """Eval-mode predictions over ds in bounded-memory batches, summarized as
    a ClassReport."""
    preds = np.empty(ds.n, dtype=np.int64)
    for start in range(0, ds.n, batch_size):
        stop = min(start + batch_size, ds.n)
        preds[start:stop] = predict(model, ds.features[start:stop])
    return ClassReport.from_predictions(preds, ds.labels, ds.schema.classes)


@dataclass(frozen=True)
class GradCheckResult:
    max_rel_err: float
    worst_param: str
    worst_index: int
    analytic: float
    numeric: float

    def __str__(self) -> str:
        return (
            f"max rel err {self.max_rel_err:.3e} at {self.worst_param}[{self.worst_index}] "
            f"(analytic {self.analytic:.6e}, numeric {self.numeric:.6e})"
        )


def gradient_check(
    model: MlpModel,
    spec: LossSpec,
    x: np.ndarray,
    labels: np.ndarray,
    step: float = 1e-5,
) -> GradCheckResult:
    """Compare backward() against central finite differences of the loss over
    every parameter coordinate, in eval mode (no dropout).

    Relative error uses a 1e-6 floor in the denominator so coordinates whose
    true gradient is exactly zero (dead units) do not divide rounding noise
    by itself. Meant for small nets; cost is 2 forwards per parameter.
    """
    x = np.asarray(x, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    _, cache = forward(model, x, mode="eval")
    dlogits = loss_grad_logits(spec, cache.probs, cache.log_probs, labels)
    grads = backward(model, cache, dlogits)

    def loss_at_current() -> float:
        _, c = forward(model, x, mode="eval")
        return loss_value(spec, c.log_probs, labels)

    names = []
    for i in range(len(model.layers)):
        names += [f"W{i}", f"b{i}"]

    worst = GradCheckResult(0.0, names[0], 0, 0.0, 0.0)
    for name, param, grad in zip(names, model.params(), grads):
        flat, gflat = param.ravel(), grad.ravel()
        for j in range(flat.size):
            orig = flat[j]
            flat[j] = orig + step
            f_plus = loss_at_current()
            flat[j] = orig - step
            f_minus = loss_at_current()
            flat[j] = orig
            numeric = (f_plus - f_minus) / (2.0 * step)
            analytic = gflat[j]
            rel = abs(analytic - numeric) / max(abs(analytic), abs(numeric), 1e-6)
            if rel > worst.max_rel_err:
                worst = GradCheckResult(rel, name, j, float(analytic), float(numeric))
    return worst


_STRATEGIES = {
    "ce": {"loss": "cross_entropy", "resampling": "none"},
    "as": {"loss": "attack_sharing", "resampling": "none"},
    "wce": {"loss": "weighted_ce", "resampling": "none"},
    "over": {"loss": "cross_entropy", "resampling": "over"},
    "under": {"loss": "cross_entropy", "resampling": "under"},
}
_STRATEGY_ALIASES = {
    "cross_entropy": "ce",
    "attack_sharing": "as",
    "weighted_ce": "wce",
    "ce+oversample": "over",
    "ce+undersample": "under",
    "oversample": "over",
    "undersample": "under",
}


def canonical_strategy(name: str) -> str:
    canon = _STRATEGY_ALIASES.get(name, name)
    if canon not in _STRATEGIES:
        valid = sorted(set(_STRATEGIES) | set(_STRATEGY_ALIASES))
        raise ValueError(f"unknown strategy {name!r}; valid names: {valid}")
    return canon


@dataclass
class StrategyResult:
    strategy: str
    report: ClassReport
    history: TrainHistory


def compare_strategies(
    config: TrainConfig,
    strategies: list[str],
    train_ds: EncodedDataset,
    eval_ds: EncodedDataset,
    threads: int = 1,
) -> list[StrategyResult]:
    """Train one model per strategy from the shared base config and seed, and
    evaluate all of them on the same eval set. Results come back in input
    order. Strategies share no mutable state, so threads > 1 runs them
    concurrently.
    """
    if not strategies:
        raise ValueError("strategy list is empty")
    canon = [canonical_strategy(s) for s in strategies]

    def run(name: str) -> StrategyResult:
        cfg = replace(config, **_STRATEGIES[name])
        model, history = train(cfg, train_ds)
        return StrategyResult(name, evaluate(model, eval_ds), history)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(run, canon))
    return [run(name) for name in canon]
