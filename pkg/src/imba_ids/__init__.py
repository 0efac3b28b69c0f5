"""Imbalance-aware intrusion detection: from-scratch MLP, attack-sharing loss,
adaptive-moment training, and strategy-comparison experiments on flow-record CSVs."""

__version__ = "0.1.0"

from .linalg import make_rng
from .model import MlpModel, init_mlp, forward, backward, predict
from .losses import (
    LossSpec,
    as_loss,
    ce_loss,
    inverse_frequency_weights,
    loss_grad_logits,
    loss_value,
    weighted_ce_loss,
)
from .optim import Adam, SGD
from .metrics import ClassReport, cba, confusion, imbalance_measure, precision_recall
from .train import TrainConfig, train, evaluate, gradient_check, compare_strategies

__all__ = [
    "make_rng",
    "MlpModel", "init_mlp", "forward", "backward", "predict",
    "LossSpec", "ce_loss", "as_loss", "weighted_ce_loss",
    "loss_value", "loss_grad_logits", "inverse_frequency_weights",
    "Adam", "SGD",
    "ClassReport", "cba", "confusion", "imbalance_measure", "precision_recall",
    "TrainConfig", "train", "evaluate", "gradient_check", "compare_strategies",
]
