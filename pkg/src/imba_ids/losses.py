"""Loss strategies over log-probabilities: plain cross-entropy, the
attack-sharing variant that adds a benign-vs-attack penalty, and a
class-weighted cross-entropy used as the cost-sensitive baseline.

All losses consume log-probabilities from the model's stable softmax so
confident predictions cannot underflow, and all gradients are taken with
respect to the softmax input logits, averaged over the batch.
"""

from dataclasses import dataclass

import numpy as np

# Benign probability is clamped to <= 1 - BENIGN_CLAMP before log(1 - p);
# the penalty is singular at p_benign == 1.
BENIGN_CLAMP = 1e-12

LOSS_KINDS = ("cross_entropy", "attack_sharing", "weighted_ce")


@dataclass(frozen=True)
class LossSpec:
    """Tagged choice of loss strategy.

    kind 'attack_sharing' uses lam; kind 'weighted_ce' uses weights (one
    positive weight per class). The benign class sits at index 0 internally.
    """

    kind: str
    lam: float = 0.0
    weights: tuple[float, ...] | None = None
    benign_index: int = 0

    def __post_init__(self):
        if self.kind not in LOSS_KINDS:
            raise ValueError(f"unknown loss kind {self.kind!r}, expected one of {LOSS_KINDS}")
        if self.lam < 0:
            raise ValueError(f"lambda must be >= 0, got {self.lam}")
        if self.kind == "weighted_ce":
            if self.weights is None:
                raise ValueError("weighted_ce needs a weights vector")
            if any(w <= 0 for w in self.weights):
                raise ValueError(f"class weights must be positive, got {self.weights}")

    def check_num_classes(self, num_classes: int) -> None:
        if self.kind == "attack_sharing" and num_classes < 2:
            raise ValueError("attack_sharing needs at least 2 classes")
        if self.weights is not None and len(self.weights) != num_classes:
            raise ValueError(
                f"weights length {len(self.weights)} != num_classes {num_classes}"
            )
        if not 0 <= self.benign_index < num_classes:
            raise ValueError(f"benign_index {self.benign_index} out of range for c={num_classes}")


def _check_labels(log_probs: np.ndarray, labels: np.ndarray) -> np.ndarray:
    labels = np.asarray(labels)
    c = log_probs.shape[1]
    if labels.shape != (log_probs.shape[0],):
        raise ValueError(f"labels shape {labels.shape} != ({log_probs.shape[0]},)")
    bad = np.flatnonzero((labels < 0) | (labels >= c))
    if bad.size:
        raise ValueError(f"label {labels[bad[0]]} at row {bad[0]} outside [0, {c})")
    return labels.astype(np.int64)


def ce_loss(log_probs: np.ndarray, labels: np.ndarray) -> float:
    """Mean negative log-likelihood of the true classes."""
    labels = _check_labels(log_probs, labels)
    n = log_probs.shape[0]
    return float(-log_probs[np.arange(n), labels].mean())


def _benign_penalty_terms(log_probs, labels, benign_index):
    """Per-sample log p_benign (benign rows) or log(1 - p_benign) (attack rows)."""
    log_pb = log_probs[:, benign_index]
    # -expm1(log p) is 1 - p computed without cancellation; floor matches the clamp.
    one_minus_pb = np.maximum(-np.expm1(log_pb), BENIGN_CLAMP)
    return np.where(labels == benign_index, log_pb, np.log(one_minus_pb))


def as_loss(
    log_probs: np.ndarray, labels: np.ndarray, lam: float, benign_index: int = 0
) -> float:
    """Cross-entropy plus a lam-weighted benign-vs-attack binary penalty.

    The extra term charges -log p_benign on benign samples and
    -log(1 - p_benign) on attack samples, so labeling an attack as benign
    costs more than confusing two attack classes. lam=0 reduces to ce_loss
    exactly.
    """
    if lam < 0:
        raise ValueError(f"lambda must be >= 0, got {lam}")
    labels = _check_labels(log_probs, labels)
    ce = ce_loss(log_probs, labels)
    penalty = _benign_penalty_terms(log_probs, labels, benign_index)
    return float(ce - lam * penalty.mean())


def weighted_ce_loss(log_probs: np.ndarray, labels: np.ndarray, weights) -> float:
    """Cross-entropy with a per-class weight on each sample's log-likelihood."""
    labels = _check_labels(log_probs, labels)
    weights = np.asarray(weights, dtype=np.float64)
    if weights.shape != (log_probs.shape[1],):
        raise ValueError(f"weights shape {weights.shape} != ({log_probs.shape[1]},)")
    if np.any(weights <= 0):
        raise ValueError("class weights must be positive")
    n = log_probs.shape[0]
    return float(-(weights[labels] * log_probs[np.arange(n), labels]).mean())


def inverse_frequency_weights(class_counts) -> np.ndarray:
    """Per-class n/n_i weights rescaled to mean 1; counts must all be positive."""
    counts = np.asarray(class_counts, dtype=np.float64)
    if np.any(counts <= 0):
        raise ValueError(f"every class needs a positive count, got {class_counts}")
    raw = counts.sum() / counts
    return raw / raw.mean()


def loss_value(spec: LossSpec, log_probs: np.ndarray, labels: np.ndarray) -> float:
    """Evaluate the loss selected by spec."""
    spec.check_num_classes(log_probs.shape[1])
    if spec.kind == "cross_entropy":
        return ce_loss(log_probs, labels)
    if spec.kind == "attack_sharing":
        return as_loss(log_probs, labels, spec.lam, spec.benign_index)
    return weighted_ce_loss(log_probs, labels, spec.weights)


def loss_grad_logits(
    spec: LossSpec, probs: np.ndarray, log_probs: np.ndarray, labels: np.ndarray
) -> np.ndarray:
    """Gradient of the selected loss with respect to the softmax input logits,
    averaged over the batch. For cross-entropy this is (p - onehot(y)) / N."""
    spec.check_num_classes(probs.shape[1])
    labels = _check_labels(log_probs, labels)
    n, c = probs.shape
    rows = np.arange(n)

    grad = probs.copy()
    grad[rows, labels] -= 1.0

    if spec.kind == "weighted_ce":
        weights = np.asarray(spec.weights, dtype=np.float64)
        grad *= weights[labels][:, None]
    elif spec.kind == "attack_sharing" and spec.lam != 0.0:
        b = spec.benign_index
        benign = labels == b
        # Benign rows add lam * (p - e_b): the same pull as cross-entropy
        # toward the benign class.
        grad[benign] += spec.lam * probs[benign]
        grad[benign, b] -= spec.lam
        # Attack rows add lam * p_b / (1 - p_b) * (e_b - p), pushing
        # probability mass off the benign class.
        pb = probs[~benign, b]
        one_minus_pb = np.maximum(-np.expm1(log_probs[~benign, b]), BENIGN_CLAMP)
        coef = spec.lam * pb / one_minus_pb
        grad[~benign] -= coef[:, None] * probs[~benign]
        attack_rows = rows[~benign]
        grad[attack_rows, b] += coef
    return grad / n
