"""Parameter update rules: plain SGD and adaptive-moment estimation.

Both operate in place on a list of parameter arrays and a parallel list of
gradient arrays, the layout model.params() produces.
"""

import numpy as np


def _check_shapes(stored, arrays, what: str) -> None:
    if len(stored) != len(arrays):
        raise ValueError(f"{what}: expected {len(stored)} arrays, got {len(arrays)}")
    for i, (s, a) in enumerate(zip(stored, arrays)):
        if s.shape != np.shape(a):
            raise ValueError(f"{what}: array {i} has shape {np.shape(a)}, expected {s.shape}")


class Adam:
    """Adaptive-moment updates with read-time bias correction.

    s and r hold exponentially decaying averages of gradients and squared
    gradients; they are stored uncorrected, and each step divides by
    (1 - rho^t) when computing the update. The stabilizer delta sits outside
    the square root. Moments persist until the caller makes a new optimizer.
    """

    def __init__(self, params, zeta: float = 0.01, rho1: float = 0.9,
                 rho2: float = 0.999, delta: float = 1e-8):
        if not 0.0 < rho1 < 1.0 or not 0.0 < rho2 < 1.0:
            raise ValueError(f"rho1 and rho2 must be in (0, 1), got {rho1}, {rho2}")
        if zeta <= 0:
            raise ValueError(f"step size zeta must be > 0, got {zeta}")
        if delta <= 0:
            raise ValueError(f"stabilizer delta must be > 0, got {delta}")
        self.zeta = zeta
        self.rho1 = rho1
        self.rho2 = rho2
        self.delta = delta
        self.s = [np.zeros_like(np.asarray(p, dtype=np.float64)) for p in params]
        self.r = [np.zeros_like(m) for m in self.s]
        self.t = 0

    def step(self, params: list, grads: list) -> None:
        """One update: advance t, refresh both moments, apply the
        bias-corrected step to every parameter array in place."""
        _check_shapes(self.s, params, "adam params")
        _check_shapes(self.s, grads, "adam grads")
        self.t += 1
        c1 = 1.0 - self.rho1 ** self.t
        c2 = 1.0 - self.rho2 ** self.t
        for p, g, s, r in zip(params, grads, self.s, self.r):
            s *= self.rho1
            s += (1.0 - self.rho1) * g
            r *= self.rho2
            r += (1.0 - self.rho2) * np.square(g)
            p -= self.zeta * (s / c1) / (np.sqrt(r / c2) + self.delta)


class SGD:
    """Constant-rate gradient descent: theta <- theta - lr * g."""

    def __init__(self, learning_rate: float):
        if learning_rate <= 0:
            raise ValueError(f"learning_rate must be > 0, got {learning_rate}")
        self.learning_rate = learning_rate

    def step(self, params: list, grads: list) -> None:
        if len(params) != len(grads):
            raise ValueError(f"sgd: {len(params)} params vs {len(grads)} grads")
        for p, g in zip(params, grads):
            if np.shape(p) != np.shape(g):
                raise ValueError(f"sgd shape mismatch: {np.shape(p)} vs {np.shape(g)}")
            p -= self.learning_rate * g
