"""Dense float64 linear algebra and seeded randomness shared by every other module.

All arrays are 2-D row-major float64 unless stated otherwise. Randomness goes
through PCG64 generators built by make_rng, so replaying a seed reproduces
every mask and every init value-for-value on any platform.
"""

import numpy as np


def make_rng(*seed_parts: int) -> np.random.Generator:
    """Deterministic PCG64 generator keyed by one or more integers.

    Extra parts carve independent streams out of one run seed, e.g.
    make_rng(seed, 2, epoch) for the shuffle of a given epoch. A generator
    is single-owner: never share one across threads.
    """
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed_parts)))


def check_matrix(a: np.ndarray, name: str = "matrix") -> np.ndarray:
    """Require a 2-D float array; returns it as float64 without copying when possible."""
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {a.shape}")
    return a


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Matrix product with shape validation.

    Raises ValueError naming both shapes when the inner dimensions differ.
    """
    a = check_matrix(a, "left operand")
    b = check_matrix(b, "right operand")
    if a.shape[1] != b.shape[0]:
        raise ValueError(
            f"matmul shape mismatch: {a.shape[0]}x{a.shape[1]} @ {b.shape[0]}x{b.shape[1]}"
        )
    return a @ b


def bernoulli_mask(rng: np.random.Generator, n: int, keep_prob: float) -> np.ndarray:
    """Vector of n independent {0, 1} draws, each 1 with probability keep_prob."""
    if not 0.0 <= keep_prob <= 1.0:
        raise ValueError(f"keep_prob must be in [0, 1], got {keep_prob}")
    if n < 0:
        raise ValueError(f"mask length must be >= 0, got {n}")
    return (rng.random(n) < keep_prob).astype(np.float64)


def he_init(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    """(fan_out x fan_in) weight matrix, zero-mean normal with std sqrt(2 / fan_in).

    Fan-in scaling keeps ReLU activation variance roughly constant with depth.
    """
    if fan_in < 1 or fan_out < 1:
        raise ValueError(f"fan_in and fan_out must be >= 1, got {fan_in}, {fan_out}")
    return rng.standard_normal((fan_out, fan_in)) * np.sqrt(2.0 / fan_in)
