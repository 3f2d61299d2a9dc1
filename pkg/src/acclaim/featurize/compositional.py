"""Centered log-ratio transform for compositional feature vectors."""

from __future__ import annotations

import numpy as np

from ..errors import InvalidComposition


def clr_transform(proportions, epsilon: float = 0.0) -> np.ndarray:
    """CLR coordinates: log((p_k + eps) / g), g the geometric mean of p + eps.

    Accepts a single composition or a (n, K) batch. Output rows sum to zero;
    one coordinate is dropped downstream before model entry to avoid a
    singular design block. `epsilon` must be positive when any part is zero.
    """
    p = np.asarray(proportions, dtype=float)
    if np.any(p < 0):
        raise InvalidComposition("proportions must be nonnegative")
    if np.any(p + epsilon <= 0):
        raise InvalidComposition("zero parts need epsilon > 0")
    shifted = p + epsilon
    log_shifted = np.log(shifted)
    log_g = log_shifted.mean(axis=-1, keepdims=True)
    return log_shifted - log_g
