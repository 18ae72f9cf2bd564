"""Loss functions."""
from __future__ import annotations

import numpy as np

from gridcast.errors import EmptyInputError, LengthMismatchError


def mse_loss(pred: np.ndarray, target: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean squared error and its gradient with respect to pred.

    Shapes must match exactly; the gradient is 2 * (pred - target) / n
    where n is the total element count.
    """
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape:
        raise LengthMismatchError(
            f"pred shape {pred.shape} != target shape {target.shape}"
        )
    if pred.size == 0:
        raise EmptyInputError("mse_loss needs at least one element")
    diff = pred - target
    loss = float(np.mean(diff * diff))
    grad = 2.0 * diff / diff.size
    return loss, grad
