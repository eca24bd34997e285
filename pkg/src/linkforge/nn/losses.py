"""Training objective and monitored metric.

MSE is the only differentiated objective; BER is monitored per epoch
but never enters the gradient path (it has no useful subgradient).
"""

import numpy as np


def mse_loss(pred: np.ndarray, target: np.ndarray):
    """Mean squared error over all elements and its gradient w.r.t. pred.

    grad = 2 * (pred - target) / element_count.
    """
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape:
        raise ValueError(f"shape mismatch: {pred.shape} vs {target.shape}")
    diff = pred - target
    loss = float(np.mean(diff * diff))
    grad = (2.0 / diff.size) * diff
    return loss, grad


def metric_ber(pred: np.ndarray, target: np.ndarray) -> float:
    """Bit error rate between sign decisions of pred and ±1 targets.

    A soft value of exactly 0 decides +1 (bit 0), matching the decoder's
    tie-break convention.
    """
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape:
        raise ValueError(f"shape mismatch: {pred.shape} vs {target.shape}")
    hard = np.where(pred >= 0.0, 1.0, -1.0)
    return float(np.count_nonzero(hard != np.sign(target)) / pred.size)
