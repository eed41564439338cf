import numpy as np

from ..utils.errors import ShapeError


def l1_loss(output, target):
    """
    Mean absolute error over every element, with its gradient sign(O - P) / count.
    The loss is accumulated in float64; the gradient keeps the output's dtype.
    """
    output = np.asarray(output)
    target = np.asarray(target)
    if output.shape != target.shape:
        raise ShapeError(f"l1_loss needs identical shapes, got {output.shape} and {target.shape}")

    diff = output.astype(np.float64) - target.astype(np.float64)
    loss = float(np.abs(diff).mean())
    grad = (np.sign(diff) / diff.size).astype(output.dtype, copy=False)
    return loss, grad
