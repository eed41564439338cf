import numpy as np

from ..utils.errors import ShapeError


class ImageTensor:
    """
    A (batch, channels, height, width)-style array with a gradient buffer of the same shape.
    Learnable parameters are ImageTensors; activations flow through the engine as plain arrays.
    """

    def __init__(self, values, grad=None):
        self.values = np.asarray(values)
        self.grad = None
        if grad is not None:
            self.accumulate(grad)

    @property
    def shape(self):
        return self.values.shape

    @property
    def size(self):
        return self.values.size

    @property
    def dtype(self):
        return self.values.dtype

    def zero_grad(self):
        self.grad = None

    def accumulate(self, grad):
        grad = np.asarray(grad)
        if grad.shape != self.values.shape:
            raise ShapeError(
                f"Gradient of shape {grad.shape} does not match values of shape {self.values.shape}"
            )
        if self.grad is None:
            self.grad = grad.astype(self.values.dtype, copy=True)
        else:
            self.grad += grad

    def astype(self, dtype):
        self.values = self.values.astype(dtype)
        if self.grad is not None:
            self.grad = self.grad.astype(dtype)
        return self

    def __repr__(self):
        return f"ImageTensor(shape={self.shape}, dtype={self.dtype})"
