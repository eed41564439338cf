"""
Adam with coupled L2 regularization: the decay term is added to the gradient
before the moment updates, so it is rescaled by the adaptive denominator.
"""

from dataclasses import dataclass, field

import numpy as np

from ..utils.errors import StateError

BETA1 = 0.9
BETA2 = 0.999
EPSILON = 1e-8


@dataclass
class AdamState:
    step: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)

    def copy(self):
        return AdamState(
            step=self.step,
            m={key: value.copy() for key, value in self.m.items()},
            v={key: value.copy() for key, value in self.v.items()},
        )


def adam_step(
    params,
    grads,
    state,
    lr,
    weight_decay=0.0,
    beta1=BETA1,
    beta2=BETA2,
    epsilon=EPSILON,
):
    """
    One Adam update over dicts of named arrays. Returns (new_params, new_state);
    the inputs are left untouched. Moments are zero-initialized on first use.
    """
    for key, values in params.items():
        if key not in grads:
            raise StateError(f"No gradient for parameter '{key}'")
        if np.shape(grads[key]) != np.shape(values):
            raise StateError(
                f"Gradient for '{key}' has shape {np.shape(grads[key])}, parameter has {np.shape(values)}"
            )
        for moments in (state.m, state.v):
            if key in moments and moments[key].shape != np.shape(values):
                raise StateError(
                    f"Optimizer state for '{key}' has shape {moments[key].shape}, parameter has {np.shape(values)}"
                )

    step = state.step + 1
    new_state = AdamState(step=step)
    new_params = {}
    correction1 = 1.0 - beta1**step
    correction2 = 1.0 - beta2**step

    for key, values in params.items():
        values = np.asarray(values)
        grad = np.asarray(grads[key], dtype=values.dtype)
        if weight_decay:
            grad = grad + weight_decay * values

        m = state.m.get(key)
        v = state.v.get(key)
        m = (1 - beta1) * grad if m is None else beta1 * m + (1 - beta1) * grad
        v = (1 - beta2) * grad * grad if v is None else beta2 * v + (1 - beta2) * grad * grad

        m_hat = m / correction1
        v_hat = v / correction2
        update = lr * m_hat / (np.sqrt(v_hat) + epsilon)

        new_params[key] = (values - update).astype(values.dtype, copy=False)
        new_state.m[key] = m.astype(values.dtype, copy=False)
        new_state.v[key] = v.astype(values.dtype, copy=False)

    return new_params, new_state


class Adam:
    """Drives adam_step over a ModelGraph's parameters and their accumulated gradients."""

    def __init__(self, model, weight_decay=0.0, beta1=BETA1, beta2=BETA2, epsilon=EPSILON, state=None):
        self.model = model
        self.weight_decay = weight_decay
        self.beta1 = beta1
        self.beta2 = beta2
        self.epsilon = epsilon
        self.state = state if state is not None else AdamState()

    def step(self, lr):
        tensors = self.model.parameters()
        params = {key: tensor.values for key, tensor in tensors.items()}
        grads = {
            key: tensor.grad if tensor.grad is not None else np.zeros_like(tensor.values)
            for key, tensor in tensors.items()
        }
        new_params, self.state = adam_step(
            params,
            grads,
            self.state,
            lr,
            self.weight_decay,
            self.beta1,
            self.beta2,
            self.epsilon,
        )
        for key, tensor in tensors.items():
            tensor.values = new_params[key]
