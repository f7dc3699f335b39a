"""Adam optimizer with the step learning-rate schedule used for training:
the rate starts at its configured value and is multiplied by a fixed ratio
(default 0.2) every fixed number of epochs (default 5)."""

from __future__ import annotations

import numpy as np

from .tensor import Tensor


def scheduled_lr(base_lr: float, epoch: int, ratio: float = 0.2, every: int = 5) -> float:
    return base_lr * ratio ** (epoch // every)


def adam_step(value, grad, m, v, t: int, lr: float, beta1: float, beta2: float, eps: float):
    """One bias-corrected Adam update. Mutates m and v, returns the new value."""
    m *= beta1
    m += (1.0 - beta1) * grad
    v *= beta2
    v += (1.0 - beta2) * grad * grad
    m_hat = m / (1.0 - beta1**t)
    v_hat = v / (1.0 - beta2**t)
    return value - lr * m_hat / (np.sqrt(v_hat) + eps)


class Adam:
    def __init__(self, params: dict, lr: float = 1e-3, betas=(0.9, 0.999), eps: float = 1e-8):
        self.lr = lr
        self.beta1, self.beta2 = betas
        self.eps = eps
        self.t = 0
        self._params: dict[str, Tensor] = {}
        self._m: dict[str, np.ndarray] = {}
        self._v: dict[str, np.ndarray] = {}
        for name, tensor in params.items():
            self.register(name, tensor)

    def register(self, name: str, tensor: Tensor):
        """Track a parameter; safe to call for lazily created weights."""
        if name in self._params:
            return
        self._params[name] = tensor
        self._m[name] = np.zeros(tensor.shape)
        self._v[name] = np.zeros(tensor.shape)

    def step(self):
        self.t += 1
        for name, p in self._params.items():
            if p.grad is None:
                continue
            p.values = adam_step(
                p.values, p.grad, self._m[name], self._v[name],
                self.t, self.lr, self.beta1, self.beta2, self.eps,
            )

    def zero_grad(self):
        for p in self._params.values():
            p.grad = None

    def state_arrays(self):
        """Optimizer state as flat named arrays (for checkpointing)."""
        out = {"optim/t": np.array([self.t], dtype=np.int64)}
        for name in self._params:
            out[f"optim/m/{name}"] = self._m[name]
            out[f"optim/v/{name}"] = self._v[name]
        return out

    def load_state_arrays(self, arrays: dict):
        self.t = int(arrays["optim/t"][0])
        for name in self._params:
            self._m[name] = np.array(arrays[f"optim/m/{name}"], dtype=np.float64)
            self._v[name] = np.array(arrays[f"optim/v/{name}"], dtype=np.float64)
