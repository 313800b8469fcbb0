"""ADAM optimizer and the step-decay learning-rate schedule."""

from __future__ import annotations

import numpy as np

from ..errors import ConfigurationError


def lr_schedule(base_lr: float, epoch: int, decay: float = 0.1, interval: int = 15) -> float:
    """Learning rate decayed by ``decay`` every ``interval`` epochs."""
    if epoch < 0:
        raise ConfigurationError(f"epoch must be nonnegative, got {epoch}")
    return base_lr * decay ** (epoch // interval)


class Adam:
    """Adaptive moment estimation with bias correction.

    ``params`` maps names to arrays updated in place; gradient dicts passed
    to :meth:`step` must carry the same keys and shapes. beta1 defaults to
    the training recipe's high momentum of 0.95.
    """

    def __init__(self, params: dict[str, np.ndarray], lr: float,
                 beta1: float = 0.95, beta2: float = 0.999, eps: float = 1e-8):
        self.params = params
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}

    def step(self, grads: dict[str, np.ndarray]) -> None:
        if set(grads) != set(self.params):
            raise ConfigurationError("gradient keys do not match parameter keys")
        self.t += 1
        bc1 = 1.0 - self.beta1 ** self.t
        bc2 = 1.0 - self.beta2 ** self.t
        for k, p in self.params.items():
            g = grads[k]
            if g.shape != p.shape:
                raise ConfigurationError(
                    f"gradient shape {g.shape} != parameter shape {p.shape} for '{k}'")
            m = self.m[k]
            v = self.v[k]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * (g * g)
            p -= self.lr * (m / bc1) / (np.sqrt(v / bc2) + self.eps)
