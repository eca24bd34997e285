"""Adam optimizer (canonical recurrences, bias-corrected)."""

import numpy as np


class Adam:
    """Holds first/second moment estimates for a fixed parameter list.

    ``step(grads)`` applies, elementwise and in place on the tracked
    parameter arrays:

        m <- b1*m + (1-b1)*g        mhat = m / (1 - b1^t)
        v <- b2*v + (1-b2)*g^2      vhat = v / (1 - b2^t)
        theta <- theta - lr * mhat / (sqrt(vhat) + eps)

    with the step counter t incremented once per call.
    """

    def __init__(self, params, lr: float = 1e-3, beta1: float = 0.9,
                 beta2: float = 0.999, epsilon: float = 1e-8):
        if not params:
            raise ValueError("no parameters to optimize")
        if not 0.0 <= beta1 < 1.0 or not 0.0 <= beta2 < 1.0:
            raise ValueError("betas must lie in [0, 1)")
        self.params = list(params)
        self.lr = float(lr)
        self.beta1 = float(beta1)
        self.beta2 = float(beta2)
        self.epsilon = float(epsilon)
        self.t = 0
        self.m = [np.zeros_like(p) for p in self.params]
        self.v = [np.zeros_like(p) for p in self.params]

    def step(self, grads) -> None:
        grads = list(grads)
        if len(grads) != len(self.params):
            raise ValueError(
                f"expected {len(self.params)} gradients, got {len(grads)}"
            )
        self.t += 1
        c1 = 1.0 - self.beta1 ** self.t
        c2 = 1.0 - self.beta2 ** self.t
        for p, g, m, v in zip(self.params, grads, self.m, self.v):
            g = np.asarray(g, dtype=np.float64)
            if g.shape != p.shape:
                raise ValueError(f"gradient shape {g.shape} != param {p.shape}")
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * (g * g)
            p -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.epsilon)


def adam_step(params, grads, state: Adam) -> Adam:
    """Functional wrapper: one optimizer step on ``state`` (mutated, returned)."""
    params = list(params)
    if len(params) != len(state.params) or any(
        p is not q for p, q in zip(params, state.params)
    ):
        raise ValueError("params do not match the optimizer state")
    state.step(grads)
    return state
