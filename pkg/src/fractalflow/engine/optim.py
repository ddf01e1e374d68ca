from dataclasses import dataclass, field

import numpy as np


@dataclass
class AdamState:
    step_count: int = 0
    first_moment: list = field(default_factory=list)
    second_moment: list = field(default_factory=list)
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8

    @classmethod
    def for_params(cls, params, beta1=0.9, beta2=0.999, epsilon=1e-8):
        return cls(
            step_count=0,
            first_moment=[np.zeros_like(p.data) for p in params],
            second_moment=[np.zeros_like(p.data) for p in params],
            beta1=beta1,
            beta2=beta2,
            epsilon=epsilon,
        )


def adam_step(params, state, lr):
    """One bias-corrected Adam update, applied in place.

    Gradients are read but not cleared.
    """
    params = list(params)
    if len(params) != len(state.first_moment) or len(params) != len(state.second_moment):
        raise ValueError("adam_step: parameter list does not match optimizer state")
    for p, m, v in zip(params, state.first_moment, state.second_moment):
        if p.data.shape != m.shape or p.data.shape != v.shape:
            raise ValueError(f"adam_step: state shape {m.shape} does not match parameter {p.data.shape}")
        if p.grad is None:
            raise ValueError("adam_step: parameter has no gradient")

    state.step_count += 1
    t = state.step_count
    b1, b2 = state.beta1, state.beta2
    step_size = lr / (1.0 - b1**t)
    bias2 = 1.0 - b2**t
    for p, m, v in zip(params, state.first_moment, state.second_moment):
        g = p.grad
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * (g * g)
        p.data -= step_size * m / (np.sqrt(v / bias2) + state.epsilon)


class Adam:
    """Thin stateful wrapper around :func:`adam_step`."""

    def __init__(self, params, lr=1e-4, beta1=0.9, beta2=0.999, epsilon=1e-8):
        self.params = list(params)
        self.lr = lr
        self.state = AdamState.for_params(self.params, beta1, beta2, epsilon)

    def step(self):
        adam_step(self.params, self.state, self.lr)

    def zero_grad(self):
        for p in self.params:
            p.zero_grad()
