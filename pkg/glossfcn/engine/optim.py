"""
Adam optimizer with bias-corrected moment estimates.
"""

from dataclasses import dataclass, field
from typing import Dict, Mapping, Optional, Tuple

import numpy as np

from .tensor import Tensor


@dataclass
class AdamState:
    """Moment estimates and hyperparameters shared by every parameter"""

    lr: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step_count: int = 0
    first_moment: Dict[str, np.ndarray] = field(default_factory=dict)
    second_moment: Dict[str, np.ndarray] = field(default_factory=dict)


def adam_step(
    params: Mapping[str, np.ndarray],
    grads: Mapping[str, Optional[np.ndarray]],
    state: AdamState,
) -> Tuple[Mapping[str, np.ndarray], AdamState]:
    """Apply one Adam update in place and return (params, state).

    A missing gradient counts as zero, so the moments still decay.
    """
    state.step_count += 1
    bc1 = 1.0 - state.beta1**state.step_count
    bc2 = 1.0 - state.beta2**state.step_count

    for name, value in params.items():
        g = grads.get(name)
        if g is None:
            g = np.zeros_like(value)

        if name not in state.first_moment:
            state.first_moment[name] = np.zeros_like(value)
            state.second_moment[name] = np.zeros_like(value)

        m = state.first_moment[name]
        v = state.second_moment[name]
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * (g * g)

        m_hat = m / bc1
        v_hat = v / bc2
        value -= (state.lr * m_hat / (np.sqrt(v_hat) + state.eps)).astype(value.dtype, copy=False)

    return params, state


class Adam:
    """Optimizer bound to a fixed set of named tensors"""

    def __init__(self, params: Mapping[str, Tensor], lr: float = 1e-4, beta1: float = 0.9,
                 beta2: float = 0.999, eps: float = 1e-8):
        self.params = dict(params)
        self.state = AdamState(lr=lr, beta1=beta1, beta2=beta2, eps=eps)

    @property
    def lr(self) -> float:
        return self.state.lr

    @lr.setter
    def lr(self, value: float) -> None:
        self.state.lr = value

    def step(self) -> None:
        arrays = {name: t.data for name, t in self.params.items()}
        grads = {name: t.grad for name, t in self.params.items()}
        adam_step(arrays, grads, self.state)

    def zero_grad(self) -> None:
        for t in self.params.values():
            t.zero_grad()
