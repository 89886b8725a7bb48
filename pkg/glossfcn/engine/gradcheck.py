"""
Finite-difference gradient checking.
"""

from typing import Callable, Sequence

import numpy as np

from .tensor import Tensor


def numerical_gradient(fn: Callable[[], Tensor], target: Tensor, eps: float = 1e-6) -> np.ndarray:
    """Central differences of the scalar fn() with respect to target.data"""
    grad = np.zeros_like(target.data, dtype=np.float64)
    flat = target.data.reshape(-1)
    for i in range(flat.size):
        original = flat[i]
        flat[i] = original + eps
        plus = fn().item()
        flat[i] = original - eps
        minus = fn().item()
        flat[i] = original
        grad.reshape(-1)[i] = (plus - minus) / (2 * eps)
    return grad


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    scale = max(np.linalg.norm(analytic), np.linalg.norm(numeric), 1e-8)
    return float(np.linalg.norm(analytic - numeric) / scale)


def gradient_check(fn: Callable[[], Tensor], inputs: Sequence[Tensor], eps: float = 1e-6) -> float:
    """Largest relative error between backward() and finite differences over inputs"""
    for t in inputs:
        t.zero_grad()
    fn().backward()
    analytic = [np.zeros_like(t.data) if t.grad is None else t.grad.copy() for t in inputs]
    worst = 0.0
    for t, a in zip(inputs, analytic):
        worst = max(worst, relative_error(a, numerical_gradient(fn, t, eps)))
    return worst
