"""
Dense tensor with tape-based reverse-mode automatic differentiation.

Every op records its parents and a closure mapping the output gradient to
one gradient per parent. `backward` walks the recorded graph once in
reverse topological order; only leaf tensors keep their `.grad`, so calling
`backward` twice without zeroing adds the two results.
"""

from contextlib import contextmanager
from typing import Callable, Iterable, Optional, Sequence, Tuple, Union

import numpy as np

from ..errors import NonFiniteError, UsageError

ArrayLike = Union[np.ndarray, float, int, Sequence]

_DEFAULT_DTYPE = np.dtype(np.float32)
_GRAD_ENABLED = True


def get_default_dtype() -> np.dtype:
    return _DEFAULT_DTYPE


def set_default_dtype(dtype) -> None:
    """Switch between 32-bit training precision and 64-bit checking precision"""
    global _DEFAULT_DTYPE
    dtype = np.dtype(dtype)
    if dtype not in (np.dtype(np.float32), np.dtype(np.float64)):
        raise UsageError(f"Unsupported dtype {dtype}, use float32 or float64")
    _DEFAULT_DTYPE = dtype


@contextmanager
def precision(dtype):
    """Temporarily change the default dtype (64-bit gradient checks)"""
    previous = _DEFAULT_DTYPE
    set_default_dtype(dtype)
    try:
        yield
    finally:
        set_default_dtype(previous)


@contextmanager
def no_grad():
    """Run ops without recording the tape"""
    global _GRAD_ENABLED
    previous = _GRAD_ENABLED
    _GRAD_ENABLED = False
    try:
        yield
    finally:
        _GRAD_ENABLED = previous


def is_grad_enabled() -> bool:
    return _GRAD_ENABLED


def _unbroadcast(grad: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
    """Sum a broadcast gradient back down to `shape`"""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, extent in enumerate(shape):
        if extent == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


BackwardFn = Callable[[np.ndarray], Tuple[Optional[np.ndarray], ...]]


class Tensor:
    """n-dimensional real array with an optional gradient"""

    def __init__(self, data: ArrayLike, requires_grad: bool = False, dtype=None):
        if dtype is None:
            if isinstance(data, np.ndarray) and np.issubdtype(data.dtype, np.floating):
                dtype = data.dtype
            else:
                dtype = _DEFAULT_DTYPE
        self.data: np.ndarray = np.array(data, dtype=dtype)
        self.requires_grad = requires_grad
        self.grad: Optional[np.ndarray] = None
        self._parents: Tuple["Tensor", ...] = ()
        self._backward: Optional[BackwardFn] = None
        self._op = ""

    # ── construction helpers ──

    @classmethod
    def _from_op(
        cls, data: np.ndarray, parents: Iterable["Tensor"], backward: BackwardFn, op: str
    ) -> "Tensor":
        """Wrap an op result, recording the tape entry when any parent needs grad"""
        if not np.all(np.isfinite(data)):
            raise NonFiniteError(f"Non-finite values produced by {op}")
        parents = tuple(parents)
        out = cls.__new__(cls)
        out.data = np.asarray(data)
        out.requires_grad = False
        out.grad = None
        out._parents = ()
        out._backward = None
        out._op = op
        if _GRAD_ENABLED and any(p.requires_grad for p in parents):
            out.requires_grad = True
            out._parents = parents
            out._backward = backward
        return out

    def _lift(self, other: ArrayLike) -> "Tensor":
        if isinstance(other, Tensor):
            return other
        return Tensor(np.asarray(other, dtype=self.data.dtype))

    # ── properties ──

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def dtype(self) -> np.dtype:
        return self.data.dtype

    @property
    def size(self) -> int:
        return self.data.size

    @property
    def is_leaf(self) -> bool:
        return not self._parents

    def item(self) -> float:
        return float(self.data.reshape(-1)[0]) if self.data.size == 1 else float("nan")

    def numpy(self) -> np.ndarray:
        return self.data

    def detach(self) -> "Tensor":
        return Tensor(self.data, dtype=self.data.dtype)

    def zero_grad(self) -> None:
        self.grad = None

    def __repr__(self) -> str:
        flag = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor(shape={self.shape}, dtype={self.dtype}{flag})"

    # ── autodiff ──

    def backward(self) -> None:
        """Populate `.grad` on every leaf that requires it"""
        if self.data.size != 1:
            raise UsageError(f"backward() needs a scalar loss, got shape {self.shape}")
        if not self.requires_grad:
            raise UsageError("backward() called on a tensor that does not require grad")

        # iterative DFS keeps deep graphs clear of the recursion limit
        order = []
        visited = set()
        stack = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in visited:
                continue
            visited.add(id(node))
            stack.append((node, True))
            for parent in reversed(node._parents):
                if parent.requires_grad and id(parent) not in visited:
                    stack.append((parent, False))

        grads = {id(self): np.ones_like(self.data)}
        for node in reversed(order):
            grad = grads.pop(id(node), None)
            if grad is None:
                continue
            if node.is_leaf:
                node.grad = grad.copy() if node.grad is None else node.grad + grad
                continue
            for parent, parent_grad in zip(node._parents, node._backward(grad)):
                if parent_grad is None or not parent.requires_grad:
                    continue
                key = id(parent)
                grads[key] = parent_grad if key not in grads else grads[key] + parent_grad

    # ── elementwise arithmetic ──

    def __add__(self, other: ArrayLike) -> "Tensor":
        other = self._lift(other)
        a_shape, b_shape = self.shape, other.shape
        return Tensor._from_op(
            self.data + other.data,
            (self, other),
            lambda g: (_unbroadcast(g, a_shape), _unbroadcast(g, b_shape)),
            "add",
        )

    __radd__ = __add__

    def __sub__(self, other: ArrayLike) -> "Tensor":
        other = self._lift(other)
        a_shape, b_shape = self.shape, other.shape
        return Tensor._from_op(
            self.data - other.data,
            (self, other),
            lambda g: (_unbroadcast(g, a_shape), _unbroadcast(-g, b_shape)),
            "sub",
        )

    def __rsub__(self, other: ArrayLike) -> "Tensor":
        return self._lift(other) - self

    def __mul__(self, other: ArrayLike) -> "Tensor":
        other = self._lift(other)
        a, b = self.data, other.data
        return Tensor._from_op(
            a * b,
            (self, other),
            lambda g: (_unbroadcast(g * b, a.shape), _unbroadcast(g * a, b.shape)),
            "mul",
        )

    __rmul__ = __mul__

    def __truediv__(self, other: ArrayLike) -> "Tensor":
        other = self._lift(other)
        a, b = self.data, other.data
        return Tensor._from_op(
            a / b,
            (self, other),
            lambda g: (_unbroadcast(g / b, a.shape), _unbroadcast(-g * a / (b * b), b.shape)),
            "div",
        )

    def __neg__(self) -> "Tensor":
        return Tensor._from_op(-self.data, (self,), lambda g: (-g,), "neg")

    def __pow__(self, exponent: float) -> "Tensor":
        a = self.data
        return Tensor._from_op(
            a**exponent, (self,), lambda g: (g * exponent * a ** (exponent - 1),), "pow"
        )

    def exp(self) -> "Tensor":
        out = np.exp(self.data)
        return Tensor._from_op(out, (self,), lambda g: (g * out,), "exp")

    def log(self) -> "Tensor":
        a = self.data
        return Tensor._from_op(np.log(a), (self,), lambda g: (g / a,), "log")

    def clip(self, low: Optional[float] = None, high: Optional[float] = None) -> "Tensor":
        a = self.data
        out = np.clip(a, low, high)
        inside = np.ones_like(a, dtype=bool)
        if low is not None:
            inside &= a >= low
        if high is not None:
            inside &= a <= high
        return Tensor._from_op(out, (self,), lambda g: (g * inside,), "clip")

    # ── linear algebra ──

    def __matmul__(self, other: "Tensor") -> "Tensor":
        a, b = self.data, other.data
        if a.ndim != 2 or b.ndim != 2:
            raise UsageError("matmul supports 2-D operands only")

        def backward(g):
            return g @ b.T, a.T @ g

        return Tensor._from_op(a @ b, (self, other), backward, "matmul")

    def transpose(self, *axes: int) -> "Tensor":
        axes = axes or tuple(reversed(range(self.ndim)))
        inverse = tuple(np.argsort(axes))
        return Tensor._from_op(
            self.data.transpose(axes), (self,), lambda g: (g.transpose(inverse),), "transpose"
        )

    @property
    def T(self) -> "Tensor":
        return self.transpose()

    def reshape(self, *shape) -> "Tensor":
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        original = self.shape
        return Tensor._from_op(
            self.data.reshape(shape), (self,), lambda g: (g.reshape(original),), "reshape"
        )

    def __getitem__(self, index) -> "Tensor":
        if isinstance(index, Tensor):
            index = index.data.astype(np.int64)
        original_shape, dtype = self.shape, self.dtype

        def backward(g):
            full = np.zeros(original_shape, dtype=dtype)
            np.add.at(full, index, g)
            return (full,)

        return Tensor._from_op(self.data[index], (self,), backward, "getitem")

    # ── reductions ──

    def sum(self, axis=None, keepdims: bool = False) -> "Tensor":
        original = self.shape

        def backward(g):
            if axis is not None and not keepdims:
                g = np.expand_dims(g, axis)
            return (np.broadcast_to(g, original).copy(),)

        return Tensor._from_op(
            np.asarray(self.data.sum(axis=axis, keepdims=keepdims)), (self,), backward, "sum"
        )

    def mean(self, axis=None, keepdims: bool = False) -> "Tensor":
        if axis is None:
            count = self.data.size
        else:
            axes = axis if isinstance(axis, tuple) else (axis,)
            count = int(np.prod([self.shape[a] for a in axes]))
        return self.sum(axis=axis, keepdims=keepdims) * (1.0 / count)


def tensor(data: ArrayLike, requires_grad: bool = False) -> Tensor:
    """Build a tensor at the default dtype"""
    return Tensor(np.asarray(data, dtype=_DEFAULT_DTYPE), requires_grad=requires_grad)


def concat_rows(parts: Sequence[Tensor]) -> Tensor:
    """Concatenate tensors along axis 0"""
    sizes = [p.shape[0] for p in parts]
    bounds = np.cumsum([0] + sizes)

    def backward(g):
        return tuple(g[bounds[i] : bounds[i + 1]] for i in range(len(parts)))

    return Tensor._from_op(np.concatenate([p.data for p in parts], axis=0), parts, backward, "concat")
