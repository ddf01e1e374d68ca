"""Reverse-mode automatic differentiation over float64 numpy arrays.

A :class:`Tensor` wraps an ``ndarray`` and, when it was produced by a
differentiable operation, a closure that maps the gradient of the output to
gradients of the inputs. :meth:`Tensor.backward` walks the recorded graph in
reverse topological order and accumulates into the ``grad`` of every leaf
that has ``requires_grad`` set.

The graph is kept after ``backward`` so a second call adds the same
contributions again, matching the accumulation contract of the optimizer
loop (callers zero gradients explicitly).
"""

import numbers

import numpy as np

DTYPE = np.float64


def _as_array(value):
    return np.array(value, dtype=DTYPE)


class Tensor:
    """N-dimensional float64 array with optional gradient tracking."""

    __slots__ = ("data", "requires_grad", "grad", "_parents", "_backward", "name")
    # make ndarray <op> Tensor dispatch to the Tensor's reflected operator
    __array_ufunc__ = None

    def __init__(self, data, requires_grad=False, name=None):
        self.data = _as_array(data)
        self.requires_grad = bool(requires_grad)
        self.grad = np.zeros_like(self.data) if self.requires_grad else None
        self._parents = ()
        self._backward = None
        self.name = name

    @classmethod
    def _result(cls, data, parents, backward):
        """Wrap the output of an op; records the graph edge only if needed."""
        out = cls.__new__(cls)
        out.data = data if data.dtype == DTYPE else data.astype(DTYPE)
        out.requires_grad = any(p.requires_grad for p in parents)
        out.grad = None
        out.name = None
        if out.requires_grad:
            out._parents = tuple(parents)
            out._backward = backward
        else:
            out._parents = ()
            out._backward = None
        return out

    # -- basic properties -------------------------------------------------

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    @property
    def size(self):
        return self.data.size

    @property
    def is_leaf(self):
        return self._backward is None

    def item(self):
        return float(self.data.reshape(-1)[0]) if self.data.size == 1 else self.data.item()

    def numpy(self):
        return self.data

    def detach(self):
        return Tensor(self.data.copy())

    def zero_grad(self):
        if self.grad is not None:
            self.grad.fill(0.0)

    def __repr__(self):
        flag = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor(shape={self.shape}{flag})"

    def __len__(self):
        return len(self.data)

    # -- autodiff ---------------------------------------------------------

    def _topological_order(self):
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
        return order

    def backward(self):
        """Accumulate d(self)/d(leaf) into every tracked leaf's ``grad``."""
        if self.data.size != 1:
            raise ValueError(f"backward() requires a scalar tensor, got shape {self.shape}")
        if not self.requires_grad:
            raise ValueError("backward() called on a tensor that does not require grad")
        order = self._topological_order()
        pending = {id(self): np.ones_like(self.data)}
        for node in reversed(order):
            g = pending.pop(id(node), None)
            if g is None:
                continue
            if node._backward is None:
                node.grad += g
                continue
            for parent, pg in zip(node._parents, node._backward(g)):
                if pg is None or not parent.requires_grad:
                    continue
                key = id(parent)
                if key in pending:
                    pending[key] = pending[key] + pg
                else:
                    pending[key] = pg

    # -- arithmetic -------------------------------------------------------

    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return div(self, other)

    def __neg__(self):
        return mul(self, -1.0)

    def __abs__(self):
        return absolute(self)

    def __getitem__(self, index):
        return getitem(self, index)

    def sum(self):
        return tsum(self)

    def mean(self):
        return mean(self)

    def square(self):
        return square(self)

    def abs(self):
        return absolute(self)


def as_tensor(value):
    """Constants (scalars, arrays) become untracked tensors."""
    if isinstance(value, Tensor):
        return value
    return Tensor(value)


def _is_scalar(value):
    if isinstance(value, numbers.Real):
        return True
    if isinstance(value, Tensor):
        return value.ndim == 0
    if isinstance(value, np.ndarray):
        return value.ndim == 0
    return False


def _check_binary(a, b, opname):
    if _is_scalar(a) or _is_scalar(b):
        return
    shape_a = np.shape(a.data if isinstance(a, Tensor) else a)
    shape_b = np.shape(b.data if isinstance(b, Tensor) else b)
    if shape_a != shape_b:
        raise ValueError(f"{opname}: shape mismatch {shape_a} vs {shape_b}")


def _reduce_to(grad, shape):
    # only scalar broadcasting is allowed, so a 0-d operand collects the sum
    if grad.shape == shape:
        return grad
    return np.asarray(grad.sum()).reshape(shape)


def add(a, b):
    _check_binary(a, b, "add")
    a, b = as_tensor(a), as_tensor(b)

    def backward(g):
        return _reduce_to(g, a.shape), _reduce_to(g, b.shape)

    return Tensor._result(a.data + b.data, (a, b), backward)


def sub(a, b):
    _check_binary(a, b, "sub")
    a, b = as_tensor(a), as_tensor(b)

    def backward(g):
        return _reduce_to(g, a.shape), _reduce_to(-g, b.shape)

    return Tensor._result(a.data - b.data, (a, b), backward)


def mul(a, b):
    _check_binary(a, b, "mul")
    a, b = as_tensor(a), as_tensor(b)

    def backward(g):
        ga = _reduce_to(g * b.data, a.shape) if a.requires_grad else None
        gb = _reduce_to(g * a.data, b.shape) if b.requires_grad else None
        return ga, gb

    return Tensor._result(a.data * b.data, (a, b), backward)


def div(x, divisor):
    """Divide by a plain number; dividing is exact where scaling by 1/n is not."""
    if isinstance(divisor, Tensor) or np.ndim(divisor) != 0:
        raise ValueError("div: the divisor must be a scalar number")
    divisor = float(divisor)
    x = as_tensor(x)

    def backward(g):
        return (g / divisor,)

    return Tensor._result(x.data / divisor, (x,), backward)


def absolute(x):
    x = as_tensor(x)

    def backward(g):
        # np.sign(0) == 0 gives the zero subgradient at the kink
        return (g * np.sign(x.data),)

    return Tensor._result(np.abs(x.data), (x,), backward)


def square(x):
    x = as_tensor(x)

    def backward(g):
        return (2.0 * x.data * g,)

    return Tensor._result(x.data * x.data, (x,), backward)


def tsum(x):
    x = as_tensor(x)

    def backward(g):
        return (np.full(x.shape, g.item(), dtype=DTYPE),)

    return Tensor._result(np.asarray(x.data.sum()), (x,), backward)


def mean(x):
    x = as_tensor(x)
    n = x.data.size

    def backward(g):
        return (np.full(x.shape, g.item() / n, dtype=DTYPE),)

    return Tensor._result(np.asarray(x.data.mean()), (x,), backward)


def getitem(x, index):
    """Basic (slice/int) indexing; advanced indexing is rejected."""
    parts = index if isinstance(index, tuple) else (index,)
    for part in parts:
        if not isinstance(part, (slice, int, type(Ellipsis))) or isinstance(part, bool):
            raise ValueError("only basic slicing is supported")
    x = as_tensor(x)

    def backward(g):
        full = np.zeros_like(x.data)
        full[index] = g
        return (full,)

    return Tensor._result(np.ascontiguousarray(x.data[index]), (x,), backward)
