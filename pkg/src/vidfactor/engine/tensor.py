"""Reverse-mode automatic differentiation over numpy arrays.

The graph is built eagerly: each operation returns a :class:`Tensor` holding
the result plus a closure mapping the output gradient to parent gradients.
``backward()`` on a scalar walks the graph once in reverse topological order.
Gradients are plain numpy arrays and are accumulated on every node that
requires them, so tests can inspect intermediate gradients directly.

Conventions the operations rely on:

* tensor ``data`` is never mutated after construction (except by the
  optimizer, which only touches leaf parameters between graphs);
* gradient arrays are never updated in place, so backward closures may
  return views;
* all operations preserve the floating dtype of their inputs, which is what
  makes the float64 gradient-check mode work without a switch.
"""

from __future__ import annotations

import numpy as np

_GRAD_ENABLED = True


def grad_enabled():
    return _GRAD_ENABLED


class no_grad:
    """Context manager that disables graph construction entirely.

    Operations executed inside compute identical values but record no
    parents, so nothing inside can ever receive a gradient.
    """

    def __enter__(self):
        global _GRAD_ENABLED
        self._prev = _GRAD_ENABLED
        _GRAD_ENABLED = False
        return self

    def __exit__(self, *exc):
        global _GRAD_ENABLED
        _GRAD_ENABLED = self._prev
        return False


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward_fn")

    def __init__(self, data, requires_grad=False):
        self.data = np.asarray(data)
        self.grad = None
        self.requires_grad = bool(requires_grad)
        self._parents = ()
        self._backward_fn = None

    @property
    def shape(self):
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    @property
    def ndim(self):
        return self.data.ndim

    def item(self):
        return float(self.data)

    def detach(self):
        return Tensor(self.data)

    def zero_grad(self):
        self.grad = None

    def backward(self):
        """Backpropagate from a scalar. Call once per constructed graph."""
        if self.data.size != 1:
            raise ValueError(f"backward() requires a scalar, got shape {self.data.shape}")
        topo = _topological_order(self)
        self.grad = np.ones_like(self.data)
        for node in reversed(topo):
            fn = node._backward_fn
            if fn is None or node.grad is None:
                continue
            for parent, grad in zip(node._parents, fn(node.grad)):
                if grad is None or not parent.requires_grad:
                    continue
                parent.grad = grad if parent.grad is None else parent.grad + grad

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, dtype={self.data.dtype}, requires_grad={self.requires_grad})"

    # Arithmetic dunders are attached by vidfactor.engine.ops at import time.


def _topological_order(root):
    order, visited = [], set()
    stack = [(root, False)]
    while stack:
        node, done = stack.pop()
        if done:
            order.append(node)
            continue
        if id(node) in visited:
            continue
        visited.add(id(node))
        stack.append((node, True))
        for parent in node._parents:
            if id(parent) not in visited:
                stack.append((parent, False))
    return order


def as_tensor(x):
    """Wrap arrays/scalars as constant tensors; pass tensors through."""
    return x if isinstance(x, Tensor) else Tensor(x)


def make_node(data, parents, backward_fn):
    """Create a graph node, or a detached tensor when grads are off/unneeded."""
    if _GRAD_ENABLED and any(p.requires_grad for p in parents):
        out = Tensor(data, requires_grad=True)
        out._parents = tuple(parents)
        out._backward_fn = backward_fn
        return out
    return Tensor(data)
