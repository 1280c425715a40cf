"""Minimal reverse-mode autodiff engine over numpy."""

from . import ops
from .gradcheck import max_relative_gradient_error
from .tensor import Tensor, as_tensor, grad_enabled, no_grad

__all__ = [
    "Tensor",
    "as_tensor",
    "grad_enabled",
    "max_relative_gradient_error",
    "no_grad",
    "ops",
]
