"""Finite-difference verification of analytic gradients.

Central differences with a configurable step, evaluated in whatever dtype
the parameters carry (float64 is the intended mode). The relative error
floor keeps pure round-off noise on genuinely zero gradients from reading
as failure.
"""

from __future__ import annotations

import numpy as np


def max_relative_gradient_error(loss_fn, params, step=1e-3, floor=1e-6):
    """Compare analytic gradients of ``loss_fn`` against central differences.

    Parameters
    ----------
    loss_fn : callable () -> Tensor
        Rebuilds the scalar loss graph from the current parameter values.
    params : dict[str, Tensor]
        Leaf parameters; perturbed in place and restored.
    step : float
        Central-difference half-step.
    floor : float
        Denominator floor for the relative error.

    Returns
    -------
    (max_error, per_parameter) where per_parameter maps names to their own
    maximum relative error.
    """
    for p in params.values():
        p.zero_grad()
    loss = loss_fn()
    loss.backward()
    analytic = {
        name: (np.zeros_like(p.data) if p.grad is None else p.grad.copy())
        for name, p in params.items()
    }

    per_parameter = {}
    for name, p in params.items():
        flat = p.data.reshape(-1)
        errs = np.zeros(flat.size)
        for i in range(flat.size):
            saved = flat[i]
            flat[i] = saved + step
            f_plus = loss_fn().item()
            flat[i] = saved - step
            f_minus = loss_fn().item()
            flat[i] = saved
            fd = (f_plus - f_minus) / (2.0 * step)
            a = analytic[name].reshape(-1)[i]
            errs[i] = abs(a - fd) / max(floor, abs(a), abs(fd))
        per_parameter[name] = float(errs.max()) if flat.size else 0.0
    return max(per_parameter.values()), per_parameter
