"""Tiny dispatch layer so numeric kernels run on numpy arrays or torch tensors.

The bound-propagation code is written once against these helpers plus plain
operators (``+``, ``*``, ``@``, comparisons).  The verifier calls it with
float64 numpy arrays; the training code calls it with float64 torch tensors
so reverse-mode gradients of the bounds come out of autograd.
"""

from __future__ import annotations

import numpy as np


def is_torch(x) -> bool:
    return type(x).__module__.partition(".")[0] == "torch"


def _torch():
    import torch

    return torch


def _lift(x, torch):
    if is_torch(x):
        return x
    return torch.as_tensor(x, dtype=torch.float64)


def where(cond, a, b):
    if is_torch(cond) or is_torch(a) or is_torch(b):
        torch = _torch()
        c = cond if is_torch(cond) else torch.as_tensor(np.asarray(cond))
        return torch.where(c.bool(), _lift(a, torch), _lift(b, torch))
    return np.where(cond, a, b)


def maximum(a, b):
    if is_torch(a) or is_torch(b):
        torch = _torch()
        return torch.maximum(_lift(a, torch), _lift(b, torch))
    return np.maximum(a, b)


def minimum(a, b):
    if is_torch(a) or is_torch(b):
        torch = _torch()
        return torch.minimum(_lift(a, torch), _lift(b, torch))
    return np.minimum(a, b)


def clip(x, lo, hi):
    if is_torch(x):
        return x.clamp(min=lo, max=hi)
    return np.clip(x, lo, hi)


def log(x):
    if is_torch(x):
        return x.log()
    return np.log(x)


def exp(x):
    if is_torch(x):
        return x.exp()
    return np.exp(x)


def sigmoid(x):
    # Overflow-free logistic: exp is only ever applied to a non-positive
    # argument, which also keeps autograd clear of inf * 0 products.
    z = exp(-abs(x))
    return where(x >= 0, 1.0 / (1.0 + z), z / (1.0 + z))


def pos(x):
    """Elementwise max(x, 0) without a dispatch call."""
    return x * (x > 0)


def neg(x):
    """Elementwise min(x, 0)."""
    return x * (x < 0)
