"""Dense double-precision tensor with a gradient slot.

Deliberately minimal: parameters need contiguous float64 storage and a
place to accumulate gradients; activations travel as plain ndarrays.
"""

from __future__ import annotations

import numpy as np

from ..errors import DataError

__all__ = ["Tensor"]


class Tensor:
    """A contiguous float64 array plus an optional same-shape gradient."""

    __slots__ = ("data", "grad")

    def __init__(self, data, grad=None):
        self.data = np.ascontiguousarray(data, dtype=np.float64)
        self.grad = None
        if grad is not None:
            self.set_grad(grad)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def size(self) -> int:
        return self.data.size

    def set_grad(self, grad):
        grad = np.asarray(grad, dtype=np.float64)
        if grad.shape != self.data.shape:
            raise DataError(f"gradient shape {grad.shape} != data shape {self.data.shape}")
        self.grad = grad

    def add_grad(self, grad):
        """Accumulate into the gradient slot, allocating it on first use."""
        grad = np.asarray(grad, dtype=np.float64)
        if grad.shape != self.data.shape:
            raise DataError(f"gradient shape {grad.shape} != data shape {self.data.shape}")
        if self.grad is None:
            self.grad = grad.copy()
        else:
            self.grad += grad

    def zero_grad(self):
        self.grad = None

    def __array__(self, dtype=None):
        return self.data if dtype is None else self.data.astype(dtype)

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, grad={'set' if self.grad is not None else 'none'})"
