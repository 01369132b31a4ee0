"""Adam with bias correction, and the generator weight moving average."""

from __future__ import annotations

import numpy as np

from ..errors import DataError
from .tensor import Tensor

__all__ = ["AdamState", "adam_step", "Adam", "ema_update"]


class AdamState:
    """First/second moment accumulators plus the shared step counter."""

    def __init__(self, params):
        self.m = [np.zeros_like(np.asarray(p)) for p in params]
        self.v = [np.zeros_like(np.asarray(p)) for p in params]
        self.scratch = [np.empty_like(np.asarray(p)) for p in params]
        self.t = 0


def adam_step(params, grads, state: AdamState, lr: float,
              beta1: float = 0.5, beta2: float = 0.999, eps: float = 1e-8):
    """One in-place Adam update over a list of arrays.

    Standard bias-corrected rule; deterministic.  `params` entries are
    modified in place and returned together with the advanced state.
    """
    if len(params) != len(grads) or len(params) != len(state.m):
        raise DataError("params, grads and state must have matching lengths")
    state.t += 1
    bc1 = 1.0 - beta1 ** state.t
    bc2 = 1.0 - beta2 ** state.t
    # p -= lr * (m/bc1) / (sqrt(v/bc2) + eps), with the bias corrections
    # folded into the step size and eps to save an array pass
    step = lr * np.sqrt(bc2) / bc1
    eps_scaled = eps * np.sqrt(bc2)
    for p, g, m, v, buf in zip(params, grads, state.m, state.v, state.scratch):
        p = np.asarray(p)
        g = np.asarray(g)
        if p.shape != g.shape:
            raise DataError(f"gradient shape {g.shape} != parameter shape {p.shape}")
        m *= beta1
        np.multiply(g, 1.0 - beta1, out=buf)
        m += buf
        v *= beta2
        np.multiply(g, g, out=buf)
        buf *= 1.0 - beta2
        v += buf
        np.sqrt(v, out=buf)
        buf += eps_scaled
        np.divide(m, buf, out=buf)
        buf *= step
        p -= buf
    return params, state


class Adam:
    """Adam bound to a list of Tensors, consuming their .grad slots."""

    def __init__(self, params: list[Tensor], lr: float,
                 beta1: float = 0.5, beta2: float = 0.999, eps: float = 1e-8):
        self.params = params
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.state = AdamState([p.data for p in params])

    def step(self):
        grads = []
        for p in self.params:
            if p.grad is None:
                raise DataError("parameter has no gradient; run backward first")
            grads.append(p.grad)
        adam_step([p.data for p in self.params], grads, self.state,
                  self.lr, self.beta1, self.beta2, self.eps)

    def zero_grad(self):
        for p in self.params:
            p.zero_grad()


def ema_update(shadow_params, current_params, alpha: float):
    """shadow <- alpha * shadow + (1 - alpha) * current, elementwise in place."""
    if not 0.0 < alpha <= 1.0:
        raise DataError(f"ema coefficient must lie in (0, 1], got {alpha}")
    if len(shadow_params) != len(current_params):
        raise DataError("shadow and current parameter lists differ in length")
    for s, c in zip(shadow_params, current_params):
        s = np.asarray(s)
        c = np.asarray(c)
        if s.shape != c.shape:
            raise DataError(f"shape mismatch {s.shape} vs {c.shape}")
        s *= alpha
        s += (1.0 - alpha) * c
    return shadow_params
