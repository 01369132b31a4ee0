"""Layer objects: forward/backward pairs over ndarrays, Tensor parameters.

Each layer caches what its backward pass needs during forward.  Stochastic
layers (dropout) draw from the generator passed through `forward`, so a
training loop owns one seeded stream and stays bit-reproducible.
"""

from __future__ import annotations

import numpy as np

from ..errors import DataError, StateError
from . import functional as F
from .tensor import Tensor

__all__ = [
    "Layer",
    "Dense",
    "Conv2d",
    "ConvTranspose2d",
    "BatchNorm2d",
    "Dropout",
    "LeakyReLU",
    "Sigmoid",
    "ZeroPad2d",
    "Crop2d",
    "Reshape",
    "Flatten",
    "Sequential",
]


class Layer:
    def forward(self, x, train: bool, rng=None):
        raise NotImplementedError

    def backward(self, grad_out):
        raise NotImplementedError

    def parameters(self) -> list[Tensor]:
        return []

    def named_parameters(self) -> dict[str, Tensor]:
        return {}

    def named_buffers(self) -> dict[str, np.ndarray]:
        """Non-trainable state (e.g. batchnorm running statistics)."""
        return {}


class Dense(Layer):
    """Fully connected layer y = x W^T + b, weight shape (out, in)."""

    def __init__(self, in_features: int, out_features: int, rng, w_scale: float = 0.02):
        self.weight = Tensor(rng.normal(0.0, w_scale, size=(out_features, in_features)))
        self.bias = Tensor(np.zeros(out_features))
        self._x = None

    def forward(self, x, train: bool, rng=None):
        self._x = np.asarray(x, dtype=np.float64)
        return self._x @ self.weight.data.T + self.bias.data

    def backward(self, grad_out):
        g = np.asarray(grad_out, dtype=np.float64)
        self.weight.add_grad(g.T @ self._x)
        self.bias.add_grad(g.sum(axis=0))
        return g @ self.weight.data

    def parameters(self):
        return [self.weight, self.bias]

    def named_parameters(self):
        return {"weight": self.weight, "bias": self.bias}


class Conv2d(Layer):
    def __init__(self, in_channels: int, out_channels: int, kernel_size: int,
                 stride: int, padding: int, rng, w_scale: float = 0.02):
        shape = (out_channels, in_channels, kernel_size, kernel_size)
        self.weight = Tensor(rng.normal(0.0, w_scale, size=shape))
        self.bias = Tensor(np.zeros(out_channels))
        self.stride = stride
        self.padding = padding
        self._cache = None

    def forward(self, x, train: bool, rng=None):
        out, self._cache = F.conv2d_forward(
            x, self.weight.data, self.stride, self.padding, self.bias.data
        )
        return out

    def backward(self, grad_out):
        gx, gw, gb = F.conv2d_backward(grad_out, self.weight.data, self._cache)
        self.weight.add_grad(gw)
        self.bias.add_grad(gb)
        return gx

    def parameters(self):
        return [self.weight, self.bias]

    def named_parameters(self):
        return {"weight": self.weight, "bias": self.bias}


class ConvTranspose2d(Layer):
    def __init__(self, in_channels: int, out_channels: int, kernel_size: int,
                 stride: int, padding: int, rng, w_scale: float = 0.02):
        shape = (in_channels, out_channels, kernel_size, kernel_size)
        self.weight = Tensor(rng.normal(0.0, w_scale, size=shape))
        self.bias = Tensor(np.zeros(out_channels))
        self.stride = stride
        self.padding = padding
        self._cache = None

    def forward(self, x, train: bool, rng=None):
        out, self._cache = F.conv_transpose2d_forward(
            x, self.weight.data, self.stride, self.padding, self.bias.data
        )
        return out

    def backward(self, grad_out):
        gx, gw, gb = F.conv_transpose2d_backward(grad_out, self.weight.data, self._cache)
        self.weight.add_grad(gw)
        self.bias.add_grad(gb)
        return gx

    def parameters(self):
        return [self.weight, self.bias]

    def named_parameters(self):
        return {"weight": self.weight, "bias": self.bias}


class BatchNorm2d(Layer):
    """Per-channel batch normalization over (N, H, W).

    Train mode normalizes by batch statistics and updates running averages;
    eval mode normalizes by the running averages.
    """

    def __init__(self, channels: int, rng=None, eps: float = 1e-5, momentum: float = 0.1):
        gamma0 = np.ones(channels) if rng is None else rng.normal(1.0, 0.02, size=channels)
        self.gamma = Tensor(gamma0)
        self.beta = Tensor(np.zeros(channels))
        self.eps = eps
        self.momentum = momentum
        self.running_mean = np.zeros(channels)
        self.running_var = np.ones(channels)
        self._cache = None

    def forward(self, x, train: bool, rng=None):
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 4:
            raise DataError(f"batchnorm expects (N, C, H, W), got {x.shape}")
        if train:
            mean = x.mean(axis=(0, 2, 3))
            # E[x^2] - E[x]^2; activations are O(1), cancellation is harmless
            var = np.einsum("nchw,nchw->c", x, x) / (x.shape[0] * x.shape[2] * x.shape[3])
            var -= mean * mean
            np.maximum(var, 0.0, out=var)
            self.running_mean += self.momentum * (mean - self.running_mean)
            self.running_var += self.momentum * (var - self.running_var)
        else:
            mean = self.running_mean
            var = self.running_var
        inv_std = 1.0 / np.sqrt(var + self.eps)
        xhat = (x - mean[None, :, None, None]) * inv_std[None, :, None, None]
        self._cache = (xhat, inv_std, train, x.shape)
        return self.gamma.data[None, :, None, None] * xhat + self.beta.data[None, :, None, None]

    def backward(self, grad_out):
        xhat, inv_std, train, shape = self._cache
        g = np.asarray(grad_out, dtype=np.float64)
        self.gamma.add_grad(np.sum(g * xhat, axis=(0, 2, 3)))
        self.beta.add_grad(np.sum(g, axis=(0, 2, 3)))
        gxhat = g * self.gamma.data[None, :, None, None]
        if not train:
            return gxhat * inv_std[None, :, None, None]
        m = shape[0] * shape[2] * shape[3]
        # standard batch-stat backward: account for mean and variance paths
        sum_g = np.sum(gxhat, axis=(0, 2, 3))[None, :, None, None]
        sum_gx = np.sum(gxhat * xhat, axis=(0, 2, 3))[None, :, None, None]
        return (inv_std[None, :, None, None] / m) * (m * gxhat - sum_g - xhat * sum_gx)

    def parameters(self):
        return [self.gamma, self.beta]

    def named_parameters(self):
        return {"gamma": self.gamma, "beta": self.beta}

    def named_buffers(self):
        return {"running_mean": self.running_mean, "running_var": self.running_var}


class Dropout(Layer):
    """Inverted dropout; identity in eval mode."""

    def __init__(self, p: float):
        if not 0.0 <= p < 1.0:
            raise DataError(f"dropout probability must lie in [0, 1), got {p}")
        self.p = p
        self._mask = None

    def forward(self, x, train: bool, rng=None):
        x = np.asarray(x, dtype=np.float64)
        if not train or self.p == 0.0:
            self._mask = None
            return x
        if rng is None:
            raise StateError("dropout in train mode needs the training rng")
        self._mask = (rng.random(x.shape) >= self.p) / (1.0 - self.p)
        return x * self._mask

    def backward(self, grad_out):
        g = np.asarray(grad_out, dtype=np.float64)
        return g if self._mask is None else g * self._mask


class LeakyReLU(Layer):
    def __init__(self, slope: float):
        if slope <= 0:
            raise DataError(f"leaky-relu slope must be positive, got {slope}")
        self.slope = slope
        self._scale = None

    def forward(self, x, train: bool, rng=None):
        x = np.asarray(x, dtype=np.float64)
        self._scale = np.where(x >= 0, 1.0, self.slope)
        return x * self._scale

    def backward(self, grad_out):
        return np.asarray(grad_out, dtype=np.float64) * self._scale


class Sigmoid(Layer):
    def __init__(self):
        self._y = None

    def forward(self, x, train: bool, rng=None):
        x = np.asarray(x, dtype=np.float64)
        self._y = np.where(x >= 0, 1.0 / (1.0 + np.exp(-np.abs(x))),
                           np.exp(-np.abs(x)) / (1.0 + np.exp(-np.abs(x))))
        return self._y

    def backward(self, grad_out):
        return np.asarray(grad_out, dtype=np.float64) * self._y * (1.0 - self._y)


class ZeroPad2d(Layer):
    """Pad (top, bottom, left, right) with zeros on the spatial axes."""

    def __init__(self, pads: tuple[int, int, int, int]):
        if any(p < 0 for p in pads):
            raise DataError(f"padding must be nonnegative, got {pads}")
        self.pads = pads

    def forward(self, x, train: bool, rng=None):
        t, b, l, r = self.pads
        return np.pad(np.asarray(x, dtype=np.float64), ((0, 0), (0, 0), (t, b), (l, r)))

    def backward(self, grad_out):
        t, b, l, r = self.pads
        g = np.asarray(grad_out, dtype=np.float64)
        h, w = g.shape[2], g.shape[3]
        return np.ascontiguousarray(g[:, :, t:h - b, l:w - r])


class Crop2d(Layer):
    """Inverse of :class:`ZeroPad2d`: cut (top, bottom, left, right)."""

    def __init__(self, crops: tuple[int, int, int, int]):
        if any(c < 0 for c in crops):
            raise DataError(f"crop must be nonnegative, got {crops}")
        self.crops = crops

    def forward(self, x, train: bool, rng=None):
        t, b, l, r = self.crops
        x = np.asarray(x, dtype=np.float64)
        h, w = x.shape[2], x.shape[3]
        return np.ascontiguousarray(x[:, :, t:h - b, l:w - r])

    def backward(self, grad_out):
        t, b, l, r = self.crops
        return np.pad(np.asarray(grad_out, dtype=np.float64), ((0, 0), (0, 0), (t, b), (l, r)))


class Reshape(Layer):
    def __init__(self, shape: tuple[int, ...]):
        self.shape = shape
        self._in_shape = None

    def forward(self, x, train: bool, rng=None):
        x = np.asarray(x, dtype=np.float64)
        self._in_shape = x.shape
        return x.reshape((x.shape[0],) + self.shape)

    def backward(self, grad_out):
        return np.asarray(grad_out, dtype=np.float64).reshape(self._in_shape)


class Flatten(Layer):
    def __init__(self):
        self._in_shape = None

    def forward(self, x, train: bool, rng=None):
        x = np.asarray(x, dtype=np.float64)
        self._in_shape = x.shape
        return x.reshape(x.shape[0], -1)

    def backward(self, grad_out):
        return np.asarray(grad_out, dtype=np.float64).reshape(self._in_shape)


class Sequential(Layer):
    def __init__(self, layers: list[Layer]):
        self.layers = list(layers)

    def forward(self, x, train: bool, rng=None):
        for layer in self.layers:
            x = layer.forward(x, train, rng)
        return x

    def backward(self, grad_out):
        for layer in reversed(self.layers):
            grad_out = layer.backward(grad_out)
        return grad_out

    def parameters(self):
        return [p for layer in self.layers for p in layer.parameters()]

    def named_parameters(self):
        out = {}
        for i, layer in enumerate(self.layers):
            for name, p in layer.named_parameters().items():
                out[f"{i}.{name}"] = p
        return out

    def named_buffers(self):
        out = {}
        for i, layer in enumerate(self.layers):
            for name, b in layer.named_buffers().items():
                out[f"{i}.{name}"] = b
        return out

    def zero_grad(self):
        for p in self.parameters():
            p.zero_grad()

    def state_dict(self) -> dict[str, np.ndarray]:
        """Copies of every parameter and buffer, keyed by layer index."""
        out = {name: p.data.copy() for name, p in self.named_parameters().items()}
        out.update({name: b.copy() for name, b in self.named_buffers().items()})
        return out

    def load_state_dict(self, state: dict[str, np.ndarray]):
        params = self.named_parameters()
        buffers = self.named_buffers()
        for name in params:
            if name not in state:
                raise DataError(f"state dict is missing parameter '{name}'")
        for name, value in state.items():
            value = np.asarray(value, dtype=np.float64)
            if name in params:
                if value.shape != params[name].data.shape:
                    raise DataError(f"shape mismatch for '{name}'")
                params[name].data[...] = value
            elif name in buffers:
                buffers[name][...] = value
            else:
                raise DataError(f"unknown entry '{name}' in state dict")
