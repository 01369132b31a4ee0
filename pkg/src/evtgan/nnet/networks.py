"""DCGAN generator/discriminator for gridded data in (0, 1).

The native use case is an 18x22 grid: the discriminator zero-pads one cell
on every side to 20x24, and the generator grows a 5x6 seed through two
stride-2 transposed convolutions back to 20x24 before cropping to 18x22.
Other grid sizes use the same recipe on the smallest "canvas" that is a
multiple of 4 in both extents, at least 8, and leaves room for one ring of
padding; the pad/crop offsets are shared by both networks so generated
fields align with where the data sits on the canvas.

Channel progression is 256 -> 128 -> 64 -> 1 in the generator and the
mirror 1 -> 64 -> 128 -> 256 in the discriminator, kernels 4x4 at stride 2.
The generator's final stride-1 refinement uses a 3x3 kernel: a 4x4 kernel
at stride 1 cannot preserve shape with symmetric integer padding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import ParameterError
from .layers import (
    BatchNorm2d,
    Conv2d,
    ConvTranspose2d,
    Crop2d,
    Dense,
    Dropout,
    Flatten,
    LeakyReLU,
    Reshape,
    Sequential,
    Sigmoid,
    ZeroPad2d,
)

__all__ = [
    "GanConfig",
    "canvas_shape",
    "canvas_pads",
    "build_generator",
    "build_discriminator",
    "latent_batch",
]

LEAKY_SLOPE = 0.2
DROPOUT_P = 0.3
GEN_CHANNELS = (256, 128, 64)
DISC_CHANNELS = (64, 128, 256)


@dataclass(frozen=True)
class GanConfig:
    """Training hyperparameters; the defaults are the production settings."""

    learning_rate: float = 2e-4
    batch_size: int = 50
    epochs: int = 30_000
    disc_steps_per_gen_step: int = 2
    ema_alpha: float = 0.9
    latent_dim: int = 100
    seed: int = 0

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ParameterError("learning rate must be positive")
        if min(self.batch_size, self.epochs, self.disc_steps_per_gen_step, self.latent_dim) < 1:
            raise ParameterError("batch size, epochs, step ratio and latent dim must be >= 1")
        if not 0.0 < self.ema_alpha <= 1.0:
            raise ParameterError(f"ema alpha must lie in (0, 1], got {self.ema_alpha}")


def canvas_shape(grid_shape: tuple[int, int]) -> tuple[int, int]:
    """Working extent: >= grid + 2 on each axis, divisible by 4, at least 8."""
    H, W = grid_shape
    if H < 1 or W < 1:
        raise ParameterError(f"grid shape must be positive, got {grid_shape}")
    return (max(8, 4 * math.ceil((H + 2) / 4)), max(8, 4 * math.ceil((W + 2) / 4)))


def canvas_pads(grid_shape: tuple[int, int]) -> tuple[int, int, int, int]:
    """(top, bottom, left, right) margins placing the grid on its canvas."""
    H, W = grid_shape
    Hc, Wc = canvas_shape(grid_shape)
    top = (Hc - H) // 2
    left = (Wc - W) // 2
    return (top, Hc - H - top, left, Wc - W - left)


def build_generator(grid_shape: tuple[int, int], latent_dim: int, rng) -> Sequential:
    """Latent vector -> (N, 1, H, W) field of values in (0, 1)."""
    Hc, Wc = canvas_shape(grid_shape)
    hb, wb = Hc // 4, Wc // 4
    c0, c1, c2 = GEN_CHANNELS
    return Sequential([
        Dense(latent_dim, c0 * hb * wb, rng),
        Reshape((c0, hb, wb)),
        BatchNorm2d(c0, rng),
        LeakyReLU(LEAKY_SLOPE),
        ConvTranspose2d(c0, c1, 4, stride=2, padding=1, rng=rng),
        BatchNorm2d(c1, rng),
        LeakyReLU(LEAKY_SLOPE),
        ConvTranspose2d(c1, c2, 4, stride=2, padding=1, rng=rng),
        BatchNorm2d(c2, rng),
        LeakyReLU(LEAKY_SLOPE),
        ConvTranspose2d(c2, 1, 3, stride=1, padding=1, rng=rng),
        Sigmoid(),
        Crop2d(canvas_pads(grid_shape)),
    ])


def build_discriminator(grid_shape: tuple[int, int], rng) -> Sequential:
    """(N, 1, H, W) field -> (N, 1) probability of being real data."""
    Hc, Wc = canvas_shape(grid_shape)
    c0, c1, c2 = DISC_CHANNELS
    h3 = (Hc // 4 + 2 - 4) // 2 + 1
    w3 = (Wc // 4 + 2 - 4) // 2 + 1
    return Sequential([
        ZeroPad2d(canvas_pads(grid_shape)),
        Conv2d(1, c0, 4, stride=2, padding=1, rng=rng),
        LeakyReLU(LEAKY_SLOPE),
        Dropout(DROPOUT_P),
        Conv2d(c0, c1, 4, stride=2, padding=1, rng=rng),
        LeakyReLU(LEAKY_SLOPE),
        Dropout(DROPOUT_P),
        Conv2d(c1, c2, 4, stride=2, padding=1, rng=rng),
        LeakyReLU(LEAKY_SLOPE),
        Dropout(DROPOUT_P),
        Flatten(),
        Dense(c2 * h3 * w3, 1, rng),
        Sigmoid(),
    ])


def latent_batch(rng, n: int, latent_dim: int) -> np.ndarray:
    """Latent inputs: independent uniforms on [-1, 1]."""
    return rng.uniform(-1.0, 1.0, size=(n, latent_dim))
