"""Minimal neural-network engine: float64 tensors, the DCGAN layer set,
Adam, GAN losses and EMA weight tracking.  numpy-only, CPU, deterministic."""

from .tensor import Tensor
from .functional import (
    conv2d_forward,
    conv2d_backward,
    conv_transpose2d_forward,
    conv_transpose2d_backward,
    conv2d_output_shape,
    conv_transpose2d_output_shape,
)
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
from .losses import CLAMP, disc_loss_grads, gan_losses, gen_loss_grad
from .optim import Adam, AdamState, adam_step, ema_update
from .networks import (
    GanConfig,
    build_discriminator,
    build_generator,
    canvas_pads,
    canvas_shape,
    latent_batch,
)
from .training import TrainResult, ema_sampler, train_gan
from .checkpoint import load_tensors, save_tensors

__all__ = [
    "Tensor",
    "conv2d_forward", "conv2d_backward",
    "conv_transpose2d_forward", "conv_transpose2d_backward",
    "conv2d_output_shape", "conv_transpose2d_output_shape",
    "BatchNorm2d", "Conv2d", "ConvTranspose2d", "Crop2d", "Dense", "Dropout",
    "Flatten", "LeakyReLU", "Reshape", "Sequential", "Sigmoid", "ZeroPad2d",
    "CLAMP", "disc_loss_grads", "gan_losses", "gen_loss_grad",
    "Adam", "AdamState", "adam_step", "ema_update",
    "GanConfig", "build_discriminator", "build_generator",
    "canvas_pads", "canvas_shape", "latent_batch",
    "TrainResult", "ema_sampler", "train_gan",
    "load_tensors", "save_tensors",
]
