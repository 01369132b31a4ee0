"""GAN objectives: cross-entropy discriminator loss and the
non-saturating generator loss, with the gradients the training loop feeds
back through the networks.

Probabilities are clamped to [CLAMP, 1 - CLAMP] before taking logs so the
losses stay finite; outside the clamp window the loss is locally constant,
so the matching gradient there is zero.
"""

from __future__ import annotations

import numpy as np

from ..errors import ConvergenceError

__all__ = ["CLAMP", "gan_losses", "disc_loss_grads", "gen_loss_grad"]

CLAMP = 1e-7


def _clamped(p):
    p = np.asarray(p, dtype=np.float64)
    if np.any(~np.isfinite(p)):
        raise ConvergenceError("non-finite discriminator probabilities; training diverged")
    return p, np.clip(p, CLAMP, 1.0 - CLAMP)


def gan_losses(d_real, d_fake) -> tuple[float, float]:
    """Return (disc_loss, gen_loss) from discriminator probabilities.

    disc_loss = -mean log D(real) - mean log(1 - D(fake));
    gen_loss  = -mean log D(fake)   (non-saturating heuristic).
    """
    _, dr = _clamped(d_real)
    _, df = _clamped(d_fake)
    disc_loss = float(-np.mean(np.log(dr)) - np.mean(np.log(1.0 - df)))
    gen_loss = float(-np.mean(np.log(df)))
    return disc_loss, gen_loss


def disc_loss_grads(d_real, d_fake) -> tuple[np.ndarray, np.ndarray]:
    """Gradients of the discriminator loss w.r.t. its two probability inputs."""
    raw_r, dr = _clamped(d_real)
    raw_f, df = _clamped(d_fake)
    g_real = np.where(raw_r == dr, -1.0 / (raw_r.size * dr), 0.0)
    g_fake = np.where(raw_f == df, 1.0 / (raw_f.size * (1.0 - df)), 0.0)
    return g_real, g_fake


def gen_loss_grad(d_fake) -> np.ndarray:
    """Gradient of the non-saturating generator loss w.r.t. D(fake)."""
    raw, df = _clamped(d_fake)
    return np.where(raw == df, -1.0 / (raw.size * df), 0.0)
