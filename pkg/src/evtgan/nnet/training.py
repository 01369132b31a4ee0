"""Alternating GAN training, bit-reproducible given the config seed.

One epoch walks the shuffled training set once in batches of
min(batch_size, n); each batch gets `disc_steps_per_gen_step` discriminator
updates followed by one generator update and an EMA update of the generator
weights.  With n == batch_size (the production setting) an epoch is exactly
one discriminator double-step plus one generator step.

Sampling for convergence traces swaps the EMA weights into the generator,
runs it in eval mode on a stream seeded by (seed, epoch), and restores the
live weights, so traces never perturb training.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from ..errors import ConvergenceError, DataError
from .layers import Sequential
from .losses import disc_loss_grads, gan_losses, gen_loss_grad
from .networks import GanConfig, build_discriminator, build_generator, latent_batch
from .optim import Adam, ema_update

__all__ = ["TrainResult", "train_gan", "ema_sampler"]

TRACE_SALT = 0x7EACE
SAMPLE_SALT = 0x5A3B1E


@dataclass
class TrainResult:
    generator: Sequential
    discriminator: Sequential
    ema_params: list[np.ndarray]
    loss_curve: np.ndarray  # rows (epoch, disc_loss, gen_loss)
    grid_shape: tuple[int, int]
    config: GanConfig


def _swap_in(gen: Sequential, params: list[np.ndarray]):
    live = [p.data.copy() for p in gen.parameters()]
    for p, new in zip(gen.parameters(), params):
        p.data[...] = new
    return live


def ema_sampler(gen: Sequential, ema_params: list[np.ndarray],
                grid_shape: tuple[int, int], cfg: GanConfig, stream_key: int):
    """Return sample(n) drawing (n, 1, H, W) fields from the EMA generator.

    Consecutive calls continue one seeded latent stream, derived from
    (cfg.seed, stream_key) and independent of the training stream.
    """
    rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, SAMPLE_SALT, stream_key]))

    def sample(n: int) -> np.ndarray:
        out = np.empty((n, 1) + tuple(grid_shape))
        live = _swap_in(gen, ema_params)
        try:
            done = 0
            while done < n:
                take = min(cfg.batch_size, n - done)
                z = latent_batch(rng, take, cfg.latent_dim)
                out[done:done + take] = gen.forward(z, train=False)
                done += take
        finally:
            _swap_in(gen, live)
        return out

    return sample


def train_gan(
    data: np.ndarray,
    cfg: GanConfig,
    trace_hook: Optional[Callable] = None,
    trace_every: int = 500,
    on_epoch: Optional[Callable] = None,
) -> TrainResult:
    """Train the DCGAN on (n, 1, H, W) data with entries in (0, 1).

    trace_hook(epoch, sample) runs every `trace_every` epochs and at the
    final epoch, with `sample(n)` drawing from the EMA generator.
    on_epoch(epoch, disc_loss, gen_loss) fires every epoch (loss streaming).

    Raises
    ------
    ConvergenceError
        On non-finite losses; the exception carries a `state` dict with the
        last finite generator/discriminator state for post-mortems.
    """
    data = np.asarray(data, dtype=np.float64)
    if data.ndim != 4 or data.shape[1] != 1:
        raise DataError(f"training data must be (n, 1, H, W), got {data.shape}")
    n = data.shape[0]
    if n < 2:
        raise DataError("need at least 2 training fields")
    grid_shape = (data.shape[2], data.shape[3])

    init_ss, train_ss = np.random.SeedSequence(cfg.seed).spawn(2)
    init_rng = np.random.default_rng(init_ss)
    train_rng = np.random.default_rng(train_ss)

    gen = build_generator(grid_shape, cfg.latent_dim, init_rng)
    disc = build_discriminator(grid_shape, init_rng)
    opt_gen = Adam(gen.parameters(), lr=cfg.learning_rate)
    opt_disc = Adam(disc.parameters(), lr=cfg.learning_rate)
    shadow = [p.data.copy() for p in gen.parameters()]

    batch = min(cfg.batch_size, n)
    n_batches = math.ceil(n / batch)
    losses = np.empty((cfg.epochs, 3))

    for epoch in range(1, cfg.epochs + 1):
        perm = train_rng.permutation(n)
        disc_losses = []
        gen_losses = []
        for b in range(n_batches):
            real = data[perm[b * batch:(b + 1) * batch]]
            nb = real.shape[0]

            for _ in range(cfg.disc_steps_per_gen_step):
                z = latent_batch(train_rng, nb, cfg.latent_dim)
                fake = gen.forward(z, train=True, rng=train_rng)
                disc.zero_grad()
                d = disc.forward(np.concatenate([real, fake]), train=True, rng=train_rng)
                d_real, d_fake = d[:nb], d[nb:]
                dl, _ = gan_losses(d_real, d_fake)
                if not math.isfinite(dl):
                    raise _divergence(epoch, gen, disc)
                g_real, g_fake = disc_loss_grads(d_real, d_fake)
                disc.backward(np.concatenate([g_real, g_fake]))
                opt_disc.step()
                disc_losses.append(dl)

            z = latent_batch(train_rng, nb, cfg.latent_dim)
            gen.zero_grad()
            disc.zero_grad()
            fake = gen.forward(z, train=True, rng=train_rng)
            d_fake = disc.forward(fake, train=True, rng=train_rng)
            _, gl = gan_losses(d_fake, d_fake)
            if not math.isfinite(gl):
                raise _divergence(epoch, gen, disc)
            grad_fake = disc.backward(gen_loss_grad(d_fake))
            gen.backward(grad_fake)
            opt_gen.step()
            ema_update(shadow, [p.data for p in gen.parameters()], cfg.ema_alpha)
            gen_losses.append(gl)

        losses[epoch - 1] = (epoch, float(np.mean(disc_losses)), float(np.mean(gen_losses)))
        if on_epoch is not None:
            on_epoch(epoch, losses[epoch - 1, 1], losses[epoch - 1, 2])
        if trace_hook is not None and (epoch % trace_every == 0 or epoch == cfg.epochs):
            trace_hook(epoch, ema_sampler(gen, shadow, grid_shape, cfg, TRACE_SALT + epoch))

    return TrainResult(
        generator=gen,
        discriminator=disc,
        ema_params=shadow,
        loss_curve=losses,
        grid_shape=grid_shape,
        config=cfg,
    )


def _divergence(epoch: int, gen: Sequential, disc: Sequential) -> ConvergenceError:
    err = ConvergenceError(f"non-finite GAN loss at epoch {epoch}; training diverged")
    err.state = {
        "epoch": epoch,
        "generator": gen.state_dict(),
        "discriminator": disc.state_dict(),
    }
    return err
