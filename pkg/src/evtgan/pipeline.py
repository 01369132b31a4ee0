"""The emulation pipeline for gridded block maxima.

Margins and dependence are modelled separately: each site gets a GEV fit
for extrapolation, the joint structure is learned by the DCGAN on
rank-transformed pseudo-observations, and generated fields are mapped back
to physical units through the fitted GEV quantile functions.  A
DCGAN-only ablation replaces that last step with the per-site empirical
quantile function, which by construction cannot leave the range of the
training sample - the contrast the GEV margins exist to fix.
"""

from __future__ import annotations

import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .dependence import (
    ChiMatrix,
    Pair,
    PseudoGrid,
    chi_l2_error,
    chi_matrix,
    rank_transform,
    select_random_pairs,
)
from .errors import DataError, DegenerateDataError, StateError, UndefinedEstimateError
from .gev import FitReport, GevParams, fit_gev_mle, gev_cdf, gev_quantile
from .nnet import GanConfig, build_generator, load_tensors, save_tensors, train_gan
from .nnet.layers import Sequential
from .nnet.losses import CLAMP
from .nnet.networks import latent_batch
from .ioutil import sha256_bytes

__all__ = [
    "MaximaGrid",
    "MarginalModelGrid",
    "EmulatorModel",
    "ChiTraceSpec",
    "block_maxima",
    "fit_margins",
    "to_pseudo_obs",
    "rerank_pseudo",
    "train_evtgan",
    "sample_emulator",
    "inverse_transform",
    "empirical_inverse_transform",
    "run_evtgan",
    "EvtganRun",
]

SAMPLE_SEED_SALT = 0x5EED


@dataclass
class MaximaGrid:
    """n observations of an H x W grid of block maxima in physical units."""

    values: np.ndarray  # (n, H, W)
    block_length: int = 1
    variable: str = "maxima"

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 3:
            raise DataError(f"maxima grid must be (n, H, W), got shape {self.values.shape}")
        if self.values.shape[0] < 2:
            raise DataError("need at least 2 block-maxima observations")
        if not np.all(np.isfinite(self.values)):
            raise DataError("maxima must be finite")
        if self.block_length < 1:
            raise DataError("block length must be >= 1")

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def grid_shape(self) -> tuple[int, int]:
        return self.values.shape[1], self.values.shape[2]

    def site(self, site) -> np.ndarray:
        r, c = site
        return self.values[:, r, c]

    def split(self, n_train: int) -> tuple["MaximaGrid", "MaximaGrid"]:
        """First n_train blocks for training, the rest held out, no shuffling."""
        if not 2 <= n_train <= self.n - 2:
            raise DataError(f"cannot split {self.n} observations at n_train={n_train}")
        return (
            MaximaGrid(self.values[:n_train], self.block_length, self.variable),
            MaximaGrid(self.values[n_train:], self.block_length, self.variable),
        )


@dataclass
class MarginalModelGrid:
    """Per-site GEV fits; failures are recorded per site, never hidden."""

    mu: np.ndarray
    sigma: np.ndarray
    xi: np.ndarray
    converged: np.ndarray
    nll: np.ndarray
    failures: dict[tuple[int, int], str] = field(default_factory=dict)
    block_length: int = 1
    variable: str = "maxima"

    @property
    def grid_shape(self) -> tuple[int, int]:
        return self.mu.shape

    def params_at(self, site) -> GevParams:
        r, c = site
        if not self.converged[r, c]:
            raise StateError(f"site ({r}, {c}) has no converged fit")
        return GevParams(float(self.mu[r, c]), float(self.sigma[r, c]), float(self.xi[r, c]))

    def failed_sites(self) -> list[tuple[int, int]]:
        return sorted(zip(*np.nonzero(~self.converged)))


def block_maxima(series: np.ndarray, k: int, variable: str = "maxima") -> MaximaGrid:
    """Componentwise maxima over consecutive blocks of k observations.

    A trailing partial block is dropped with a warning.
    """
    series = np.asarray(series, dtype=float)
    if series.ndim != 3:
        raise DataError(f"raw series must be (m, H, W), got shape {series.shape}")
    m = series.shape[0]
    if k < 1:
        raise DataError("block length must be >= 1")
    if k > m:
        raise DataError(f"block length {k} exceeds series length {m}")
    n = m // k
    if n * k != m:
        warnings.warn(f"dropping trailing partial block of {m - n * k} observations")
    blocks = series[:n * k].reshape(n, k, series.shape[1], series.shape[2])
    return MaximaGrid(blocks.max(axis=1), block_length=k, variable=variable)


def _fit_site(args):
    values, min_distinct = args
    try:
        return fit_gev_mle(values, min_distinct=min_distinct), None
    except (DataError, DegenerateDataError) as exc:
        return None, str(exc)


def fit_margins(
    maxima: MaximaGrid,
    min_distinct: int = 10,
    max_failure_fraction: float = 0.05,
    n_jobs: int = 1,
) -> MarginalModelGrid:
    """Fit one GEV per site.

    Individual failures (degenerate or insufficient data, non-convergence)
    are recorded per site; only an aggregate failure fraction above
    `max_failure_fraction` aborts.  Results are independent of `n_jobs`.
    """
    H, W = maxima.grid_shape
    sites = [(r, c) for r in range(H) for c in range(W)]
    jobs = [(maxima.values[:, r, c], min_distinct) for (r, c) in sites]
    if n_jobs > 1:
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            results = list(pool.map(_fit_site, jobs, chunksize=max(1, len(jobs) // (4 * n_jobs))))
    else:
        results = [_fit_site(job) for job in jobs]

    grid = MarginalModelGrid(
        mu=np.full((H, W), np.nan),
        sigma=np.full((H, W), np.nan),
        xi=np.full((H, W), np.nan),
        converged=np.zeros((H, W), dtype=bool),
        nll=np.full((H, W), np.nan),
        block_length=maxima.block_length,
        variable=maxima.variable,
    )
    for (r, c), (report, error) in zip(sites, results):
        if error is not None:
            grid.failures[(r, c)] = error
            continue
        assert isinstance(report, FitReport)
        grid.mu[r, c] = report.params.mu
        grid.sigma[r, c] = report.params.sigma
        grid.xi[r, c] = report.params.xi
        grid.nll[r, c] = report.nll
        grid.converged[r, c] = report.converged
        if not report.converged:
            grid.failures[(r, c)] = "optimizer did not converge"
    n_failed = int(np.sum(~grid.converged))
    if n_failed > max_failure_fraction * len(sites):
        raise DataError(
            f"{n_failed} of {len(sites)} margins failed to fit "
            f"(> {max_failure_fraction:.0%}); data quality insufficient"
        )
    return grid


def rerank_pseudo(pseudo: PseudoGrid) -> PseudoGrid:
    """Rank-transform each site of a pseudo grid.

    Idempotent on already rank-transformed data; used before estimating chi
    on generated samples, matching the standard estimator (each margin is
    pushed through its own empirical CDF).
    """
    values = pseudo.values
    out = np.empty_like(values)
    for r in range(values.shape[1]):
        for c in range(values.shape[2]):
            out[:, r, c] = rank_transform(values[:, r, c])
    return PseudoGrid(out)


def to_pseudo_obs(
    maxima: MaximaGrid,
    method: str = "empirical",
    margins: Optional[MarginalModelGrid] = None,
) -> PseudoGrid:
    """Normalize each site to (0, 1).

    "empirical" (default) uses rank/(n+1); "gev" pushes the data through the
    fitted CDFs instead, which is exposed for comparison but tends to work
    slightly worse in practice.
    """
    values = maxima.values
    n, H, W = values.shape
    out = np.empty_like(values)
    if method == "empirical":
        for r in range(H):
            for c in range(W):
                out[:, r, c] = rank_transform(values[:, r, c])
    elif method == "gev":
        if margins is None:
            raise DataError("gev normalization needs fitted margins")
        for r in range(H):
            for c in range(W):
                u = gev_cdf(values[:, r, c], margins.params_at((r, c)))
                out[:, r, c] = np.clip(u, CLAMP, 1.0 - CLAMP)
    else:
        raise DataError(f"unknown normalization method '{method}'")
    return PseudoGrid(out)


@dataclass
class ChiTraceSpec:
    """What the training-time dependence trace evaluates.

    Every `trace_every` epochs the EMA generator produces `n_samples`
    fields; their chi vector over `pairs` at threshold `q` is compared to
    the training-set chi (always) and to `test_chi` (when given).
    """

    pairs: list[Pair]
    q: float = 0.95
    n_samples: int = 2000
    test_chi: Optional[ChiMatrix] = None


@dataclass
class EmulatorModel:
    """A trained emulator: generator (raw + EMA weights), config, margins."""

    generator: Sequential
    ema_params: list[np.ndarray]
    config: GanConfig
    grid_shape: tuple[int, int]
    margins: Optional[MarginalModelGrid] = None
    provenance: dict = field(default_factory=dict)
    loss_curve: Optional[np.ndarray] = None
    chi_trace: Optional[np.ndarray] = None  # rows (epoch, c_tr, c_te); c_te NaN if no test set

    def sample_pseudo(self, n: int, seed) -> PseudoGrid:
        """Draw n grids from the EMA generator in eval mode."""
        rng = np.random.default_rng(np.random.SeedSequence([int(seed), SAMPLE_SEED_SALT]))
        live = [p.data.copy() for p in self.generator.parameters()]
        for p, ema in zip(self.generator.parameters(), self.ema_params):
            p.data[...] = ema
        try:
            out = np.empty((n,) + tuple(self.grid_shape))
            done = 0
            while done < n:
                take = min(self.config.batch_size, n - done)
                z = latent_batch(rng, take, self.config.latent_dim)
                fields = self.generator.forward(z, train=False)
                out[done:done + take] = fields[:, 0]
                done += take
        finally:
            for p, old in zip(self.generator.parameters(), live):
                p.data[...] = old
        return PseudoGrid(np.clip(out, CLAMP, 1.0 - CLAMP))

    def save(self, path) -> None:
        """Serialize to the binary checkpoint format (plus margins/config)."""
        named: dict[str, np.ndarray] = {}
        named["config"] = np.array([
            self.config.learning_rate, self.config.batch_size, self.config.epochs,
            self.config.disc_steps_per_gen_step, self.config.ema_alpha,
            self.config.latent_dim, self.config.seed,
        ], dtype=float)
        named["grid_shape"] = np.array(self.grid_shape, dtype=float)
        for name, value in self.generator.state_dict().items():
            named[f"gen.{name}"] = value
        for i, ema in enumerate(self.ema_params):
            named[f"ema.{i}"] = ema
        if self.margins is not None:
            named["margins.mu"] = self.margins.mu
            named["margins.sigma"] = self.margins.sigma
            named["margins.xi"] = self.margins.xi
            named["margins.converged"] = self.margins.converged.astype(float)
            named["margins.nll"] = self.margins.nll
            named["margins.block_length"] = np.array([self.margins.block_length], dtype=float)
        if self.loss_curve is not None:
            named["loss_curve"] = self.loss_curve
        if self.chi_trace is not None:
            named["chi_trace"] = self.chi_trace
        if "data_digest" in self.provenance:
            digest = self.provenance["data_digest"].encode("ascii")
            named["provenance.data_digest"] = np.frombuffer(digest, dtype=np.uint8).astype(float)
        save_tensors(path, named)

    @classmethod
    def load(cls, path) -> "EmulatorModel":
        named = load_tensors(path)
        lr, batch, epochs, disc_steps, ema_alpha, latent, seed = named["config"]
        cfg = GanConfig(
            learning_rate=float(lr), batch_size=int(batch), epochs=int(epochs),
            disc_steps_per_gen_step=int(disc_steps), ema_alpha=float(ema_alpha),
            latent_dim=int(latent), seed=int(seed),
        )
        grid_shape = tuple(int(v) for v in named["grid_shape"])
        gen = build_generator(grid_shape, cfg.latent_dim, np.random.default_rng(0))
        gen.load_state_dict({k[len("gen."):]: v for k, v in named.items() if k.startswith("gen.")})
        n_params = len(gen.parameters())
        ema = [named[f"ema.{i}"] for i in range(n_params)]
        margins = None
        if "margins.mu" in named:
            margins = MarginalModelGrid(
                mu=named["margins.mu"],
                sigma=named["margins.sigma"],
                xi=named["margins.xi"],
                converged=named["margins.converged"] > 0.5,
                nll=named["margins.nll"],
                block_length=int(named["margins.block_length"][0]),
            )
        provenance = {"seed": cfg.seed}
        if "provenance.data_digest" in named:
            provenance["data_digest"] = (
                named["provenance.data_digest"].astype(np.uint8).tobytes().decode("ascii")
            )
        return cls(
            generator=gen,
            ema_params=ema,
            config=cfg,
            grid_shape=grid_shape,
            margins=margins,
            provenance=provenance,
            loss_curve=named.get("loss_curve"),
            chi_trace=named.get("chi_trace"),
        )


def train_evtgan(
    pseudo: PseudoGrid,
    cfg: GanConfig,
    trace: Optional[ChiTraceSpec] = None,
    trace_every: int = 500,
    on_epoch=None,
) -> EmulatorModel:
    """Train the DCGAN on pseudo-observations (the dependence model).

    Returns the emulator without margins attached; `run_evtgan` composes
    the full algorithm.  With a `trace`, the chi l2 errors against the
    train set (and test set, when given) are recorded every `trace_every`
    epochs, which is the convergence diagnostic recommended for choosing
    an epoch budget.
    """
    data = pseudo.values[:, None, :, :]
    digest = sha256_bytes(data.tobytes())
    rows: list[tuple[int, float, float]] = []
    hook = None
    if trace is not None:
        train_chi = chi_matrix(pseudo, trace.pairs, trace.q)

        def hook(epoch, sample):
            fields = sample(trace.n_samples)
            gen_grid = rerank_pseudo(PseudoGrid(np.clip(fields[:, 0], CLAMP, 1.0 - CLAMP)))
            gen_chi = chi_matrix(gen_grid, trace.pairs, trace.q)
            # early in training the generator may not reach the tail
            # threshold anywhere; the error is then undefined, not zero
            try:
                c_tr = chi_l2_error(gen_chi, train_chi)
            except UndefinedEstimateError:
                c_tr = np.nan
            c_te = np.nan
            if trace.test_chi is not None:
                try:
                    c_te = chi_l2_error(gen_chi, trace.test_chi)
                except UndefinedEstimateError:
                    pass
            rows.append((epoch, c_tr, c_te))

    result = train_gan(data, cfg, trace_hook=hook, trace_every=trace_every, on_epoch=on_epoch)
    return EmulatorModel(
        generator=result.generator,
        ema_params=result.ema_params,
        config=cfg,
        grid_shape=result.grid_shape,
        provenance={"seed": cfg.seed, "data_digest": digest},
        loss_curve=result.loss_curve,
        chi_trace=np.array(rows) if rows else None,
    )


def sample_emulator(model: EmulatorModel, n_star: int = 10_000, seed: int = 0) -> PseudoGrid:
    """Generate n_star new pseudo-observation grids from a trained model."""
    if model.generator is None or not model.ema_params:
        raise StateError("emulator has no trained generator")
    if n_star < 1:
        raise DataError("n_star must be >= 1")
    return model.sample_pseudo(n_star, seed)


def inverse_transform(pseudo: PseudoGrid, margins: MarginalModelGrid) -> MaximaGrid:
    """Map pseudo-observations to physical units via the fitted GEV quantiles.

    This is where extrapolation happens: values can exceed the training
    maxima.  Every site must have a converged fit.
    """
    if pseudo.grid_shape != margins.grid_shape:
        raise DataError(
            f"grid mismatch: pseudo {pseudo.grid_shape} vs margins {margins.grid_shape}"
        )
    failed = margins.failed_sites()
    if failed:
        raise DataError(f"margins missing converged fits at sites {failed}")
    H, W = pseudo.grid_shape
    out = np.empty_like(pseudo.values)
    for r in range(H):
        for c in range(W):
            out[:, r, c] = gev_quantile(pseudo.values[:, r, c], margins.params_at((r, c)))
    return MaximaGrid(out, block_length=margins.block_length, variable=margins.variable)


def empirical_inverse_transform(pseudo: PseudoGrid, train: MaximaGrid) -> MaximaGrid:
    """DCGAN-ablation back-transform: per-site empirical quantile function.

    Interpolates between the order statistics of the training sample, so
    generated physical values can never exceed the per-site train maximum.
    """
    if pseudo.grid_shape != train.grid_shape:
        raise DataError(
            f"grid mismatch: pseudo {pseudo.grid_shape} vs train {train.grid_shape}"
        )
    H, W = pseudo.grid_shape
    out = np.empty_like(pseudo.values)
    for r in range(H):
        for c in range(W):
            out[:, r, c] = np.quantile(train.values[:, r, c], pseudo.values[:, r, c])
    return MaximaGrid(out, block_length=train.block_length, variable=train.variable)


@dataclass
class EvtganRun:
    """Everything a full pipeline run produces."""

    model: EmulatorModel
    train: MaximaGrid
    test: Optional[MaximaGrid]
    generated_pseudo: PseudoGrid
    generated: MaximaGrid
    generated_ablation: Optional[MaximaGrid]
    pairs: list[Pair]
    q: float
    chi_train: ChiMatrix
    chi_test: Optional[ChiMatrix]
    chi_generated: ChiMatrix


def run_evtgan(
    data: MaximaGrid,
    cfg: GanConfig,
    n_train: int = 50,
    n_star: int = 10_000,
    q: float = 0.95,
    pairs: Optional[Sequence[Pair]] = None,
    n_pairs: int = 100,
    pair_seed: int = 0,
    trace_every: int = 500,
    normalization: str = "empirical",
    include_ablation: bool = True,
    on_epoch=None,
) -> EvtganRun:
    """The full algorithm: fit margins, learn dependence, sample, transform.

    The first `n_train` blocks train the model; the remainder is held out
    for evaluation.  When the data has no holdout (n_train >= n), the test
    side of the outputs is None.
    """
    if n_train + 2 <= data.n:
        train, test = data.split(n_train)
    elif n_train == data.n:
        train, test = data, None
    else:
        raise DataError(f"n_train={n_train} incompatible with {data.n} observations")

    margins = fit_margins(train)
    pseudo = to_pseudo_obs(train, method=normalization,
                           margins=margins if normalization == "gev" else None)

    if pairs is None:
        pairs = select_random_pairs(data.grid_shape, n_pairs, pair_seed)
    pairs = list(pairs)
    chi_test = None
    test_pseudo = None
    if test is not None:
        test_pseudo = to_pseudo_obs(test)
        chi_test = chi_matrix(test_pseudo, pairs, q)

    n_eval = test.n if test is not None else min(2000, 40 * cfg.batch_size)
    trace = ChiTraceSpec(pairs=pairs, q=q, n_samples=n_eval, test_chi=chi_test)
    model = train_evtgan(pseudo, cfg, trace=trace, trace_every=trace_every, on_epoch=on_epoch)
    model.margins = margins

    generated_pseudo = sample_emulator(model, n_star=n_star, seed=cfg.seed ^ SAMPLE_SEED_SALT)
    generated = inverse_transform(generated_pseudo, margins)
    generated_ablation = (
        empirical_inverse_transform(generated_pseudo, train) if include_ablation else None
    )
    chi_train = chi_matrix(pseudo, pairs, q)
    chi_generated = chi_matrix(rerank_pseudo(generated_pseudo), pairs, q)
    return EvtganRun(
        model=model,
        train=train,
        test=test,
        generated_pseudo=generated_pseudo,
        generated=generated,
        generated_ablation=generated_ablation,
        pairs=pairs,
        q=q,
        chi_train=chi_train,
        chi_test=chi_test,
        chi_generated=chi_generated,
    )
