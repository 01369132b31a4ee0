"""Command line surface.

Subcommands map onto the pipeline stages::

    synth           generate synthetic gridded maxima with known structure
    fit-gev         per-site GEV fits of a maxima grid -> CSV
    train           fit margins + train the dependence model -> model.evtg
    sample          draw new fields from a trained model
    eval-chi        empirical extremal correlations of a grid -> CSV
    eval-spectral   empirical spectral angles of one site pair -> CSV
    fit-br          Brown-Resnick variogram fit to a chi table -> CSV
    ablate-dcgan    sample with the empirical (range-bounded) back-transform
    experiment sensitivity   train-size sweep with convergence traces
    plot            render CSV/SVG bundle from evaluation artifacts

Every value can come from a config file (--config, INI-style sections named
after the command); explicit flags win over the file, the file wins over
built-in defaults.  Every command writes a manifest next to its artifacts
and writes files atomically.  Exit codes: 0 ok, 2 usage, 3 bad data,
4 convergence failure, 5 internal error.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import gridio
from .brown_resnick import SiteGeometry, br_chi, fit_br, fractal_variogram
from .dependence import (
    chi_matrix,
    rank_transform,
    select_random_pairs,
    select_site_pairs,
    spectral_empirical,
)
from .errors import ConvergenceError, DataError, EvtganError, ParameterError
from .experiment import run_sensitivity, write_sensitivity_outputs
from .gev import GevParams
from .gridio import fmt
from .ioutil import atomic_write_text, write_manifest
from .nnet import GanConfig
from .pipeline import (
    ChiTraceSpec,
    EmulatorModel,
    MaximaGrid,
    empirical_inverse_transform,
    fit_margins,
    inverse_transform,
    rerank_pseudo,
    sample_emulator,
    to_pseudo_obs,
    train_evtgan,
)
from .report import EvalReport, SpectralPanel, plot_data_emit
from .synthetic import make_synthetic

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_CONVERGENCE = 4
EXIT_INTERNAL = 5

OUT_DIR_ENV = "EVTGAN_OUT_DIR"


# ------------------------------------------------------------- config file

def parse_config(path) -> dict[str, dict[str, object]]:
    """Flat key-value config with [section] headers, one section per command."""
    sections: dict[str, dict[str, object]] = {}
    current: dict[str, object] = sections.setdefault("", {})
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if line.startswith("[") and line.endswith("]"):
                current = sections.setdefault(line[1:-1].strip(), {})
                continue
            if "=" not in line:
                raise DataError(f"{path}:{lineno}: expected key = value, got {raw.rstrip()}")
            key, value = (part.strip() for part in line.split("=", 1))
            current[key.replace("-", "_")] = _parse_scalar(value)
    return sections


def _parse_scalar(text: str):
    if text.lower() in ("true", "false"):
        return text.lower() == "true"
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            pass
    return text.strip("\"'")


class Settings:
    """Flag > config-file section > default, resolved per option."""

    def __init__(self, args: argparse.Namespace, section: dict, defaults: dict):
        self._args = vars(args)
        self._section = section
        self._defaults = defaults

    def __getattr__(self, key: str):
        value = self._args.get(key)
        if value is not None:
            return value
        if key in self._section:
            return self._section[key]
        if key in self._defaults:
            return self._defaults[key]
        raise AttributeError(key)


def _settings(args, command: str, defaults: dict) -> Settings:
    section = {}
    if args.config:
        section = parse_config(args.config).get(command, {})
    return Settings(args, section, defaults)


def _out_dir(value) -> Path:
    path = Path(value if value is not None else os.environ.get(OUT_DIR_ENV, "."))
    path.mkdir(parents=True, exist_ok=True)
    return path


def _parse_grid_shape(text: str) -> tuple[int, int]:
    try:
        h, w = text.lower().split("x")
        return int(h), int(w)
    except ValueError as exc:
        raise DataError(f"grid shape must look like 18x22, got {text!r}") from exc


def _parse_site(text: str) -> tuple[int, int]:
    r, c = text.split(",")
    return int(r), int(c)


def _parse_pairs(text: str) -> list[tuple[tuple[int, int], tuple[int, int]]]:
    """Format: 'r1,c1:r2,c2;r3,c3:r4,c4'."""
    pairs = []
    for chunk in text.split(";"):
        a, b = chunk.split(":")
        pairs.append((_parse_site(a), _parse_site(b)))
    return pairs


def _rank_grid_values(values: np.ndarray) -> np.ndarray:
    out = np.empty_like(values)
    for r in range(values.shape[1]):
        for c in range(values.shape[2]):
            out[:, r, c] = rank_transform(values[:, r, c])
    return out


class CsvStreamer:
    """Appends rows to a temp file, atomically renamed on close."""

    def __init__(self, path, header: str):
        self.path = Path(path)
        self.tmp = self.path.with_name(self.path.name + ".partial")
        self.fh = open(self.tmp, "w")
        self.fh.write(header + "\n")

    def row(self, *cells):
        self.fh.write(",".join(str(c) for c in cells) + "\n")

    def close(self):
        self.fh.flush()
        self.fh.close()
        os.replace(self.tmp, self.path)

    def abort(self):
        self.fh.close()
        if self.tmp.exists():
            self.tmp.unlink()


# ------------------------------------------------------------- subcommands

SYNTH_DEFAULTS = dict(kind="gauss_copula", grid="8x8", n=2050, mu=10.0, sigma=2.0, xi=0.2,
                      range=3.0, lam="1.0", hr_pairs="", seed=0, block_length=1,
                      variable="synthetic")


def cmd_synth(args) -> int:
    s = _settings(args, "synth", SYNTH_DEFAULTS)
    grid_shape = _parse_grid_shape(s.grid)
    dep: dict = {}
    if s.kind in ("gauss_copula", "mixed"):
        dep["range"] = float(s.range)
    if s.kind in ("hr_pairs", "mixed"):
        if not s.hr_pairs:
            raise DataError(f"kind '{s.kind}' needs --hr-pairs")
        dep["pairs"] = _parse_pairs(s.hr_pairs)
        lam = [float(v) for v in str(s.lam).split(",")]
        dep["lam"] = lam[0] if len(lam) == 1 else lam
    grid = make_synthetic(
        s.kind, grid_shape, int(s.n), (float(s.mu), float(s.sigma), float(s.xi)),
        dep, seed=int(s.seed), block_length=int(s.block_length), variable=s.variable,
    )
    out = Path(args.out)
    gridio.save_grid(out, grid)
    write_manifest(
        out.with_suffix(out.suffix + ".manifest.json"), "synth",
        {k: getattr(s, k) for k in SYNTH_DEFAULTS}, int(s.seed), {}, [out],
    )
    print(f"wrote {out} ({grid.n} x {grid.grid_shape[0]} x {grid.grid_shape[1]})")
    return EXIT_OK


FIT_GEV_DEFAULTS = dict(min_distinct=10, max_failure_fraction=0.05, jobs=1)


def cmd_fit_gev(args) -> int:
    s = _settings(args, "fit-gev", FIT_GEV_DEFAULTS)
    maxima = gridio.load_maxima(args.input)
    margins = fit_margins(maxima, min_distinct=int(s.min_distinct),
                          max_failure_fraction=float(s.max_failure_fraction),
                          n_jobs=int(s.jobs))
    out = Path(args.out)
    gridio.margins_to_csv(out, margins)
    write_manifest(
        out.with_suffix(out.suffix + ".manifest.json"), "fit-gev",
        {"min_distinct": int(s.min_distinct)}, None, {"input": args.input}, [out],
    )
    n_fail = len(margins.failed_sites())
    print(f"wrote {out}; {n_fail} of {margins.mu.size} sites failed")
    return EXIT_OK


TRAIN_DEFAULTS = dict(n_train=50, epochs=30_000, lr=2e-4, batch=50, ema=0.9, disc_steps=2,
                      latent_dim=100, seed=0, q=0.95, n_pairs=100, pair_seed=0,
                      trace_every=500, normalization="empirical", min_distinct=10)


def cmd_train(args) -> int:
    s = _settings(args, "train", TRAIN_DEFAULTS)
    out_dir = _out_dir(args.out_dir)
    data = gridio.load_maxima(args.input)
    n_train = int(s.n_train)
    if n_train == data.n:
        train, test = data, None
    else:
        train, test = data.split(n_train)
    margins = fit_margins(train, min_distinct=int(s.min_distinct))
    pseudo = to_pseudo_obs(train, method=s.normalization,
                           margins=margins if s.normalization == "gev" else None)
    pairs = select_random_pairs(data.grid_shape, int(s.n_pairs), int(s.pair_seed))
    test_chi = None
    n_eval = 2000
    if test is not None:
        test_chi = chi_matrix(to_pseudo_obs(test), pairs, float(s.q))
        n_eval = test.n
    cfg = GanConfig(
        learning_rate=float(s.lr), batch_size=int(s.batch), epochs=int(s.epochs),
        disc_steps_per_gen_step=int(s.disc_steps), ema_alpha=float(s.ema),
        latent_dim=int(s.latent_dim), seed=int(s.seed),
    )
    losses = CsvStreamer(out_dir / "losses.csv", "epoch,disc_loss,gen_loss")
    try:
        model = train_evtgan(
            pseudo, cfg,
            trace=ChiTraceSpec(pairs=pairs, q=float(s.q), n_samples=n_eval, test_chi=test_chi),
            trace_every=int(s.trace_every),
            on_epoch=lambda ep, dl, gl: losses.row(ep, fmt(dl), fmt(gl)),
        )
    except ConvergenceError as exc:
        losses.abort()
        state = getattr(exc, "state", None)
        if state is not None:
            from .nnet import save_tensors
            crash = out_dir / "diverged.evtg"
            save_tensors(crash, {f"gen.{k}": v for k, v in state["generator"].items()})
            print(f"training diverged at epoch {state['epoch']}; "
                  f"last finite generator state in {crash}", file=sys.stderr)
        raise
    losses.close()
    model.margins = margins
    model_path = out_dir / "model.evtg"
    model.save(model_path)
    gridio.margins_to_csv(out_dir / "gev.csv", margins)
    artifacts = [model_path, out_dir / "losses.csv", out_dir / "gev.csv"]
    if model.chi_trace is not None:
        trace_csv = out_dir / "chi_trace.csv"
        lines = ["epoch,c_tr,c_te"]
        for row in model.chi_trace:
            lines.append(f"{int(row[0])},{fmt(row[1])},{fmt(row[2])}")
        atomic_write_text(trace_csv, "\n".join(lines) + "\n")
        artifacts.append(trace_csv)
    write_manifest(
        out_dir / "manifest.json", "train",
        {k: getattr(s, k) for k in TRAIN_DEFAULTS}, int(s.seed),
        {"input": args.input}, artifacts,
    )
    print(f"wrote {model_path}")
    return EXIT_OK


SAMPLE_DEFAULTS = dict(n=10_000, seed=0)


def cmd_sample(args) -> int:
    s = _settings(args, "sample", SAMPLE_DEFAULTS)
    model = EmulatorModel.load(args.model)
    pseudo = sample_emulator(model, n_star=int(s.n), seed=int(s.seed))
    artifacts = []
    if args.pseudo_out:
        gridio.save_grid(args.pseudo_out, pseudo)
        artifacts.append(Path(args.pseudo_out))
    if args.out:
        if model.margins is None:
            raise DataError("model carries no margins; cannot produce physical samples")
        physical = inverse_transform(pseudo, model.margins)
        gridio.save_grid(args.out, physical)
        artifacts.append(Path(args.out))
    if not artifacts:
        raise DataError("nothing to write: pass --out and/or --pseudo-out")
    write_manifest(
        artifacts[0].with_suffix(artifacts[0].suffix + ".manifest.json"), "sample",
        {"n": int(s.n)}, int(s.seed), {"model": args.model}, artifacts,
    )
    print(f"wrote {', '.join(str(a) for a in artifacts)}")
    return EXIT_OK


EVAL_CHI_DEFAULTS = dict(q=0.95, n_pairs=100, sites=0, pair_seed=0)


def cmd_eval_chi(args) -> int:
    s = _settings(args, "eval-chi", EVAL_CHI_DEFAULTS)
    values, _, _ = gridio.load_grid(args.input)
    from .dependence import PseudoGrid
    pseudo = PseudoGrid(_rank_grid_values(values))
    grid_shape = pseudo.grid_shape
    if int(s.sites) > 0:
        pairs = select_site_pairs(grid_shape, int(s.sites), int(s.pair_seed))
    else:
        pairs = select_random_pairs(grid_shape, int(s.n_pairs), int(s.pair_seed))
    chi = chi_matrix(pseudo, pairs, float(s.q))
    out = Path(args.out)
    gridio.chi_to_csv(out, chi, grid_shape[1])
    write_manifest(
        out.with_suffix(out.suffix + ".manifest.json"), "eval-chi",
        {"q": float(s.q), "n_pairs": len(pairs)}, int(s.pair_seed),
        {"input": args.input}, [out],
    )
    print(f"wrote {out} ({len(pairs)} pairs, {chi.n_undefined} undefined)")
    return EXIT_OK


EVAL_SPECTRAL_DEFAULTS = dict(threshold=0.95)


def cmd_eval_spectral(args) -> int:
    s = _settings(args, "eval-spectral", EVAL_SPECTRAL_DEFAULTS)
    values, _, _ = gridio.load_grid(args.input)
    ranked = _rank_grid_values(values)
    site_a = _parse_site(args.pair.split(":")[0])
    site_b = _parse_site(args.pair.split(":")[1])
    H, W = values.shape[1], values.shape[2]
    for (r, c) in (site_a, site_b):
        if not (0 <= r < H and 0 <= c < W):
            raise DataError(f"site ({r}, {c}) outside grid {H}x{W}")
    sample = spectral_empirical(
        ranked[:, site_a[0], site_a[1]], ranked[:, site_b[0], site_b[1]],
        float(s.threshold), pair=(site_a, site_b),
    )
    out = Path(args.out)
    gridio.spectral_to_csv(out, sample, W)
    write_manifest(
        out.with_suffix(out.suffix + ".manifest.json"), "eval-spectral",
        {"threshold": float(s.threshold), "pair": args.pair}, None,
        {"input": args.input}, [out],
    )
    print(f"wrote {out} ({sample.angles.size} angles)")
    return EXIT_OK


FIT_BR_DEFAULTS = dict(curve_points=50)


def cmd_fit_br(args) -> int:
    s = _settings(args, "fit-br", FIT_BR_DEFAULTS)
    grid_shape = _parse_grid_shape(args.grid)
    chi = gridio.chi_from_csv(args.chi, grid_shape[1])
    geom = SiteGeometry.grid(grid_shape)
    params = fit_br(chi, geom)
    out = Path(args.out)
    atomic_write_text(out, "alpha,s\n" + f"{fmt(params.alpha)},{fmt(params.s)}\n")
    artifacts = [out]
    if args.curve_out:
        dists = [geom.pair_distance(p) for p in chi.pairs]
        h_grid = np.linspace(min(dists), max(dists), int(s.curve_points))
        lines = ["h,lambda,chi"]
        for h in h_grid:
            lam = fractal_variogram(h, params)
            lines.append(f"{fmt(h)},{fmt(lam)},{fmt(br_chi(lam))}")
        atomic_write_text(args.curve_out, "\n".join(lines) + "\n")
        artifacts.append(Path(args.curve_out))
    write_manifest(
        out.with_suffix(out.suffix + ".manifest.json"), "fit-br",
        {"grid": args.grid}, None, {"chi": args.chi}, artifacts,
    )
    print(f"fitted alpha={params.alpha:.6g} s={params.s:.6g}; wrote {out}")
    return EXIT_OK


ABLATE_DEFAULTS = dict(n=10_000, seed=0)


def cmd_ablate_dcgan(args) -> int:
    s = _settings(args, "ablate-dcgan", ABLATE_DEFAULTS)
    model = EmulatorModel.load(args.model)
    train = gridio.load_maxima(args.train_grid)
    pseudo = sample_emulator(model, n_star=int(s.n), seed=int(s.seed))
    bounded = empirical_inverse_transform(pseudo, train)
    out = Path(args.out)
    gridio.save_grid(out, bounded, variable=train.variable)
    artifacts = [out]
    if args.report:
        train_max = train.values.max(axis=0)
        gen_max = bounded.values.max(axis=0)
        n_exceed = (bounded.values > train_max[None, :, :]).sum(axis=0)
        lines = ["site_row,site_col,train_max,generated_max,n_exceed"]
        H, W = train.grid_shape
        for r in range(H):
            for c in range(W):
                lines.append(f"{r},{c},{fmt(train_max[r, c])},{fmt(gen_max[r, c])},"
                             f"{int(n_exceed[r, c])}")
        atomic_write_text(args.report, "\n".join(lines) + "\n")
        artifacts.append(Path(args.report))
    write_manifest(
        out.with_suffix(out.suffix + ".manifest.json"), "ablate-dcgan",
        {"n": int(s.n)}, int(s.seed),
        {"model": args.model, "train_grid": args.train_grid}, artifacts,
    )
    print(f"wrote {out}")
    return EXIT_OK


SENSITIVITY_DEFAULTS = dict(sizes="30,50,100", seeds="0", epochs=30_000, lr=2e-4, batch=50,
                            ema=0.9, disc_steps=2, latent_dim=100, q=0.95, n_pairs=100,
                            pair_seed=0, trace_every=500, jobs=1)


def cmd_experiment_sensitivity(args) -> int:
    s = _settings(args, "sensitivity", SENSITIVITY_DEFAULTS)
    out_dir = _out_dir(args.out_dir)
    data = gridio.load_maxima(args.input)
    sizes = [int(v) for v in str(s.sizes).split(",")]
    seeds = [int(v) for v in str(s.seeds).split(",")]
    base_cfg = GanConfig(
        learning_rate=float(s.lr), batch_size=int(s.batch), epochs=int(s.epochs),
        disc_steps_per_gen_step=int(s.disc_steps), ema_alpha=float(s.ema),
        latent_dim=int(s.latent_dim), seed=0,
    )
    runs = run_sensitivity(
        data, base_cfg, sizes=sizes, seeds=seeds, q=float(s.q),
        n_pairs=int(s.n_pairs), pair_seed=int(s.pair_seed),
        trace_every=int(s.trace_every), n_jobs=int(s.jobs),
    )
    artifacts = write_sensitivity_outputs(runs, out_dir, sizes)
    write_manifest(
        out_dir / "manifest.json", "experiment sensitivity",
        {k: getattr(s, k) for k in SENSITIVITY_DEFAULTS}, seeds,
        {"input": args.input}, artifacts,
    )
    print(f"wrote {len(artifacts)} files to {out_dir}")
    return EXIT_OK


def cmd_plot(args) -> int:
    in_dir = Path(args.in_dir)
    out_dir = _out_dir(args.out_dir)

    def load_chi_csv(name):
        path = in_dir / name
        if not path.exists():
            return None, None
        width = int(args.grid_width)
        chi = gridio.chi_from_csv(path, width)
        return chi, width

    report = EvalReport(q=float(args.q), seed=int(args.seed), grid_width=int(args.grid_width))
    chi_test, _ = load_chi_csv("chi_test.csv")
    if chi_test is not None:
        report.pairs = chi_test.pairs
        report.chi_test = chi_test.chi
        report.q = chi_test.q
    for name, attr in (("chi_train.csv", "chi_train"),
                       ("chi_evtgan.csv", "chi_evtgan"),
                       ("chi_br.csv", "chi_br")):
        chi, _ = load_chi_csv(name)
        if chi is not None:
            setattr(report, attr, chi.chi)
    for path in sorted(in_dir.glob("spectral_*_test.csv")):
        label = path.name[len("spectral_"):-len("_test.csv")]
        gen_path = in_dir / f"spectral_{label}_evtgan.csv"
        if not gen_path.exists():
            continue
        angles_test = _read_angle_csv(path)
        angles_gen = _read_angle_csv(gen_path)
        lam = None
        lam_path = in_dir / f"spectral_{label}_lambda.txt"
        if lam_path.exists():
            lam = float(lam_path.read_text().strip())
        report.spectral[label] = SpectralPanel(
            pair=((0, 0), (0, 0)), threshold=float(args.q),
            angles_test=angles_test, angles_evtgan=angles_gen, lam_br=lam,
        )
    for path in sorted(in_dir.glob("trace_n*.csv")):
        rows = []
        with open(path) as fh:
            for line in fh:
                line = line.strip()
                if not line or line.startswith("epoch"):
                    continue
                cells = line.split(",")
                rows.append((float(cells[0]), float(cells[1]), float(cells[2])))
        stem = path.stem.split("_")[1]
        n_train = int(stem.lstrip("n").split("seed")[0].rstrip("_"))
        report.traces.setdefault(n_train, np.array(rows))
    gev_path = in_dir / "gev.csv"
    if gev_path.exists():
        report.margins = _read_margins_csv(gev_path)
    written = plot_data_emit(report, out_dir)
    write_manifest(
        out_dir / "manifest.json", "plot", {"in_dir": str(in_dir)}, int(args.seed),
        {}, written,
    )
    print(f"wrote {len(written)} files to {out_dir}")
    return EXIT_OK


def _read_angle_csv(path) -> np.ndarray:
    angles = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("pair,"):
                continue
            angles.append(float(line.split(",")[1]))
    return np.array(angles)


def _read_margins_csv(path):
    from .pipeline import MarginalModelGrid
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("site_row"):
                continue
            cells = line.split(",")
            rows.append((int(cells[0]), int(cells[1]), float(cells[2]), float(cells[3]),
                         float(cells[4]), float(cells[5]), cells[6] == "true"))
    H = max(r[0] for r in rows) + 1
    W = max(r[1] for r in rows) + 1
    grid = MarginalModelGrid(
        mu=np.full((H, W), np.nan), sigma=np.full((H, W), np.nan),
        xi=np.full((H, W), np.nan), converged=np.zeros((H, W), dtype=bool),
        nll=np.full((H, W), np.nan),
    )
    for r, c, mu, sigma, xi, nll, conv in rows:
        grid.mu[r, c] = mu
        grid.sigma[r, c] = sigma
        grid.xi[r, c] = xi
        grid.nll[r, c] = nll
        grid.converged[r, c] = conv
    return grid


# ------------------------------------------------------------------ parser

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="evtgan",
        description="Spatial extremes emulation: GEV margins + DCGAN dependence",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, **kwargs):
        p = sub.add_parser(name, **kwargs)
        p.set_defaults(func=func)
        p.add_argument("--config", help="config file; flags override its values")
        return p

    p = add("synth", cmd_synth, help="generate synthetic gridded maxima")
    p.add_argument("--kind", choices=["gauss_copula", "hr_pairs", "mixed"])
    p.add_argument("--grid", help="grid shape, e.g. 8x8")
    p.add_argument("--n", type=int)
    p.add_argument("--mu", type=float)
    p.add_argument("--sigma", type=float)
    p.add_argument("--xi", type=float)
    p.add_argument("--range", type=float, help="correlation range (grid cells)")
    p.add_argument("--hr-pairs", dest="hr_pairs", help="e.g. 0,0:0,1;2,2:2,3")
    p.add_argument("--lam", help="lambda per designated pair (comma list or scalar)")
    p.add_argument("--seed", type=int)
    p.add_argument("--block-length", dest="block_length", type=int)
    p.add_argument("--variable")
    p.add_argument("--out", required=True)

    p = add("fit-gev", cmd_fit_gev, help="fit per-site GEV margins")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--min-distinct", dest="min_distinct", type=int)
    p.add_argument("--max-failure-fraction", dest="max_failure_fraction", type=float)
    p.add_argument("--jobs", type=int)

    p = add("train", cmd_train, help="fit margins and train the dependence model")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out-dir", dest="out_dir")
    p.add_argument("--n-train", dest="n_train", type=int)
    p.add_argument("--epochs", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--batch", type=int)
    p.add_argument("--ema", type=float)
    p.add_argument("--disc-steps", dest="disc_steps", type=int)
    p.add_argument("--latent-dim", dest="latent_dim", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--q", type=float)
    p.add_argument("--n-pairs", dest="n_pairs", type=int)
    p.add_argument("--pair-seed", dest="pair_seed", type=int)
    p.add_argument("--trace-every", dest="trace_every", type=int)
    p.add_argument("--normalization", choices=["empirical", "gev"])
    p.add_argument("--min-distinct", dest="min_distinct", type=int)

    p = add("sample", cmd_sample, help="draw new fields from a trained model")
    p.add_argument("--model", required=True)
    p.add_argument("--n", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="physical-scale output grid")
    p.add_argument("--pseudo-out", dest="pseudo_out", help="pseudo-scale output grid")

    p = add("eval-chi", cmd_eval_chi, help="empirical extremal correlations")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--q", type=float)
    p.add_argument("--n-pairs", dest="n_pairs", type=int)
    p.add_argument("--sites", type=int, help="use all pairs among this many random sites")
    p.add_argument("--pair-seed", dest="pair_seed", type=int)

    p = add("eval-spectral", cmd_eval_spectral, help="empirical spectral angles of one pair")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--pair", required=True, help="r1,c1:r2,c2")
    p.add_argument("--threshold", type=float)
    p.add_argument("--out", required=True)

    p = add("fit-br", cmd_fit_br, help="fit the Brown-Resnick variogram to a chi table")
    p.add_argument("--chi", required=True)
    p.add_argument("--grid", required=True, help="grid shape, e.g. 8x8")
    p.add_argument("--out", required=True)
    p.add_argument("--curve-out", dest="curve_out")
    p.add_argument("--curve-points", dest="curve_points", type=int)

    p = add("ablate-dcgan", cmd_ablate_dcgan,
            help="sample via the empirical back-transform (bounded by the train range)")
    p.add_argument("--model", required=True)
    p.add_argument("--train-grid", dest="train_grid", required=True)
    p.add_argument("--n", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True)
    p.add_argument("--report", help="per-site exceedance report CSV")

    p = add("experiment", None, help="experiment drivers")
    exp_sub = p.add_subparsers(dest="experiment", required=True)
    pe = exp_sub.add_parser("sensitivity", help="train-size sensitivity sweep")
    pe.set_defaults(func=cmd_experiment_sensitivity)
    pe.add_argument("--config")
    pe.add_argument("--in", dest="input", required=True)
    pe.add_argument("--out-dir", dest="out_dir")
    pe.add_argument("--sizes")
    pe.add_argument("--seeds")
    pe.add_argument("--epochs", type=int)
    pe.add_argument("--lr", type=float)
    pe.add_argument("--batch", type=int)
    pe.add_argument("--ema", type=float)
    pe.add_argument("--disc-steps", dest="disc_steps", type=int)
    pe.add_argument("--latent-dim", dest="latent_dim", type=int)
    pe.add_argument("--q", type=float)
    pe.add_argument("--n-pairs", dest="n_pairs", type=int)
    pe.add_argument("--pair-seed", dest="pair_seed", type=int)
    pe.add_argument("--trace-every", dest="trace_every", type=int)
    pe.add_argument("--jobs", type=int)

    p = add("plot", cmd_plot, help="emit CSV/SVG bundle from evaluation artifacts")
    p.add_argument("--in-dir", dest="in_dir", required=True)
    p.add_argument("--out-dir", dest="out_dir")
    p.add_argument("--grid-width", dest="grid_width", required=True, type=int)
    p.add_argument("--q", type=float, default=0.95)
    p.add_argument("--seed", type=int, default=0)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    func = getattr(args, "func", None)
    if func is None:
        parser.error("no command given")
    try:
        return func(args)
    except ConvergenceError as exc:
        print(f"convergence error: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except (DataError, ParameterError, FileNotFoundError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except EvtganError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except Exception as exc:  # pragma: no cover - last-resort diagnostics
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
