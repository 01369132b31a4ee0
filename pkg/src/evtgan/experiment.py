"""Sample-size sensitivity experiment.

For each training-set size (30, 50 and 100 by default) and each seed, the
emulator is trained on the first n_train blocks and the chi l2 errors
against the train set (C_tr) and the n_test = N - n_train held-out blocks
(C_te) are recorded every `trace_every` epochs.  One trace CSV per run plus
a summary table; runs are independent deterministic tasks and may execute
in parallel without changing any output byte.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .dependence import ChiMatrix, Pair, chi_l2_error, chi_matrix, select_random_pairs
from .errors import DataError
from .gridio import fmt
from .ioutil import atomic_write_text, sha256_bytes
from .nnet import GanConfig
from .pipeline import ChiTraceSpec, MaximaGrid, to_pseudo_obs, train_evtgan

__all__ = ["SensitivityRun", "run_sensitivity", "independence_chi", "write_sensitivity_outputs"]

MIN_DATASET = 2000


@dataclass
class SensitivityRun:
    n_train: int
    seed: int
    trace: np.ndarray          # rows (epoch, c_tr, c_te)
    c_indep: float             # independence-baseline chi error vs test
    c_bench: float             # train-set benchmark chi error vs test

    @property
    def final_c_tr(self) -> float:
        return float(self.trace[-1, 1])

    @property
    def final_c_te(self) -> float:
        return float(self.trace[-1, 2])


def independence_chi(pairs: Sequence[Pair], q: float) -> ChiMatrix:
    """The no-dependence reference: chi identically 1 - q at finite level q."""
    return ChiMatrix(pairs=list(pairs), chi=np.full(len(pairs), 1.0 - q), q=q)


def _one_run(payload) -> tuple[int, int, np.ndarray, float, float]:
    values, block_length, n_train, cfg, q, pairs, trace_every = payload
    data = MaximaGrid(values, block_length=block_length)
    train, test = data.split(n_train)
    train_pseudo = to_pseudo_obs(train)
    test_pseudo = to_pseudo_obs(test)
    chi_test = chi_matrix(test_pseudo, pairs, q)
    chi_train = chi_matrix(train_pseudo, pairs, q)
    c_indep = chi_l2_error(independence_chi(pairs, q), chi_test)
    c_bench = chi_l2_error(chi_train, chi_test)
    trace = ChiTraceSpec(pairs=pairs, q=q, n_samples=test.n, test_chi=chi_test)
    model = train_evtgan(train_pseudo, cfg, trace=trace, trace_every=trace_every)
    return n_train, cfg.seed, model.chi_trace, c_indep, c_bench


def run_sensitivity(
    data: MaximaGrid,
    base_cfg: GanConfig,
    sizes: Sequence[int] = (30, 50, 100),
    seeds: Sequence[int] = (0,),
    q: float = 0.95,
    n_pairs: int = 100,
    pair_seed: int = 0,
    trace_every: int = 500,
    n_jobs: int = 1,
) -> list[SensitivityRun]:
    """Train one emulator per (n_train, seed) and collect the chi traces.

    All runs score the same seeded pair set, so traces are comparable
    across sizes and seeds.
    """
    if data.n < MIN_DATASET:
        raise DataError(
            f"sensitivity experiment needs >= {MIN_DATASET} observations, got {data.n}"
        )
    for size in sizes:
        if size + 2 > data.n:
            raise DataError(f"n_train={size} leaves no test data")
    pairs = select_random_pairs(data.grid_shape, n_pairs, pair_seed)
    payloads = [
        (data.values, data.block_length, int(size), replace(base_cfg, seed=int(seed)),
         q, pairs, trace_every)
        for size in sizes
        for seed in seeds
    ]
    if n_jobs > 1:
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            raw = list(pool.map(_one_run, payloads))
    else:
        raw = [_one_run(p) for p in payloads]
    return [
        SensitivityRun(n_train=nt, seed=sd, trace=tr, c_indep=ci, c_bench=cb)
        for nt, sd, tr, ci, cb in raw
    ]


def summarize(runs: Sequence[SensitivityRun], sizes: Sequence[int]) -> dict:
    """Majority-of-seeds verdicts over the collected runs."""
    by_seed: dict[int, dict[int, SensitivityRun]] = {}
    for run in runs:
        by_seed.setdefault(run.seed, {})[run.n_train] = run
    ordered = sorted(sizes)
    nonincreasing = 0
    beats_indep = 0
    total = 0
    for seed, by_size in sorted(by_seed.items()):
        if len(by_size) != len(ordered):
            continue
        total += 1
        finals = [by_size[s].final_c_te for s in ordered]
        if all(a >= b for a, b in zip(finals, finals[1:])):
            nonincreasing += 1
        if all(by_size[s].final_c_te < by_size[s].c_indep for s in ordered):
            beats_indep += 1
    return {
        "seeds_evaluated": total,
        "c_te_nonincreasing_in_n_train": nonincreasing,
        "c_te_below_independence_all_sizes": beats_indep,
        "nonincreasing_majority": bool(total and nonincreasing * 2 > total),
    }


def write_sensitivity_outputs(runs: Sequence[SensitivityRun], out_dir,
                              sizes: Sequence[int]) -> list[Path]:
    """One trace CSV per run plus summary.csv; deterministic bytes."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for run in sorted(runs, key=lambda r: (r.n_train, r.seed)):
        lines = ["epoch,c_tr,c_te,n_train,seed"]
        for row in run.trace:
            lines.append(f"{int(row[0])},{fmt(row[1])},{fmt(row[2])},{run.n_train},{run.seed}")
        path = out_dir / f"trace_n{run.n_train}_seed{run.seed}.csv"
        atomic_write_text(path, "\n".join(lines) + "\n")
        written.append(path)
    lines = ["n_train,seed,final_epoch,final_c_tr,final_c_te,c_indep,c_bench"]
    for run in sorted(runs, key=lambda r: (r.n_train, r.seed)):
        lines.append(
            f"{run.n_train},{run.seed},{int(run.trace[-1, 0])},"
            f"{fmt(run.final_c_tr)},{fmt(run.final_c_te)},"
            f"{fmt(run.c_indep)},{fmt(run.c_bench)}"
        )
    verdict = summarize(runs, sizes)
    lines.append(f"# verdict: {verdict}")
    path = out_dir / "summary.csv"
    atomic_write_text(path, "\n".join(lines) + "\n")
    written.append(path)
    return written
