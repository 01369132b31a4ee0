"""Evaluation report: the data behind the standard diagnostic figures.

An :class:`EvalReport` gathers the chi scatter table (test-set estimates
against train / emulator / Brown-Resnick), spectral angle samples for
selected pairs, convergence traces and the fitted GEV parameter grid.
:func:`plot_data_emit` serializes each table to CSV and renders minimal
static SVG scatter/histogram views - data products, not an interactive
frontend.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .brown_resnick import br_spectral_cdf
from .dependence import Pair
from .errors import DataError
from .gridio import fmt, margins_to_csv
from .ioutil import atomic_write_text
from .pipeline import MarginalModelGrid

__all__ = ["EvalReport", "SpectralPanel", "plot_data_emit"]

N_BINS = 20


@dataclass
class SpectralPanel:
    """Angle samples of one site pair under the compared models."""

    pair: Pair
    threshold: float
    angles_test: np.ndarray
    angles_evtgan: np.ndarray
    lam_br: Optional[float] = None  # analytic Brown-Resnick overlay


@dataclass
class EvalReport:
    q: float
    seed: int
    pairs: list[Pair] = field(default_factory=list)
    chi_test: Optional[np.ndarray] = None
    chi_train: Optional[np.ndarray] = None
    chi_evtgan: Optional[np.ndarray] = None
    chi_br: Optional[np.ndarray] = None
    spectral: dict[str, SpectralPanel] = field(default_factory=dict)
    traces: dict[int, np.ndarray] = field(default_factory=dict)  # n_train -> (epoch, c_tr, c_te)
    margins: Optional[MarginalModelGrid] = None
    grid_width: int = 0

    def missing_tables(self) -> list[str]:
        missing = []
        for name in ("chi_test", "chi_train", "chi_evtgan", "chi_br"):
            if getattr(self, name) is None:
                missing.append(name)
        if not self.spectral:
            missing.append("spectral")
        if not self.traces:
            missing.append("traces")
        if self.margins is None:
            missing.append("gev_params")
        return missing


# ---------------------------------------------------------------- SVG bits

_W, _H, _M = 480, 480, 55.0


def _svg(elements: list[str], title: str) -> str:
    body = "\n".join(elements)
    return (
        f'<?xml version="1.0" encoding="UTF-8"?>\n'
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}">\n'
        f'<title>{title}</title>\n'
        f'<rect width="{_W}" height="{_H}" fill="white"/>\n{body}\n</svg>\n'
    )


def _sx(x, lo, hi):
    return _M + (x - lo) / (hi - lo) * (_W - 2 * _M)


def _sy(y, lo, hi):
    return _H - _M - (y - lo) / (hi - lo) * (_H - 2 * _M)


def _axes(xlo, xhi, ylo, yhi, xlabel, ylabel) -> list[str]:
    e = [
        f'<line x1="{_M}" y1="{_H - _M}" x2="{_W - _M}" y2="{_H - _M}" stroke="black"/>',
        f'<line x1="{_M}" y1="{_M}" x2="{_M}" y2="{_H - _M}" stroke="black"/>',
        f'<text x="{_W / 2}" y="{_H - 12}" text-anchor="middle" font-size="13">{xlabel}</text>',
        f'<text x="14" y="{_H / 2}" text-anchor="middle" font-size="13" '
        f'transform="rotate(-90 14 {_H / 2})">{ylabel}</text>',
    ]
    for frac in (0.0, 0.5, 1.0):
        xv = xlo + frac * (xhi - xlo)
        yv = ylo + frac * (yhi - ylo)
        e.append(f'<text x="{_sx(xv, xlo, xhi):.1f}" y="{_H - _M + 16:.1f}" '
                 f'text-anchor="middle" font-size="11">{xv:.2f}</text>')
        e.append(f'<text x="{_M - 6:.1f}" y="{_sy(yv, ylo, yhi) + 4:.1f}" '
                 f'text-anchor="end" font-size="11">{yv:.2f}</text>')
    return e


def _scatter_svg(x, y, xlabel, ylabel, title, color="#c03028") -> str:
    e = _axes(0.0, 1.0, 0.0, 1.0, xlabel, ylabel)
    e.append(
        f'<line x1="{_sx(0, 0, 1):.1f}" y1="{_sy(0, 0, 1):.1f}" '
        f'x2="{_sx(1, 0, 1):.1f}" y2="{_sy(1, 0, 1):.1f}" '
        'stroke="#888888" stroke-dasharray="4 3"/>'
    )
    for xi, yi in zip(x, y):
        if np.isfinite(xi) and np.isfinite(yi):
            e.append(f'<circle cx="{_sx(xi, 0, 1):.1f}" cy="{_sy(yi, 0, 1):.1f}" '
                     f'r="2.5" fill="{color}" fill-opacity="0.6"/>')
    return _svg(e, title)


def _polyline(xs, ys, xlo, xhi, ylo, yhi, color, width=1.5) -> str:
    pts = " ".join(
        f"{_sx(x, xlo, xhi):.1f},{_sy(y, ylo, yhi):.1f}"
        for x, y in zip(xs, ys) if np.isfinite(y)
    )
    return f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="{width}"/>'


def _hist_density(angles: np.ndarray, edges: np.ndarray) -> np.ndarray:
    counts, _ = np.histogram(angles, bins=edges)
    widths = np.diff(edges)
    total = counts.sum()
    if total == 0:
        return np.zeros(len(widths))
    return counts / (total * widths)


def _spectral_svg(panel: SpectralPanel, edges, d_test, d_evtgan, d_br, title) -> str:
    ymax = 1.1 * max(1.0, np.nanmax([d_test.max(initial=0), d_evtgan.max(initial=0),
                                     0.0 if d_br is None else d_br.max(initial=0)]))
    e = _axes(0.0, 1.0, 0.0, ymax, "angle", "density")
    for k in range(len(d_test)):
        x0, x1 = _sx(edges[k], 0, 1), _sx(edges[k + 1], 0, 1)
        y = _sy(d_test[k], 0, ymax)
        e.append(f'<rect x="{x0:.1f}" y="{y:.1f}" width="{x1 - x0:.1f}" '
                 f'height="{_sy(0, 0, ymax) - y:.1f}" fill="#cc66cc" fill-opacity="0.5"/>')
    mids = 0.5 * (edges[:-1] + edges[1:])
    e.append(_polyline(mids, d_evtgan, 0, 1, 0, ymax, "#c03028"))
    if d_br is not None:
        e.append(_polyline(mids, d_br, 0, 1, 0, ymax, "#2050c0"))
    return _svg(e, title)


# ---------------------------------------------------------------- emission

def plot_data_emit(report: EvalReport, out_dir) -> list[Path]:
    """Write the per-figure CSVs and static SVG renderings.

    Raises DataError listing the missing tables if the report is incomplete.
    """
    missing = report.missing_tables()
    if missing:
        raise DataError(f"report incomplete; missing tables: {', '.join(missing)}")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    def emit_text(name: str, text: str):
        path = out_dir / name
        atomic_write_text(path, text)
        written.append(path)

    # chi scatter table + one scatter panel per model
    W = report.grid_width
    lines = ["i,j,q,seed,chi_test,chi_train,chi_evtgan,chi_br"]
    for k, (a, b) in enumerate(report.pairs):
        lines.append(
            f"{a[0] * W + a[1]},{b[0] * W + b[1]},{fmt(report.q)},{report.seed},"
            f"{fmt(report.chi_test[k])},{fmt(report.chi_train[k])},"
            f"{fmt(report.chi_evtgan[k])},{fmt(report.chi_br[k])}"
        )
    emit_text("chi_scatter.csv", "\n".join(lines) + "\n")
    for name, values in (("train", report.chi_train),
                         ("evtgan", report.chi_evtgan),
                         ("br", report.chi_br)):
        emit_text(
            f"chi_scatter_{name}.svg",
            _scatter_svg(report.chi_test, values, "chi (test)", f"chi ({name})",
                         f"extremal correlation: {name} vs test (q={report.q})"),
        )

    # spectral panels: 20-bin densities plus the analytic overlay
    edges = np.linspace(0.0, 1.0, N_BINS + 1)
    for label, panel in sorted(report.spectral.items()):
        d_test = _hist_density(panel.angles_test, edges)
        d_gen = _hist_density(panel.angles_evtgan, edges)
        d_br = None
        if panel.lam_br is not None:
            cdf = br_spectral_cdf(edges, panel.lam_br)
            d_br = np.diff(cdf) / np.diff(edges)
        lines = ["bin_lo,bin_hi,density_test,density_evtgan,density_br,threshold,seed"]
        for k in range(N_BINS):
            br_s = fmt(d_br[k]) if d_br is not None else "nan"
            lines.append(
                f"{fmt(edges[k])},{fmt(edges[k + 1])},{fmt(d_test[k])},"
                f"{fmt(d_gen[k])},{br_s},{fmt(panel.threshold)},{report.seed}"
            )
        emit_text(f"spectral_{label}.csv", "\n".join(lines) + "\n")
        emit_text(f"spectral_{label}.svg",
                  _spectral_svg(panel, edges, d_test, d_gen, d_br,
                                f"spectral distribution, {label} pair"))

    # convergence traces
    all_rows = np.vstack(list(report.traces.values()))
    ymax = 1.1 * float(np.nanmax(all_rows[:, 1:])) if all_rows.size else 1.0
    xmax = float(np.max(all_rows[:, 0]))
    e = _axes(0.0, xmax, 0.0, ymax, "epoch", "chi l2 error")
    colors = {30: "#c03028", 50: "#207040", 100: "#2050c0"}
    for n_train, rows in sorted(report.traces.items()):
        lines = ["epoch,c_tr,c_te,n_train,seed"]
        for row in rows:
            lines.append(f"{int(row[0])},{fmt(row[1])},{fmt(row[2])},{n_train},{report.seed}")
        emit_text(f"trace_n{n_train}.csv", "\n".join(lines) + "\n")
        color = colors.get(n_train, "#555555")
        e.append(_polyline(rows[:, 0], rows[:, 1], 0, xmax, 0, ymax, color, width=1.0))
        e.append(_polyline(rows[:, 0], rows[:, 2], 0, xmax, 0, ymax, color, width=2.0))
    emit_text("traces.svg", _svg(e, "chi error vs training epochs"))

    # margins
    margins_path = out_dir / "gev_params.csv"
    margins_to_csv(margins_path, report.margins)
    written.append(margins_path)
    return written
