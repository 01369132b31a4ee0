"""Grid and table serialization.

EVTGRID binary format: one ASCII header line

    EVTGRID v1, n, H, W, variable, k

followed by n*H*W little-endian float64 values in (observation, row, col)
order.  Pseudo-observation grids use k = 0.  CSV import/export is provided
for small grids, plus the CSV schemas for chi matrices, spectral samples
and GEV parameter grids.  All writes are atomic.
"""

from __future__ import annotations

import io
from pathlib import Path

import numpy as np

from .dependence import ChiMatrix, PseudoGrid, SpectralSample
from .errors import DataError
from .ioutil import atomic_write_bytes, atomic_write_text
from .pipeline import MarginalModelGrid, MaximaGrid

__all__ = [
    "save_grid",
    "load_grid",
    "load_maxima",
    "load_pseudo",
    "grid_to_csv",
    "grid_from_csv",
    "chi_to_csv",
    "chi_from_csv",
    "spectral_to_csv",
    "margins_to_csv",
    "fmt",
]

MAGIC_LINE = "EVTGRID v1"


def fmt(x: float) -> str:
    """Shortest round-tripping decimal form; deterministic output files."""
    return repr(float(x))


def _grid_fields(grid) -> tuple[np.ndarray, str, int]:
    if isinstance(grid, MaximaGrid):
        return grid.values, grid.variable, grid.block_length
    if isinstance(grid, PseudoGrid):
        return grid.values, "pseudo", 0
    raise DataError(f"cannot serialize {type(grid).__name__} as a grid")


def save_grid(path, grid, variable: str | None = None) -> None:
    values, var, k = _grid_fields(grid)
    if variable is not None:
        var = variable
    if "," in var or "\n" in var:
        raise DataError("variable label must not contain commas or newlines")
    n, H, W = values.shape
    header = f"{MAGIC_LINE}, {n}, {H}, {W}, {var}, {k}\n"
    buf = io.BytesIO()
    buf.write(header.encode("ascii"))
    buf.write(np.ascontiguousarray(values, dtype="<f8").tobytes())
    atomic_write_bytes(path, buf.getvalue())


def load_grid(path) -> tuple[np.ndarray, str, int]:
    """Read any EVTGRID file; returns (values, variable, block_length)."""
    path = Path(path)
    with open(path, "rb") as fh:
        header = fh.readline().decode("ascii", errors="replace").rstrip("\n")
        parts = [p.strip() for p in header.split(",")]
        if len(parts) != 6 or parts[0] != MAGIC_LINE:
            raise DataError(f"{path} is not an EVTGRID v1 file (header {header!r})")
        n, H, W = (int(parts[i]) for i in (1, 2, 3))
        variable = parts[4]
        k = int(parts[5])
        data = fh.read()
    expected = n * H * W * 8
    if len(data) != expected:
        raise DataError(f"{path}: expected {expected} payload bytes, found {len(data)}")
    values = np.frombuffer(data, dtype="<f8").reshape(n, H, W).astype(np.float64)
    return values, variable, k


def load_maxima(path) -> MaximaGrid:
    values, variable, k = load_grid(path)
    return MaximaGrid(values, block_length=max(k, 1), variable=variable)


def load_pseudo(path) -> PseudoGrid:
    values, _, _ = load_grid(path)
    return PseudoGrid(values)


def grid_to_csv(path, grid) -> None:
    values, var, k = _grid_fields(grid)
    lines = [f"# variable={var} block_length={k}", "obs,row,col,value"]
    n, H, W = values.shape
    for i in range(n):
        for r in range(H):
            for c in range(W):
                lines.append(f"{i},{r},{c},{fmt(values[i, r, c])}")
    atomic_write_text(path, "\n".join(lines) + "\n")


def grid_from_csv(path) -> np.ndarray:
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#") or line.startswith("obs,"):
                continue
            i, r, c, v = line.split(",")
            rows.append((int(i), int(r), int(c), float(v)))
    if not rows:
        raise DataError(f"{path} holds no grid values")
    n = max(r[0] for r in rows) + 1
    H = max(r[1] for r in rows) + 1
    W = max(r[2] for r in rows) + 1
    if len(rows) != n * H * W:
        raise DataError(f"{path}: expected {n * H * W} rows, found {len(rows)}")
    values = np.empty((n, H, W))
    for i, r, c, v in rows:
        values[i, r, c] = v
    return values


def _site_id(site, width: int) -> int:
    return site[0] * width + site[1]


def chi_to_csv(path, chi: ChiMatrix, grid_width: int) -> None:
    """Columns i, j, chi, q with i/j linear site ids (row*W + col)."""
    lines = ["i,j,chi,q"]
    for k, (a, b) in enumerate(chi.pairs):
        value = fmt(chi.chi[k]) if chi.defined[k] else "nan"
        lines.append(f"{_site_id(a, grid_width)},{_site_id(b, grid_width)},{value},{fmt(chi.q)}")
    atomic_write_text(path, "\n".join(lines) + "\n")


def chi_from_csv(path, grid_width: int) -> ChiMatrix:
    pairs = []
    vals = []
    q = None
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("i,"):
                continue
            i, j, chi_s, q_s = line.split(",")
            i, j = int(i), int(j)
            pairs.append(((i // grid_width, i % grid_width), (j // grid_width, j % grid_width)))
            vals.append(float(chi_s))
            q = float(q_s)
    if q is None:
        raise DataError(f"{path} holds no chi rows")
    return ChiMatrix(pairs=pairs, chi=np.array(vals), q=q)


def spectral_to_csv(path, sample: SpectralSample, grid_width: int | None = None) -> None:
    """Columns pair, angle; the pair renders as linear ids 'i-j'."""
    if sample.pair is not None and grid_width is not None:
        tag = f"{_site_id(sample.pair[0], grid_width)}-{_site_id(sample.pair[1], grid_width)}"
    else:
        tag = "-"
    lines = ["pair,angle"]
    for angle in sample.angles:
        lines.append(f"{tag},{fmt(angle)}")
    atomic_write_text(path, "\n".join(lines) + "\n")


def margins_to_csv(path, margins: MarginalModelGrid) -> None:
    """Per-site GEV fit table: site_row, site_col, mu, sigma, xi, nll, converged."""
    lines = ["site_row,site_col,mu,sigma,xi,nll,converged"]
    H, W = margins.grid_shape
    for r in range(H):
        for c in range(W):
            lines.append(
                f"{r},{c},{fmt(margins.mu[r, c])},{fmt(margins.sigma[r, c])},"
                f"{fmt(margins.xi[r, c])},{fmt(margins.nll[r, c])},"
                f"{str(bool(margins.converged[r, c])).lower()}"
            )
    atomic_write_text(path, "\n".join(lines) + "\n")
