"""Central finite-difference verification of analytic gradients.

Finite differences are a valid oracle only where the probed function is
smooth across the step.  Piecewise-linear activations (leaky-relu) put
kinks arbitrarily close to any wide network's operating point, so each
probed coordinate is gated: the central difference is computed at step h
and h/2, and a coordinate whose two estimates disagree is rejected as
non-smooth (a kink crossing perturbs the two estimates by O(1) relative)
and resampled.  Gated coordinates must still make up the large majority;
the checker reports how many were skipped.

Used by the test suite; exposed as library code so the same check can run
against custom layer stacks when debugging.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

__all__ = ["relative_error", "fd_gradient", "check_gradients", "GradCheckReport"]

FD_STEP = 1e-5


def relative_error(a: float, b: float, floor: float = 1e-6) -> float:
    return abs(a - b) / max(abs(a), abs(b), floor)


def fd_gradient(loss_fn: Callable[[], float], array: np.ndarray, flat_index: int,
                h: float = FD_STEP) -> float:
    """Central difference of loss_fn along one coordinate of `array`.

    `loss_fn` must recompute the loss from the current (mutated) contents of
    `array`, with any randomness frozen.
    """
    flat = array.reshape(-1)
    orig = flat[flat_index]
    flat[flat_index] = orig + h
    up = loss_fn()
    flat[flat_index] = orig - h
    down = loss_fn()
    flat[flat_index] = orig
    return (up - down) / (2.0 * h)


@dataclass
class GradCheckReport:
    worst_rel_err: float
    n_checked: int
    n_nonsmooth: int

    @property
    def checked_fraction(self) -> float:
        total = self.n_checked + self.n_nonsmooth
        return self.n_checked / total if total else 0.0


def check_gradients(
    loss_fn: Callable[[], float],
    arrays_with_grads: list[tuple[np.ndarray, np.ndarray]],
    rng: np.random.Generator,
    samples_per_array: int = 8,
    h: float = FD_STEP,
    smooth_gate: bool = True,
    gate_tol: float = 1e-3,
) -> GradCheckReport:
    """Compare analytic gradients against central differences.

    For each (array, analytic_grad) pair, probes `samples_per_array` random
    coordinates.  With `smooth_gate`, coordinates whose h and h/2 central
    differences disagree beyond `gate_tol` (relative) are counted as
    non-smooth and excluded from the error; everything else contributes to
    `worst_rel_err`.
    """
    worst = 0.0
    checked = 0
    nonsmooth = 0
    for array, grad in arrays_with_grads:
        size = array.size
        k = min(samples_per_array, size)
        idx = rng.choice(size, size=k, replace=False)
        gflat = np.asarray(grad).reshape(-1)
        for i in idx:
            numeric = fd_gradient(loss_fn, array, int(i), h=h)
            if smooth_gate:
                refined = fd_gradient(loss_fn, array, int(i), h=h / 2.0)
                if relative_error(numeric, refined) > gate_tol:
                    nonsmooth += 1
                    continue
            checked += 1
            worst = max(worst, relative_error(float(gflat[i]), numeric))
    return GradCheckReport(worst_rel_err=worst, n_checked=checked, n_nonsmooth=nonsmooth)
