"""Convolution primitives: im2col/col2im and the forward/backward pairs.

All spatial ops use the cross-correlation convention (no kernel flip), NCHW
layout and float64 throughout.  Convolutions reduce to one GEMM per pass
via an im2col matrix; transposed convolution is implemented as the exact
adjoint of convolution, so the two share their lowering code.

The column layout keeps channels innermost, (N*Ho*Wo, fh*fw*C): the
scatter-add in col2im then streams contiguous C-sized blocks, which is what
makes the training loop GEMM-bound rather than scatter-bound.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..errors import DataError

__all__ = [
    "conv2d_output_shape",
    "conv_transpose2d_output_shape",
    "conv2d_forward",
    "conv2d_backward",
    "conv_transpose2d_forward",
    "conv_transpose2d_backward",
]


def conv2d_output_shape(h: int, w: int, fh: int, fw: int, stride: int, padding: int):
    if h + 2 * padding < fh or w + 2 * padding < fw:
        raise DataError(
            f"kernel {fh}x{fw} exceeds padded input {h + 2 * padding}x{w + 2 * padding}"
        )
    return (h + 2 * padding - fh) // stride + 1, (w + 2 * padding - fw) // stride + 1


def conv_transpose2d_output_shape(h: int, w: int, fh: int, fw: int, stride: int, padding: int):
    ho = (h - 1) * stride - 2 * padding + fh
    wo = (w - 1) * stride - 2 * padding + fw
    if ho < 1 or wo < 1:
        raise DataError(f"transposed conv collapses {h}x{w} to {ho}x{wo}")
    return ho, wo


def _im2col(x: np.ndarray, fh: int, fw: int, stride: int, padding: int) -> np.ndarray:
    """Lower (N, C, H, W) to patch rows (N*Ho*Wo, fh*fw*C), channels innermost."""
    n, c, h, w = x.shape
    if padding:
        x = np.pad(x, ((0, 0), (0, 0), (padding, padding), (padding, padding)))
    windows = sliding_window_view(x, (fh, fw), axis=(2, 3))[:, :, ::stride, ::stride]
    ho, wo = windows.shape[2], windows.shape[3]
    cols = windows.transpose(0, 2, 3, 4, 5, 1).reshape(n * ho * wo, fh * fw * c)
    return np.ascontiguousarray(cols)


def _col2im(
    cols: np.ndarray,
    x_shape: tuple[int, int, int, int],
    fh: int,
    fw: int,
    stride: int,
    padding: int,
) -> np.ndarray:
    """Adjoint of :func:`_im2col`: scatter-add patch rows back to an image."""
    n, c, h, w = x_shape
    hp, wp = h + 2 * padding, w + 2 * padding
    ho = (hp - fh) // stride + 1
    wo = (wp - fw) // stride + 1
    patches = cols.reshape(n, ho, wo, fh, fw, c)
    out = np.zeros((n, hp, wp, c), dtype=np.float64)
    for i in range(fh):
        i_end = i + stride * ho
        for j in range(fw):
            out[:, i:i_end:stride, j:j + stride * wo:stride, :] += patches[:, :, :, i, j, :]
    if padding:
        out = out[:, padding:hp - padding, padding:wp - padding, :]
    return np.ascontiguousarray(out.transpose(0, 3, 1, 2))


def _kernel_rows(kernel: np.ndarray) -> np.ndarray:
    """(K, C, fh, fw) -> (K, fh*fw*C), matching the column layout."""
    k = kernel.shape[0]
    return np.ascontiguousarray(kernel.transpose(0, 2, 3, 1).reshape(k, -1))


def conv2d_forward(x, kernel, stride: int = 1, padding: int = 0, bias=None):
    """Strided cross-correlation.

    x: (N, C, H, W); kernel: (K, C, fh, fw); bias: (K,) or None.
    Output spatial extent: floor((H + 2*padding - fh)/stride) + 1.
    Returns (out, cache); `cache` feeds :func:`conv2d_backward`.
    """
    x = np.asarray(x, dtype=np.float64)
    kernel = np.asarray(kernel, dtype=np.float64)
    n, c, h, w = x.shape
    k, ck, fh, fw = kernel.shape
    if ck != c:
        raise DataError(f"kernel expects {ck} input channels, data has {c}")
    ho, wo = conv2d_output_shape(h, w, fh, fw, stride, padding)
    cols = _im2col(x, fh, fw, stride, padding)
    kmat = _kernel_rows(kernel)
    out = cols @ kmat.T
    if bias is not None:
        out += np.asarray(bias, dtype=np.float64)
    out = np.ascontiguousarray(out.reshape(n, ho, wo, k).transpose(0, 3, 1, 2))
    cache = (cols, kmat, x.shape, kernel.shape, stride, padding)
    return out, cache


def conv2d_backward(grad_out, kernel, cache):
    """Gradients of :func:`conv2d_forward`: returns (gx, gkernel, gbias)."""
    cols, kmat, x_shape, k_shape, stride, padding = cache
    k, c, fh, fw = k_shape
    g = np.asarray(grad_out, dtype=np.float64)
    gmat = g.transpose(0, 2, 3, 1).reshape(-1, k)
    gkernel = (gmat.T @ cols).reshape(k, fh, fw, c).transpose(0, 3, 1, 2)
    gbias = gmat.sum(axis=0)
    gx = _col2im(gmat @ kmat, x_shape, fh, fw, stride, padding)
    return gx, np.ascontiguousarray(gkernel), gbias


def conv_transpose2d_forward(x, kernel, stride: int = 1, padding: int = 0, bias=None):
    """Transposed (fractionally strided) convolution, adjoint of conv2d.

    x: (N, C_in, H, W); kernel: (C_in, C_out, fh, fw); bias: (C_out,) or None.
    Output spatial extent: (H - 1)*stride - 2*padding + fh.
    """
    x = np.asarray(x, dtype=np.float64)
    kernel = np.asarray(kernel, dtype=np.float64)
    n, c_in, h, w = x.shape
    ck, c_out, fh, fw = kernel.shape
    if ck != c_in:
        raise DataError(f"kernel expects {ck} input channels, data has {c_in}")
    ho, wo = conv_transpose2d_output_shape(h, w, fh, fw, stride, padding)
    xmat = np.ascontiguousarray(x.transpose(0, 2, 3, 1).reshape(n * h * w, c_in))
    kmat = np.ascontiguousarray(kernel.transpose(0, 2, 3, 1).reshape(c_in, -1))
    out = _col2im(xmat @ kmat, (n, c_out, ho, wo), fh, fw, stride, padding)
    if bias is not None:
        out += np.asarray(bias, dtype=np.float64).reshape(1, c_out, 1, 1)
    cache = (xmat, kmat, x.shape, kernel.shape, stride, padding)
    return out, cache


def conv_transpose2d_backward(grad_out, kernel, cache):
    """Gradients of :func:`conv_transpose2d_forward`: (gx, gkernel, gbias)."""
    xmat, kmat, x_shape, k_shape, stride, padding = cache
    c_in, c_out, fh, fw = k_shape
    n, _, h, w = x_shape
    g = np.asarray(grad_out, dtype=np.float64)
    gcols = _im2col(g, fh, fw, stride, padding)       # (N*H*W, fh*fw*C_out)
    gx = (gcols @ kmat.T).reshape(n, h, w, c_in)
    gx = np.ascontiguousarray(gx.transpose(0, 3, 1, 2))
    gkernel = (xmat.T @ gcols).reshape(c_in, fh, fw, c_out).transpose(0, 3, 1, 2)
    gbias = g.sum(axis=(0, 2, 3))
    return gx, np.ascontiguousarray(gkernel), gbias
