"""Vectorized NumPy implementations of the hot kernels.

This is the fallback lane used when the compiled extension is not
available; semantics are identical to :mod:`linkforge.kernels._core`
(floating-point results may differ in the last ulp because accumulation
happens through BLAS/ufunc reductions instead of scalar loops).
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


def conv2d_forward(x: np.ndarray, kernels: np.ndarray, bias: np.ndarray) -> np.ndarray:
    """2-D cross-correlation with zero 'same' padding.

    x: (B, H, W, C_in), kernels: (C_out, Z, Z, C_in) with Z odd,
    bias: (C_out,). Returns (B, H, W, C_out).
    """
    b, h, w, c_in = x.shape
    c_out, z, _, _ = kernels.shape
    p = (z - 1) // 2
    xp = np.zeros((b, h + 2 * p, w + 2 * p, c_in), dtype=np.float64)
    xp[:, p : p + h, p : p + w, :] = x
    win = sliding_window_view(xp, (z, z), axis=(1, 2))  # (B,H,W,C_in,Z,Z)
    y = np.tensordot(win, kernels, axes=((3, 4, 5), (3, 1, 2)))
    return y + bias


def conv2d_backward(
    x: np.ndarray, kernels: np.ndarray, grad: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Gradients of :func:`conv2d_forward` w.r.t. input, kernels, bias."""
    b, h, w, c_in = x.shape
    c_out, z, _, _ = kernels.shape
    p = (z - 1) // 2

    xp = np.zeros((b, h + 2 * p, w + 2 * p, c_in), dtype=np.float64)
    xp[:, p : p + h, p : p + w, :] = x
    win = sliding_window_view(xp, (z, z), axis=(1, 2))
    d_kernels = np.tensordot(grad, win, axes=((0, 1, 2), (0, 1, 2)))
    d_kernels = np.ascontiguousarray(d_kernels.transpose(0, 2, 3, 1))

    d_bias = grad.sum(axis=(0, 1, 2))

    gp = np.zeros((b, h + 2 * p, w + 2 * p, c_out), dtype=np.float64)
    gp[:, p : p + h, p : p + w, :] = grad
    gwin = sliding_window_view(gp, (z, z), axis=(1, 2))
    flipped = kernels[:, ::-1, ::-1, :]
    dx = np.tensordot(gwin, flipped, axes=((3, 4, 5), (0, 1, 2)))
    return dx, d_kernels, d_bias


def bp_decode_batch(
    llr: np.ndarray,
    row_ptr: np.ndarray,
    edge_col: np.ndarray,
    max_iters: int,
    llr_clamp: float = 38.0,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Sum-product decoding of a batch of codewords in the LLR domain.

    llr: (B, n) channel LLRs (positive means bit 0). The Tanner graph is
    given in row-major CSR form: ``edge_col[row_ptr[r]:row_ptr[r+1]]`` are
    the variable indices of check ``r``. Every check row and every variable
    column must have at least one edge.

    Returns (hard_bits (B, n) uint8, iterations (B,) int32,
    converged (B,) bool). A codeword counts as converged once its hard
    decision satisfies every check and no posterior is exactly zero (an
    all-zero posterior is an erasure, not a decision).
    """
    lam = np.asarray(llr, dtype=np.float64)
    batch, n = lam.shape
    n_rows = row_ptr.size - 1
    n_edges = edge_col.size
    t_max = np.nextafter(1.0, 0.0)

    # edges sorted by (column, edge index) for posterior accumulation
    col_order = np.lexsort((np.arange(n_edges), edge_col))
    col_counts = np.bincount(edge_col, minlength=n)
    col_starts = np.concatenate(([0], np.cumsum(col_counts)[:-1])).astype(np.int64)

    bits_out = np.zeros((batch, n), dtype=np.uint8)
    iters_out = np.full(batch, max_iters, dtype=np.int32)
    conv_out = np.zeros(batch, dtype=bool)

    active = np.arange(batch)
    lam_a = lam.copy()
    q = np.clip(lam_a[:, edge_col], -llr_clamp, llr_clamp)
    r_msg = np.zeros_like(q)

    for it in range(1, max_iters + 1):
        t = np.tanh(0.5 * q)
        for r in range(n_rows):
            s, e = int(row_ptr[r]), int(row_ptr[r + 1])
            tr = t[:, s:e]
            deg = e - s
            pre = np.empty((tr.shape[0], deg + 1))
            pre[:, 0] = 1.0
            np.cumprod(tr, axis=1, out=pre[:, 1:])
            suf = np.empty_like(pre)
            suf[:, deg] = 1.0
            suf[:, :deg] = np.cumprod(tr[:, ::-1], axis=1)[:, ::-1]
            excl = pre[:, :deg] * suf[:, 1:]
            r_msg[:, s:e] = np.clip(
                2.0 * np.arctanh(np.clip(excl, -t_max, t_max)), -llr_clamp, llr_clamp
            )

        post = lam_a.copy()
        post += np.add.reduceat(r_msg[:, col_order], col_starts, axis=1)
        q = np.clip(post[:, edge_col] - r_msg, -llr_clamp, llr_clamp)

        bits = (post < 0).astype(np.uint8)
        synd = np.add.reduceat(
            bits[:, edge_col].astype(np.int64), row_ptr[:-1].astype(np.int64), axis=1
        )
        done = ((synd & 1) == 0).all(axis=1) & (post != 0.0).all(axis=1)

        if done.any():
            hit = active[done]
            bits_out[hit] = bits[done]
            iters_out[hit] = it
            conv_out[hit] = True
            keep = ~done
            active = active[keep]
            if active.size == 0:
                return bits_out, iters_out, conv_out
            lam_a = lam_a[keep]
            q = q[keep]
            r_msg = r_msg[keep]
        if it == max_iters:
            bits_out[active] = bits[~done] if done.any() else bits
    return bits_out, iters_out, conv_out
