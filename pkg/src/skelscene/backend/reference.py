"""Numpy implementation of the fused conv / rectifier / max-pool kernels.

Contract shared with the compiled backend:

conv_pool_forward(X, kernels, bias) -> (pooled, argmax)
    X (N, R, W), kernels (F, w, W), bias (F,), all float64.
    z[n, t, f] = sum(kernels[f] * X[n, t:t+w]) + bias[f] for t in 0..R-w;
    pooled[n, f] = max(z[n, :, f], 0); argmax[n, f] = first t attaining the
    max of z. Windows consisting purely of all-zero rows all equal bias[f],
    so only windows touching a nonzero row plus the earliest all-zero window
    are candidates; the reported argmax is the earliest candidate attaining
    the max.

conv_pool_backward(X, grad, argmax, w, dk, db)
    grad (N, F) is the pooled-feature gradient already gated by the
    rectifier (zero where pooled == 0). Accumulates into dk (F, w, W) and
    db (F,).
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


def _candidates(x: np.ndarray, w: int) -> np.ndarray:
    """Window starts worth evaluating: touch a nonzero row, or the earliest
    all-zero window as the representative of all of them."""
    rows, width = x.shape
    t_count = rows - w + 1
    nonzero_rows = np.flatnonzero(np.abs(x).sum(axis=1) > 0)
    mask = np.zeros(t_count, dtype=bool)
    for r in nonzero_rows:
        mask[max(0, r - w + 1) : min(t_count, r + 1)] = True
    cand = np.flatnonzero(mask)
    zero_starts = np.flatnonzero(~mask)
    if zero_starts.size:
        cand = np.sort(np.append(cand, zero_starts[0]))
    return cand


def conv_pool_forward(
    X: np.ndarray, kernels: np.ndarray, bias: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    X = np.asarray(X, dtype=np.float64)
    kernels = np.asarray(kernels, dtype=np.float64)
    bias = np.asarray(bias, dtype=np.float64)
    n_samples, rows, width = X.shape
    n_filters, w, kw = kernels.shape
    if kw != width or rows < w:
        raise ValueError(f"kernel ({w}, {kw}) does not fit input ({rows}, {width})")

    flat_kernels = kernels.reshape(n_filters, w * width)
    pooled = np.empty((n_samples, n_filters))
    argmax = np.empty((n_samples, n_filters), dtype=np.int64)
    for n in range(n_samples):
        x = X[n]
        cand = _candidates(x, w)
        windows = sliding_window_view(x, (w, width))[:, 0]  # (T, w, width)
        cols = windows[cand].reshape(len(cand), w * width)
        z = cols @ flat_kernels.T + bias  # (C, F)
        best = np.argmax(z, axis=0)  # first occurrence wins ties
        argmax[n] = cand[best]
        pooled[n] = np.maximum(z[best, np.arange(n_filters)], 0.0)
    return pooled, argmax


def conv_pool_backward(
    X: np.ndarray,
    grad: np.ndarray,
    argmax: np.ndarray,
    w: int,
    dk: np.ndarray,
    db: np.ndarray,
) -> None:
    X = np.asarray(X, dtype=np.float64)
    n_samples = X.shape[0]
    db += grad.sum(axis=0)
    row_idx = argmax[:, :, None] + np.arange(w)[None, None, :]  # (N, F, w)
    windows = X[np.arange(n_samples)[:, None, None], row_idx, :]  # (N, F, w, W)
    dk += np.einsum("nf,nfij->fij", grad, windows)
