"""Pure numpy fallback for the block quantization kernels.

Mirrors ``_ckernels.pyx`` operation for operation so that both backends
produce identical bits.
"""
from __future__ import annotations

import numpy as np


def encode(q: np.ndarray, values: np.ndarray) -> np.ndarray:
    """Nearest-value index of every element of ``q``; ties go to the value
    of smaller magnitude."""
    q = np.asarray(q, dtype=np.float64)
    n = values.shape[0]
    j = np.searchsorted(values, q, side="left")
    lo = np.clip(j - 1, 0, n - 1)
    hi = np.clip(j, 0, n - 1)
    d_lo = q - values[lo]
    d_hi = values[hi] - q
    pick_hi = (d_hi < d_lo) | ((d_hi == d_lo) & (np.abs(values[hi]) < np.abs(values[lo])))
    out = np.where(pick_hi, hi, lo)
    out = np.where(j == 0, 0, out)
    out = np.where(j == n, n - 1, out)
    return out.astype(np.uint8)


def _neumaier_rows(a: np.ndarray) -> np.ndarray:
    """Compensated sum along axis 1, left to right."""
    total = np.zeros(a.shape[0])
    comp = np.zeros(a.shape[0])
    for i in range(a.shape[1]):
        x = a[:, i]
        t = total + x
        comp += np.where(np.abs(total) >= np.abs(x), (total - t) + x, (x - t) + total)
        total = t
    return total + comp


def _quantize_group(blocks: np.ndarray, values: np.ndarray, ratios: np.ndarray,
                    zero_index: int):
    """All blocks in ``blocks`` (shape ``(n_blocks, length)``) share a length."""
    absmax = np.abs(blocks).max(axis=1)
    zero = absmax == 0.0
    safe = np.where(zero, 1.0, absmax)
    best_ratio = np.full(blocks.shape[0], ratios[0])
    if ratios.shape[0] > 1:
        best_sse = None
        for k, ratio in enumerate(ratios):
            scale = (safe * ratio)[:, None]
            err = blocks - scale * values[encode(blocks / scale, values)]
            sse = _neumaier_rows(err * err)
            if best_sse is None:
                best_sse = sse
                continue
            better = (sse < best_sse) | ((sse == best_sse) & (ratio > best_ratio))
            best_sse = np.where(better, sse, best_sse)
            best_ratio = np.where(better, ratio, best_ratio)
    best_ratio = np.where(zero, 1.0, best_ratio)
    scales = np.where(zero, 1.0, safe * best_ratio)
    idx = encode(blocks / scales[:, None], values)
    idx[zero] = zero_index
    return idx, scales, best_ratio


def quantize_blocks(x: np.ndarray, block: int, values: np.ndarray, ratios: np.ndarray,
                    zero_index: int):
    """Absmax block quantization of each row, with a scale-ratio search.

    Returns ``(indices, scales, chosen_ratios)``; blocks run along the last
    axis and the final block of a row may be short.
    """
    rows, cols = x.shape
    n_full, rem = divmod(cols, block)
    nb = n_full + (1 if rem else 0)
    idx = np.empty((rows, cols), dtype=np.uint8)
    scales = np.empty((rows, nb))
    chosen = np.empty((rows, nb))
    if n_full:
        full = x[:, : n_full * block].reshape(rows * n_full, block)
        i, s, c = _quantize_group(full, values, ratios, zero_index)
        idx[:, : n_full * block] = i.reshape(rows, n_full * block)
        scales[:, :n_full] = s.reshape(rows, n_full)
        chosen[:, :n_full] = c.reshape(rows, n_full)
    if rem:
        i, s, c = _quantize_group(x[:, n_full * block:], values, ratios, zero_index)
        idx[:, n_full * block:] = i
        scales[:, -1] = s
        chosen[:, -1] = c
    return idx, scales, chosen
