"""Block-wise symmetric quantization against a :class:`~qformat.codebook.Codebook`.

Each block is scaled so that its largest magnitude (optionally shrunk by an
MSE-searched clip ratio) lands on the codebook endpoint 1.0, then every
element is rounded to the nearest normalized codebook value.

The inner loops live in ``_ckernels`` (Cython). When the extension is not
built, or ``QFORMAT_PURE_PYTHON=1`` is set, the numpy fallback in
``_pykernels`` is used instead; both give bit-identical results.
"""
from __future__ import annotations

import math
import os
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .codebook import Codebook

if os.environ.get("QFORMAT_PURE_PYTHON", "") not in ("", "0"):
    from . import _pykernels as _kernels

    BACKEND = "python"
else:
    try:
        from . import _ckernels as _kernels

        BACKEND = "cython"
    except ImportError:  # extension not built
        from . import _pykernels as _kernels

        BACKEND = "python"

__all__ = [
    "BACKEND",
    "DEFAULT_CLIP_GRID",
    "QuantScheme",
    "QuantizedTensor",
    "ErrorReport",
    "encode_value",
    "quantize",
    "dequantize",
    "mse_clip_scale",
    "error_report",
    "bin_counts",
    "bin_load_stats",
]

# 0.50, 0.51, ..., 1.00
DEFAULT_CLIP_GRID: tuple[float, ...] = tuple(round(0.5 + 0.01 * i, 2) for i in range(51))

GRANULARITIES = ("tensor", "channel", "subchannel")


@dataclass(frozen=True)
class QuantScheme:
    """How a tensor is split into scaled blocks and how scales are chosen.

    ``granularity`` is ``"tensor"`` (one scale), ``"channel"`` (one scale
    per row) or ``"subchannel"`` (``block_size`` contiguous elements of a
    row per scale; a trailing short block is allowed). ``clip`` is ``None``
    or a grid of ratios in ``(0, 1]`` containing 1.0. ``static_scale`` fixes
    a calibrated tensor-wide scale instead of taking the absmax.
    """

    codebook: Codebook
    granularity: str = "subchannel"
    block_size: int | None = 128
    clip: tuple[float, ...] | None = None
    static_scale: float | None = None

    def __post_init__(self):
        if self.granularity not in GRANULARITIES:
            raise ValueError(f"granularity must be one of {GRANULARITIES}, got {self.granularity!r}")
        if self.granularity == "subchannel":
            if self.block_size is None or self.block_size < 2:
                raise ValueError(f"subchannel block size must be >= 2, got {self.block_size}")
        else:
            object.__setattr__(self, "block_size", None)
        if self.clip is not None:
            grid = tuple(float(r) for r in self.clip)
            if not grid or any(not 0 < r <= 1 for r in grid) or 1.0 not in grid:
                raise ValueError("clip grid must be non-empty, within (0, 1] and contain 1.0")
            object.__setattr__(self, "clip", grid)
        if self.static_scale is not None:
            if self.granularity != "tensor":
                raise ValueError("static_scale requires tensor granularity")
            if self.clip is not None:
                raise ValueError("static_scale and clip are mutually exclusive")
            if not (self.static_scale > 0 and math.isfinite(self.static_scale)):
                raise ValueError(f"static_scale must be finite and > 0, got {self.static_scale}")

    @property
    def clip_label(self) -> str:
        return "none" if self.clip is None else "mse"

    @property
    def block_label(self) -> str:
        if self.granularity == "subchannel":
            return str(self.block_size)
        return "cw" if self.granularity == "channel" else "tensor"


@dataclass(frozen=True)
class QuantizedTensor:
    """Codebook indices plus one positive scale per block.

    ``scales`` has shape ``(rows, blocks_per_row)``, or ``(1, 1)`` for
    tensor granularity.
    """

    shape: tuple[int, int]
    indices: np.ndarray
    scales: np.ndarray
    scheme: QuantScheme
    ratios: np.ndarray | None = None

    @property
    def codebook(self) -> Codebook:
        return self.scheme.codebook

    @property
    def block_length(self) -> int:
        rows, cols = self.shape
        if self.scheme.granularity == "tensor":
            return rows * cols
        if self.scheme.granularity == "channel":
            return cols
        return self.scheme.block_size

    @property
    def short_block(self) -> bool:
        """True when rows end in a block shorter than the block size."""
        return self.scheme.granularity == "subchannel" and self.shape[1] % self.scheme.block_size != 0


@dataclass(frozen=True)
class ErrorReport:
    mse: float
    sqnr_db: float
    max_abs_err: float
    bin_histogram: tuple[int, ...]


def _as_2d(tensor) -> np.ndarray:
    x = np.asarray(tensor, dtype=np.float64)
    if x.ndim == 1:
        x = x[None, :]
    if x.ndim != 2:
        raise ValueError(f"expected a 1-D or 2-D tensor, got shape {x.shape}")
    if x.size == 0:
        raise ValueError("cannot quantize an empty tensor")
    bad = ~np.isfinite(x)
    if bad.any():
        pos = tuple(int(i) for i in np.argwhere(bad)[0])
        raise ValueError(f"non-finite value {x[pos]} at position {pos}")
    return np.ascontiguousarray(x)


def encode_value(x: float, cb: Codebook) -> int:
    """Index of the normalized codebook value nearest to ``x``.

    Exact ties go to the value with the smaller magnitude.
    """
    if not math.isfinite(x):
        raise ValueError(f"cannot encode non-finite value {x}")
    return int(_kernels.encode(np.array([x], dtype=np.float64), cb.values)[0])


def quantize(tensor, scheme: QuantScheme) -> QuantizedTensor:
    """Quantize a 1-D or 2-D tensor (1-D is treated as a single row)."""
    x = _as_2d(tensor)
    cb = scheme.codebook
    values = cb.values
    if scheme.static_scale is not None:
        s = float(scheme.static_scale)
        idx = _kernels.encode((x / s).ravel(), values).reshape(x.shape)
        return QuantizedTensor(x.shape, idx, np.array([[s]]), scheme, np.array([[1.0]]))

    ratios = np.array(scheme.clip if scheme.clip is not None else (1.0,), dtype=np.float64)
    if scheme.granularity == "tensor":
        flat = x.reshape(1, -1)
        idx, scales, chosen = _kernels.quantize_blocks(flat, flat.shape[1], values, ratios, cb.zero_index)
        idx = idx.reshape(x.shape)
    else:
        block = x.shape[1] if scheme.granularity == "channel" else scheme.block_size
        idx, scales, chosen = _kernels.quantize_blocks(x, block, values, ratios, cb.zero_index)
    return QuantizedTensor(x.shape, idx, scales, scheme, chosen)


def _expand_scales(qt: QuantizedTensor) -> np.ndarray:
    rows, cols = qt.shape
    if qt.scheme.granularity == "tensor" or qt.scales.shape == (1, 1):
        return np.full((rows, cols), qt.scales[0, 0])
    return np.repeat(qt.scales, qt.block_length, axis=1)[:, :cols]


def dequantize(qt: QuantizedTensor) -> np.ndarray:
    """``scale(block) * normalized_values[index]`` for every element."""
    values = qt.codebook.values
    if qt.indices.size and int(qt.indices.max()) >= values.shape[0]:
        raise ValueError(
            f"corrupt quantized tensor: index {int(qt.indices.max())} out of range "
            f"for {values.shape[0]}-value codebook {qt.codebook.name!r}")
    return _expand_scales(qt) * values[qt.indices]


def mse_clip_scale(block, cb: Codebook, grid: Sequence[float] = DEFAULT_CLIP_GRID) -> tuple[float, float]:
    """Search ``grid`` for the absmax ratio minimizing the block's squared error.

    Returns ``(scale, ratio)``; ties prefer the larger ratio and an all-zero
    block gives ``(1.0, 1.0)``.
    """
    grid = tuple(float(r) for r in grid)
    if not grid or 1.0 not in grid:
        raise ValueError("clip grid must be non-empty and contain 1.0")
    x = _as_2d(np.ravel(block))
    _, scales, chosen = _kernels.quantize_blocks(
        x, x.shape[1], cb.values, np.array(grid, dtype=np.float64), cb.zero_index)
    return float(scales[0, 0]), float(chosen[0, 0])


def bin_counts(qt: QuantizedTensor) -> np.ndarray:
    return np.bincount(qt.indices.ravel(), minlength=len(qt.codebook))


def error_report(original, reconstructed, qt: QuantizedTensor) -> ErrorReport:
    """Reconstruction error metrics with exactly rounded sums.

    ``sqnr_db`` is ``inf`` when the reconstruction is exact.
    """
    x = np.asarray(original, dtype=np.float64)
    y = np.asarray(reconstructed, dtype=np.float64)
    if x.ndim == 1:
        x = x[None, :]
    if y.ndim == 1:
        y = y[None, :]
    if x.shape != y.shape:
        raise ValueError(f"shape mismatch: {x.shape} vs {y.shape}")
    err = (x - y).ravel()
    sq_err = math.fsum((err * err).tolist())
    sq_sig = math.fsum((x.ravel() ** 2).tolist())
    mse = sq_err / err.size
    if sq_err == 0:
        sqnr = math.inf
    elif sq_sig == 0:
        sqnr = -math.inf
    else:
        sqnr = 10.0 * math.log10(sq_sig / sq_err)
    return ErrorReport(
        mse=mse,
        sqnr_db=sqnr,
        max_abs_err=float(np.abs(err).max()),
        bin_histogram=tuple(int(c) for c in bin_counts(qt)),
    )


def bin_load_stats(qt: QuantizedTensor) -> float:
    """Coefficient of variation (population std / mean) of per-value counts."""
    counts = bin_counts(qt).astype(np.float64)
    return float(counts.std() / counts.mean())
