"""Tensor files: ``.npy`` (format 1.0 or 2.0), float32, little-endian, C order, rank 1 or 2."""
from __future__ import annotations

import os

import numpy as np
from numpy.lib import format as npy_format

__all__ = ["TensorFormatError", "read_tensor", "write_tensor"]


class TensorFormatError(ValueError):
    """Malformed or unsupported tensor file."""


def read_tensor(path: str | os.PathLike) -> np.ndarray:
    """Read a float32 tensor file as a 2-D array; rank 1 becomes ``(1, n)``."""
    with open(path, "rb") as f:
        try:
            version = npy_format.read_magic(f)
        except ValueError as e:
            raise TensorFormatError(f"{path}: bad magic at offset 0: {e}") from None
        header_offset = f.tell()
        readers = {(1, 0): npy_format.read_array_header_1_0, (2, 0): npy_format.read_array_header_2_0}
        if version not in readers:
            raise TensorFormatError(f"{path}: unsupported format version {version} at offset 6")
        try:
            shape, fortran, dtype = readers[version](f, max_header_size=1 << 20)
        except ValueError as e:
            raise TensorFormatError(f"{path}: bad header at offset {header_offset}: {e}") from None
        data_offset = f.tell()
        if dtype != np.dtype("<f4"):
            raise TensorFormatError(
                f"{path}: dtype {dtype.str} at offset {header_offset}; expected little-endian float32 '<f4'")
        if fortran:
            raise TensorFormatError(f"{path}: Fortran order at offset {header_offset}; expected C order")
        if len(shape) not in (1, 2):
            raise TensorFormatError(f"{path}: rank {len(shape)} at offset {header_offset}; expected 1 or 2")
        count = int(np.prod(shape))
        payload = f.read()
    if len(payload) != count * 4:
        raise TensorFormatError(
            f"{path}: payload at offset {data_offset} has {len(payload)} bytes, "
            f"header shape {shape} needs {count * 4}")
    arr = np.frombuffer(payload, dtype="<f4").reshape(shape)
    if arr.ndim == 1:
        arr = arr.reshape(1, -1)
    return arr.copy()


def write_tensor(path: str | os.PathLike, array) -> None:
    """Write a rank-1 or rank-2 array as a float32 ``.npy`` file."""
    arr = np.asarray(array)
    if arr.ndim not in (1, 2):
        raise TensorFormatError(f"rank {arr.ndim} tensors are not supported; expected 1 or 2")
    arr = np.ascontiguousarray(arr, dtype="<f4")
    with open(path, "wb") as f:
        npy_format.write_array(f, arr, version=(1, 0), allow_pickle=False)
