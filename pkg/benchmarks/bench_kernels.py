"""Compare the compiled and numpy block-quantization kernels.

Usage::

    python benchmarks/bench_kernels.py [--rows 1024] [--cols 4096] [--repeat 3]

Both backends run on the same inputs; outputs are checked for bit equality
before timings are reported.
"""
from __future__ import annotations

import argparse
import sys
import time

import numpy as np

from qformat import _pykernels
from qformat import codebook as C
from qformat.quant import DEFAULT_CLIP_GRID

try:
    from qformat import _ckernels
except ImportError:
    _ckernels = None


def best_time(fn, repeat: int) -> float:
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--rows", type=int, default=1024)
    ap.add_argument("--cols", type=int, default=4096)
    ap.add_argument("--block", type=int, default=128)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    if _ckernels is None:
        print("compiled extension not built; run `pip install --no-build-isolation -e .`", file=sys.stderr)
        return 1

    rng = np.random.default_rng(args.seed)
    x = rng.standard_t(5, size=(args.rows, args.cols))
    clip_rows = max(1, args.rows // 8)
    cases = [
        ("encode", None),
        ("absmax", np.array([1.0])),
        (f"mse clip ({clip_rows} rows)", np.array(DEFAULT_CLIP_GRID)),
    ]
    print(f"{'codebook':<10} {'case':<22} {'cython s':>10} {'numpy s':>10} {'speedup':>8}")
    for name in ("int4", "e2m1", "sf4-nu5"):
        cb = C.builtin(name)
        for label, ratios in cases:
            if ratios is None:
                q = x.ravel() / np.abs(x).max()
                runs = [lambda k=k: k.encode(q, cb.values) for k in (_ckernels, _pykernels)]
            else:
                xx = x if ratios.size == 1 else np.ascontiguousarray(x[:clip_rows])
                runs = [lambda k=k, xx=xx, r=ratios: k.quantize_blocks(xx, args.block, cb.values, r, cb.zero_index)
                        for k in (_ckernels, _pykernels)]
            a, b = runs[0](), runs[1]()
            same = all(np.array_equal(u, v) for u, v in zip(a, b)) if isinstance(a, tuple) else np.array_equal(a, b)
            if not same:
                print(f"backends disagree on {name} / {label}", file=sys.stderr)
                return 1
            tc, tp = best_time(runs[0], args.repeat), best_time(runs[1], args.repeat)
            print(f"{name:<10} {label:<22} {tc:>10.4f} {tp:>10.4f} {tp / tc:>7.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
