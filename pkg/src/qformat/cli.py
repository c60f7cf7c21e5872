"""``qformat`` command line interface.

Data goes to stdout or ``--out``; diagnostics go to stderr. Exit status is 0
on success, 1 on a data/config error and 2 on a usage error.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import codebook as cbmod
from . import reports
from .profile import profile_tensor_set
from .tdist import sample_t
from .tensorio import TensorFormatError, read_tensor, write_tensor


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_codebook(args) -> int:
    if args.action == "list":
        _emit("".join(n + "\n" for n in cbmod.BUILTIN_NAMES), None)
        return 0
    if args.action == "builtin":
        cb = cbmod.builtin(args.name)
    else:
        if args.family == "sf":
            if args.nu is None:
                raise _Usage("codebook gen --family sf requires --nu")
            cb = cbmod.gen_student_float(args.bits, args.nu)
        else:
            cb = cbmod.gen_normal_float(args.bits)
    _emit(json.dumps(cbmod.to_json(cb), indent=2) + "\n", args.out)
    return 0


def cmd_quantize(args) -> int:
    x = read_tensor(args.tensor)
    cb = reports.resolve_codebook(args.codebook)
    rep = reports.quantize_report(x, cb, args.block, args.clip, args.tensor)
    _emit(reports.dumps_report(rep), args.out)
    return 0


def cmd_profile(args) -> int:
    paths = sorted(Path(args.dir).glob("*.npy"))
    if not paths:
        raise ValueError(f"no .npy tensors in {args.dir}")
    tensors = [(p.stem, read_tensor(p)) for p in paths]
    rows = profile_tensor_set(tensors, seed=args.seed)
    _emit(reports.profile_csv(rows), args.out)
    return 0


def cmd_sample(args) -> int:
    if args.dist == "t" and args.nu is None:
        raise _Usage("sample --dist t requires --nu")
    nu = np.inf if args.dist == "normal" else args.nu
    x = sample_t(args.rows * args.cols, nu, args.scale, args.seed).reshape(args.rows, args.cols)
    write_tensor(args.out, x)
    return 0


def cmd_sweep(args) -> int:
    cfg = reports.load_sweep_config(args.config)
    out = args.out or cfg.get("output")
    _emit(reports.sweep_csv(reports.run_sweep(cfg)), out)
    return 0


def cmd_pareto(args) -> int:
    quality = reports.read_quality_csv(args.quality)
    rows, skipped = reports.pareto_rows(quality, args.baseline)
    for fmt in skipped:
        print(f"qformat: skipping {fmt}: no reference MAC cost", file=sys.stderr)
    _emit(reports.pareto_csv(rows), args.out)
    return 0


class _Usage(Exception):
    pass


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qformat", description="Low-bit quantization datatype toolkit.")
    sub = p.add_subparsers(dest="command", required=True)

    cb = sub.add_parser("codebook", help="generate or print datatype codebooks")
    cb_sub = cb.add_subparsers(dest="action", required=True)
    gen = cb_sub.add_parser("gen", help="quantile-derived SF/NF codebook")
    gen.add_argument("--family", choices=["sf", "nf"], required=True)
    gen.add_argument("--bits", type=int, choices=list(cbmod.SUPPORTED_GEN_BITS), required=True)
    gen.add_argument("--nu", type=float)
    gen.add_argument("--out")
    bi = cb_sub.add_parser("builtin", help="fixed datatype table")
    bi.add_argument("--name", required=True)
    bi.add_argument("--out")
    cb_sub.add_parser("list", help="list builtin codebook names")
    cb.set_defaults(func=cmd_codebook)

    q = sub.add_parser("quantize", help="quantize a tensor file and report the error")
    q.add_argument("--tensor", required=True)
    q.add_argument("--codebook", required=True, help="codebook name or JSON file")
    q.add_argument("--block", default="128", help="block size, 'cw' or 'tensor'")
    q.add_argument("--clip", choices=["none", "mse"], default="none")
    q.add_argument("--out")
    q.set_defaults(func=cmd_quantize)

    pr = sub.add_parser("profile", help="fit normal and t distributions to every tensor in a directory")
    pr.add_argument("--dir", required=True)
    pr.add_argument("--out")
    pr.add_argument("--seed", type=int, required=True)
    pr.set_defaults(func=cmd_profile)

    sa = sub.add_parser("sample", help="write a synthetic t or normal tensor")
    sa.add_argument("--dist", choices=["t", "normal"], required=True)
    sa.add_argument("--nu", type=float)
    sa.add_argument("--rows", type=int, required=True)
    sa.add_argument("--cols", type=int, required=True)
    sa.add_argument("--scale", type=float, default=1.0)
    sa.add_argument("--seed", type=int, required=True)
    sa.add_argument("--out", required=True)
    sa.set_defaults(func=cmd_sample)

    sw = sub.add_parser("sweep", help="codebook x block x clip sweep from a JSON config")
    sw.add_argument("--config", required=True)
    sw.add_argument("--out")
    sw.set_defaults(func=cmd_sweep)

    pa = sub.add_parser("pareto", help="join quality with MAC costs and mark the Pareto front")
    pa.add_argument("--quality", required=True, help="format,quality CSV or a sweep CSV")
    pa.add_argument("--baseline", default="int4")
    pa.add_argument("--out")
    pa.set_defaults(func=cmd_pareto)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _Usage as e:
        parser.print_usage(sys.stderr)
        print(f"qformat: error: {e}", file=sys.stderr)
        return 2
    except (ValueError, KeyError, OSError, TensorFormatError) as e:
        msg = e.args[0] if isinstance(e, KeyError) and e.args else e
        print(f"qformat: error: {msg}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
