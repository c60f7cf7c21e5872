"""Report schemas and end-to-end pipelines behind the CLI.

JSON reports carry ``"schema": 1`` and are rejected on read if they contain
unknown fields. CSV output uses ``,`` and ``repr`` floats so repeated runs
are byte-identical.
"""
from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Iterable, Sequence

import jsonschema
import numpy as np

from . import codebook as cbmod
from .codebook import Codebook
from .hwmodel import BASELINE_FORMAT, REFERENCE_MAC_COSTS, ParetoPoint, chip_overhead, paper_mac_cost, pareto_front
from .profile import ProfileRow
from .quant import (
    DEFAULT_CLIP_GRID,
    QuantScheme,
    bin_load_stats,
    dequantize,
    error_report,
    quantize,
)
from .tensorio import read_tensor

SCHEMA_VERSION = 1

REPORT_FIELDS = (
    "schema", "tensor", "codebook", "granularity", "block", "clip", "short_block",
    "mse", "sqnr_db", "max_abs_err", "bin_cv", "bin_histogram",
)
SWEEP_COLUMNS = ("tensor", "codebook", "block", "clip", "mse", "sqnr_db", "max_abs_err", "bin_cv")
PROFILE_COLUMNS = ("tensor", "nu", "scale", "ks_t", "sigma", "ks_normal", "ks_delta", "nu_var")
PARETO_COLUMNS = ("format", "quality", "mac_area_um2", "accum_bits", "overhead_pct", "on_front")

SWEEP_CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["tensors", "codebooks", "blocks", "clips", "seed"],
    "properties": {
        "schema": {"const": SCHEMA_VERSION},
        "tensors": {"type": "array", "minItems": 1, "items": {"type": "string"}},
        "codebooks": {"type": "array", "minItems": 1, "items": {"type": "string"}},
        "blocks": {
            "type": "array",
            "minItems": 1,
            "items": {"anyOf": [{"type": "integer", "minimum": 2}, {"enum": ["cw", "tensor"]}]},
        },
        "clips": {"type": "array", "minItems": 1, "items": {"enum": ["none", "mse"]}},
        "seed": {"type": "integer"},
        "output": {"type": "string"},
    },
}


def num(v: float) -> str:
    return repr(float(v))


def json_float(v: float):
    # JSON has no infinity; an exact reconstruction reports sqnr_db as null
    return None if math.isinf(v) or math.isnan(v) else float(v)


def resolve_codebook(spec: str) -> Codebook:
    """Codebook from a name (builtin or generated) or a JSON file path."""
    if spec.endswith(".json") or os.path.sep in spec:
        return cbmod.load(spec)
    return cbmod.resolve(spec)


def make_scheme(cb: Codebook, block: str | int, clip: str) -> QuantScheme:
    block = str(block).lower()
    if clip not in ("none", "mse"):
        raise ValueError(f"clip must be 'none' or 'mse', got {clip!r}")
    grid = DEFAULT_CLIP_GRID if clip == "mse" else None
    if block == "cw":
        return QuantScheme(cb, "channel", None, grid)
    if block == "tensor":
        return QuantScheme(cb, "tensor", None, grid)
    try:
        size = int(block)
    except ValueError:
        raise ValueError(f"block must be an integer, 'cw' or 'tensor', got {block!r}") from None
    return QuantScheme(cb, "subchannel", size, grid)


def quantize_report(x: np.ndarray, cb: Codebook, block: str | int, clip: str, tensor_name: str) -> dict:
    scheme = make_scheme(cb, block, clip)
    qt = quantize(x, scheme)
    rep = error_report(x, dequantize(qt), qt)
    return {
        "schema": SCHEMA_VERSION,
        "tensor": tensor_name,
        "codebook": cb.name,
        "granularity": scheme.granularity,
        "block": qt.block_length,
        "clip": scheme.clip_label,
        "short_block": qt.short_block,
        "mse": rep.mse,
        "sqnr_db": json_float(rep.sqnr_db),
        "max_abs_err": rep.max_abs_err,
        "bin_cv": bin_load_stats(qt),
        "bin_histogram": list(rep.bin_histogram),
    }


def dumps_report(report: dict) -> str:
    return json.dumps(report, indent=2) + "\n"


def loads_report(text: str) -> dict:
    obj = json.loads(text)
    unknown = set(obj) - set(REPORT_FIELDS)
    if unknown:
        raise ValueError(f"unknown report fields: {sorted(unknown)}")
    missing = set(REPORT_FIELDS) - set(obj)
    if missing:
        raise ValueError(f"missing report fields: {sorted(missing)}")
    if obj["schema"] != SCHEMA_VERSION:
        raise ValueError(f"unsupported report schema {obj['schema']!r}")
    return obj


def _csv_text(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


# ---------------------------------------------------------------------------
# profile
# ---------------------------------------------------------------------------

def profile_csv(rows: Sequence[ProfileRow]) -> str:
    return _csv_text(PROFILE_COLUMNS, (
        (r.tensor, num(r.nu), num(r.scale), num(r.ks_t), num(r.sigma), num(r.ks_normal),
         num(r.ks_delta), num(r.nu_var))
        for r in rows
    ))


# ---------------------------------------------------------------------------
# sweep
# ---------------------------------------------------------------------------

def thread_count() -> int:
    """Worker cap from ``QFORMAT_THREADS`` (0 or unset = one per CPU)."""
    raw = os.environ.get("QFORMAT_THREADS", "0")
    try:
        n = int(raw)
    except ValueError:
        raise ValueError(f"QFORMAT_THREADS must be an integer, got {raw!r}") from None
    if n < 0:
        raise ValueError(f"QFORMAT_THREADS must be >= 0, got {n}")
    return n or (os.cpu_count() or 1)


def load_sweep_config(path: str | os.PathLike) -> dict:
    with open(path) as f:
        cfg = json.load(f)
    validator = jsonschema.Draft7Validator(SWEEP_CONFIG_SCHEMA)
    errors = sorted(validator.iter_errors(cfg), key=lambda e: list(e.path))
    if errors:
        lines = []
        for e in errors:
            where = "/".join(str(p) for p in e.path) or "<root>"
            lines.append(f"{where}: {e.message}")
        raise ValueError("invalid sweep config:\n  " + "\n  ".join(lines))
    base = Path(path).parent
    cfg["tensors"] = [str(p) if Path(p).is_absolute() else str(base / p) for p in cfg["tensors"]]
    return cfg


def run_sweep(cfg: dict) -> list[dict]:
    """Every tensor x codebook x block x clip cell, in config order."""
    tensors = {p: read_tensor(p) for p in cfg["tensors"]}
    books = {name: resolve_codebook(name) for name in cfg["codebooks"]}
    cells = [(t, c, b, k) for t in cfg["tensors"] for c in cfg["codebooks"]
             for b in cfg["blocks"] for k in cfg["clips"]]

    def run(cell):
        t, c, b, k = cell
        rep = quantize_report(tensors[t], books[c], b, k, t)
        rep["block"] = str(b)
        return rep

    with ThreadPoolExecutor(max_workers=thread_count()) as pool:
        return list(pool.map(run, cells))


def sweep_csv(reports: Sequence[dict]) -> str:
    def sq(v):
        return "inf" if v is None else num(v)

    return _csv_text(SWEEP_COLUMNS, (
        (r["tensor"], r["codebook"], r["block"], r["clip"], num(r["mse"]), sq(r["sqnr_db"]),
         num(r["max_abs_err"]), num(r["bin_cv"]))
        for r in reports
    ))


# ---------------------------------------------------------------------------
# pareto
# ---------------------------------------------------------------------------

def read_quality_csv(path: str | os.PathLike) -> dict[str, float]:
    """``format,quality`` rows; a sweep CSV is also accepted and turned into
    the proxy quality ``-mean(mse)`` per codebook."""
    with open(path, newline="") as f:
        reader = csv.DictReader(f)
        fields = reader.fieldnames or []
        rows = list(reader)
    if {"format", "quality"} <= set(fields):
        return {r["format"].lower(): float(r["quality"]) for r in rows}
    if {"codebook", "mse"} <= set(fields):
        acc: dict[str, list[float]] = {}
        for r in rows:
            acc.setdefault(r["codebook"].lower(), []).append(float(r["mse"]))
        return {k: -math.fsum(v) / len(v) for k, v in acc.items()}
    raise ValueError(f"{path}: expected columns 'format,quality' or a sweep CSV with 'codebook,mse'")


def pareto_rows(quality: dict[str, float], baseline: str = BASELINE_FORMAT) -> tuple[list[tuple], list[str]]:
    """Pareto table rows sorted by overhead, plus formats skipped for lack of
    a reference MAC cost."""
    base = paper_mac_cost(baseline)
    costs = {fmt: REFERENCE_MAC_COSTS[fmt] for fmt in quality if fmt in REFERENCE_MAC_COSTS}
    skipped = [fmt for fmt in quality if fmt not in costs]
    if not costs:
        raise ValueError(f"none of {sorted(quality)} has a reference MAC cost")
    points = [
        ParetoPoint(fmt, quality[fmt], chip_overhead(c.mac_area_um2, base.mac_area_um2,
                                                     c.operand_bits, base.operand_bits))
        for fmt, c in costs.items()
    ]
    front = {p.format for p in pareto_front(points)}
    points.sort(key=lambda p: (p.overhead_pct, p.format))
    rows = [
        (p.format, p.quality, costs[p.format].mac_area_um2, costs[p.format].accum_bits,
         p.overhead_pct, p.format in front)
        for p in points
    ]
    return rows, skipped


def pareto_csv(rows: Sequence[tuple]) -> str:
    return _csv_text(PARETO_COLUMNS, (
        (f, num(q), num(a), str(b), num(o), "1" if on else "0") for f, q, a, b, o, on in rows
    ))
