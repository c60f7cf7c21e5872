"""Quantization datatypes as codebooks.

A :class:`Codebook` is the sorted set of values a k-bit datatype can
represent. This module holds the fixed tables (integer, FP3/FP4 variants,
APoT, and the 3-decimal NF4/SF4 tables), the quantile-based generators for
Normal Float and Student Float, supernormal extension, APoT enumeration and
JSON (de)serialization.
"""
from __future__ import annotations

import itertools
import json
import math
import re
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .tdist import normal_quantile, t_quantile

__all__ = [
    "Codebook",
    "ApotSpec",
    "BUILTIN_NAMES",
    "builtin",
    "resolve",
    "gen_student_float",
    "gen_normal_float",
    "probability_grid",
    "apot_codebook",
    "apot_variants",
    "enumerate_apot",
    "supernormal_extend",
    "validate",
    "to_json",
    "from_json",
    "load",
    "dump",
]

FAMILIES = ("integer", "float", "lookup", "apot")
APOT_BASE = (0.0, 2.0**-1, 2.0**-2, 2.0**-3, 2.0**-4)
SUPPORTED_GEN_BITS = (3, 4, 5)
JSON_SCHEMA_VERSION = 1


@dataclass(frozen=True)
class Codebook:
    """Immutable, sorted value set of a low-bit datatype.

    ``raw_values`` are in the datatype's native scale (``-8 .. 7`` for INT4,
    ``-6 .. 6`` for E2M1); ``normalized_values`` are the same values divided
    by the largest magnitude so they lie in ``[-1, 1]``.
    """

    name: str
    bits: int
    family: str
    raw_values: tuple[float, ...]
    normalized_values: tuple[float, ...]
    nu: float | None = None
    _array: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "raw_values", tuple(float(v) for v in self.raw_values))
        object.__setattr__(self, "normalized_values", tuple(float(v) for v in self.normalized_values))
        arr = np.array(self.normalized_values, dtype=np.float64)
        arr.setflags(write=False)
        object.__setattr__(self, "_array", arr)

    @classmethod
    def from_raw(cls, name: str, bits: int, family: str, raw_values: Iterable[float],
                 nu: float | None = None) -> "Codebook":
        raw = tuple(sorted(float(v) for v in raw_values))
        peak = max((abs(v) for v in raw), default=0.0)
        norm = tuple(v / peak for v in raw) if peak > 0 else raw
        return cls(name, bits, family, raw, norm, nu)

    @property
    def values(self) -> np.ndarray:
        """Normalized values as a read-only float64 array."""
        return self._array

    @property
    def zero_index(self) -> int:
        return self.normalized_values.index(0.0)

    def __len__(self) -> int:
        return len(self.raw_values)


@dataclass(frozen=True)
class ApotSpec:
    """Sets of powers of two whose one-per-set sums form APoT magnitudes."""

    sets: tuple[tuple[float, ...], ...]

    def __post_init__(self):
        object.__setattr__(self, "sets", tuple(tuple(sorted(set(float(v) for v in s))) for s in self.sets))


# ---------------------------------------------------------------------------
# fixed tables
# ---------------------------------------------------------------------------

def _signed(magnitudes: Sequence[float]) -> list[float]:
    pos = sorted(m for m in magnitudes if m != 0)
    return [-m for m in reversed(pos)] + [0.0] + pos


def _minifloat(exp_bits: int, man_bits: int) -> list[float]:
    """All values of a sign/exponent/mantissa format with IEEE-style bias,
    subnormals and no inf/nan encodings."""
    bias = 2 ** (exp_bits - 1) - 1
    mags = set()
    for e in range(2**exp_bits):
        for m in range(2**man_bits):
            frac = m / 2**man_bits
            if e == 0:
                mags.add(frac * 2.0 ** (1 - bias))
            else:
                mags.add((1.0 + frac) * 2.0 ** (e - bias))
    return _signed(mags)


_LOOKUP_TABLES = {
    "nf4": (None, [-1.000, -0.696, -0.525, -0.395, -0.284, -0.185, -0.091, 0.000,
                   0.080, 0.161, 0.246, 0.338, 0.441, 0.563, 0.723, 1.000]),
    "sf4-nu3": (3.0, [-1.000, -0.576, -0.404, -0.292, -0.205, -0.131, -0.064, 0.000,
                      0.056, 0.114, 0.176, 0.246, 0.330, 0.439, 0.606, 1.000]),
    "sf4-nu4": (4.0, [-1.000, -0.609, -0.436, -0.318, -0.225, -0.145, -0.071, 0.000,
                      0.062, 0.126, 0.194, 0.270, 0.359, 0.472, 0.638, 1.000]),
    "sf4-nu5": (5.0, [-1.000, -0.628, -0.455, -0.334, -0.237, -0.153, -0.075, 0.000,
                      0.066, 0.133, 0.205, 0.284, 0.376, 0.491, 0.657, 1.000]),
    "sf4-nu6": (6.0, [-1.000, -0.640, -0.467, -0.345, -0.246, -0.158, -0.078, 0.000,
                      0.068, 0.138, 0.212, 0.293, 0.387, 0.504, 0.669, 1.000]),
}

# Intel and bitsandbytes FP4 place their subnormal at 2**-4 (printed as 0.062).
_E2M1 = _minifloat(2, 1)
_FIXED_TABLES = {
    "int3": ("integer", 3, list(range(-4, 4))),
    "int4": ("integer", 4, list(range(-8, 8))),
    "int5": ("integer", 5, list(range(-16, 16))),
    "e2m0": ("float", 3, _minifloat(2, 0)),
    "e2m1": ("float", 4, _E2M1),
    "e2m1-i": ("float", 4, _signed([0.0625, 1, 1.5, 2, 3, 4, 6])),
    "e2m1-b": ("float", 4, _signed([0.0625, 2, 3, 4, 6, 8, 12])),
    "e2m1-ns": ("float", 4, _signed([0.75, 1, 1.5, 2, 3, 4, 6])),
    "e2m1-sr": ("float", 4, _E2M1 + [8.0]),
    "e2m1-sp": ("float", 4, sorted(_E2M1 + [5.0])),
    "e3m0": ("float", 4, _minifloat(3, 0)),
    "apot4": ("apot", 4, _signed([a + b for a in (0, 2**-1, 2**-2, 2**-4) for b in (0, 2**-3)])),
    "apot4-sp": ("apot", 4, sorted(_signed([a + b for a in (0, 2**-1, 2**-2, 2**-4) for b in (0, 2**-3)])
                                   + [5 / 16])),
}

BUILTIN_NAMES: tuple[str, ...] = (
    "int3", "int4", "int5", "e2m0", "e2m1", "e2m1-i", "e2m1-b", "e2m1-ns",
    "e2m1-sr", "e2m1-sp", "e3m0", "apot4", "apot4-sp",
    "nf4", "sf4-nu3", "sf4-nu4", "sf4-nu5", "sf4-nu6",
)


def builtin(name: str) -> Codebook:
    """Return one of the fixed datatype tables by name.

    NF4/SF4 entries are the 3-decimal published values; use
    :func:`gen_normal_float` / :func:`gen_student_float` for full precision.
    """
    key = name.lower()
    if key in _FIXED_TABLES:
        family, bits, raw = _FIXED_TABLES[key]
        return Codebook.from_raw(key, bits, family, raw)
    if key in _LOOKUP_TABLES:
        nu, raw = _LOOKUP_TABLES[key]
        return Codebook.from_raw(key, 4, "lookup", raw, nu=nu)
    raise KeyError(f"unknown codebook {name!r}; valid names: {', '.join(BUILTIN_NAMES)}")


_GEN_RE = re.compile(r"^(sf)(\d)-nu([0-9.eE+]+|inf)$|^(nf)(\d)$")


def resolve(name: str) -> Codebook:
    """Builtin table, or a generated ``sf<k>-nu<x>`` / ``nf<k>`` codebook.

    Builtin names win, so ``sf4-nu5`` is the published 3-decimal table while
    ``sf4-nu5.0`` or ``sf3-nu5`` are generated.
    """
    key = name.lower()
    if key in BUILTIN_NAMES:
        return builtin(key)
    m = _GEN_RE.match(key)
    if m is None:
        raise KeyError(f"unknown codebook {name!r}; valid names: {', '.join(BUILTIN_NAMES)}, "
                       "sf<k>-nu<x>, nf<k>")
    if m.group(1):
        return gen_student_float(int(m.group(2)), float(m.group(3)))
    return gen_normal_float(int(m.group(5)))


# ---------------------------------------------------------------------------
# quantile-derived lookup formats
# ---------------------------------------------------------------------------

def _tail_grids(bits: int) -> tuple[np.ndarray, np.ndarray]:
    if bits not in SUPPORTED_GEN_BITS:
        raise ValueError(f"bits must be one of {SUPPORTED_GEN_BITS}, got {bits}")
    half = 2 ** (bits - 1)
    delta = 0.5 * (2.0 ** -(bits + 1) + 1.0 / (2 ** (bits + 1) - 2))
    lower = np.linspace(delta, 0.5, half)[:-1]
    upper = np.linspace(delta, 0.5, half + 1)[:-1]
    return lower, upper


def probability_grid(bits: int) -> np.ndarray:
    """Evenly spaced probabilities for a k-bit quantile datatype.

    ``2**(k-1)`` points from ``delta`` to 1/2 and ``2**(k-1) + 1`` points from
    1/2 to ``1 - delta``, the shared 1/2 kept once, so the positive side gets
    one more value than the negative side. ``delta = (2**-(k+1) +
    1/(2**(k+1) - 2)) / 2``, which is ``(1/32 + 1/30) / 2`` at four bits.
    """
    lower, upper = _tail_grids(bits)
    return np.concatenate([lower, [0.5], 1.0 - upper[::-1]])


def _quantile_codebook(name: str, bits: int, quantile, nu: float | None) -> Codebook:
    # The positive side is evaluated from its upper-tail mass rather than
    # from 1 - tail, so both endpoints are exact mirrors and normalize to +-1.
    lower, upper = _tail_grids(bits)
    neg = quantile(lower)
    pos = -quantile(upper)[::-1]
    values = np.concatenate([neg, [0.0], pos])
    return Codebook.from_raw(name, bits, "lookup", values.tolist(), nu=nu)


def gen_student_float(bits: int, nu: float) -> Codebook:
    """Student Float: t-distribution quantiles of :func:`probability_grid`."""
    if not nu > 0:
        raise ValueError(f"nu must be > 0, got {nu}")
    return _quantile_codebook(f"sf{bits}-nu{nu:g}", bits, lambda p: t_quantile(p, nu), float(nu))


def gen_normal_float(bits: int) -> Codebook:
    """Normal Float: standard normal quantiles of :func:`probability_grid`."""
    return _quantile_codebook(f"nf{bits}", bits, normal_quantile, None)


# ---------------------------------------------------------------------------
# APoT
# ---------------------------------------------------------------------------

def _is_pow2(v: float) -> bool:
    m, _ = math.frexp(v)
    return v > 0 and m == 0.5


def apot_codebook(spec: ApotSpec, bits: int = 4, name: str | None = None) -> Codebook:
    """Signed codebook of all one-element-per-set sums.

    A spec whose sets are all ``{0}`` yields the single-value codebook
    ``{0}``, which :func:`validate` reports as invalid.
    """
    if not spec.sets or any(len(s) == 0 for s in spec.sets):
        raise ValueError("APoT spec needs at least one non-empty set")
    for s in spec.sets:
        if 0.0 not in s:
            raise ValueError(f"every APoT set must contain 0, got {s}")
        bad = [v for v in s if v != 0 and not _is_pow2(v)]
        if bad:
            raise ValueError(f"APoT set members must be powers of two, got {bad}")
    mags = {sum(combo) for combo in itertools.product(*spec.sets)}
    if name is None:
        name = "apot{}-".format(bits) + "+".join(
            "{" + ",".join(f"{v:g}" for v in s) + "}" for s in spec.sets)
    return Codebook.from_raw(name, bits, "apot", _signed(mags))


def apot_variants(n_sets: int, base: Sequence[float] = APOT_BASE) -> list[ApotSpec]:
    """Every unordered choice of ``n_sets`` subsets of ``base`` (each with 0)."""
    nonzero = [v for v in base if v != 0]
    subsets = [
        tuple([0.0] + list(c))
        for r in range(len(nonzero) + 1)
        for c in itertools.combinations(nonzero, r)
    ]
    return [ApotSpec(combo) for combo in itertools.combinations_with_replacement(subsets, n_sets)]


def enumerate_apot(specs: ApotSpec | Iterable[ApotSpec], bits: int = 4) -> list[Codebook]:
    """Build APoT codebooks and keep the useful, distinct ones.

    A spec is dropped when two different set combinations produce the same
    sum (the bitspace is under-used), when it does not fit ``2**bits``
    signed values, or when it degenerates to fewer than two magnitudes. Specs
    producing an already-seen normalized value set are dropped as duplicates.
    Output order follows input order.
    """
    if isinstance(specs, ApotSpec):
        specs = [specs]
    out: list[Codebook] = []
    seen: set[tuple[float, ...]] = set()
    for spec in specs:
        cb = apot_codebook(spec, bits)
        n_combos = math.prod(len(s) for s in spec.sets)
        n_mags = (len(cb) + 1) // 2
        if n_mags != n_combos or len(cb) > 2**bits or n_mags < 2:
            continue
        if cb.normalized_values in seen:
            continue
        seen.add(cb.normalized_values)
        out.append(cb)
    return out


# ---------------------------------------------------------------------------
# supernormal extension
# ---------------------------------------------------------------------------

def _next_range_value(cb: Codebook) -> float:
    top = cb.raw_values[-1]
    if cb.family == "float":
        # next binade start, e.g. 6 -> 8 for E2M1
        return 2.0 ** (math.floor(math.log2(top)) + 1)
    if cb.family == "integer":
        return top + 1.0
    return top + (top - cb.raw_values[-2])


def supernormal_extend(base: Codebook, mode: str) -> Codebook:
    """Reassign the redundant negative-zero code of a sign-magnitude format.

    ``"sr"`` (super-range) appends one value past the positive maximum;
    ``"sp"`` (super-precision) inserts the midpoint of the widest gap between
    consecutive non-negative values, the gap closest to zero on ties.
    """
    mode = mode.lower()
    if mode not in ("sr", "sp"):
        raise ValueError(f"mode must be 'sr' or 'sp', got {mode!r}")
    if len(base) != 2**base.bits - 1:
        raise ValueError(
            f"{base.name} has {len(base)} values; supernormal extension needs "
            f"exactly {2**base.bits - 1} (one free code)")
    raw = list(base.raw_values)
    if mode == "sr":
        new = _next_range_value(base)
    else:
        pos = [v for v in raw if v >= 0]
        gaps = [b - a for a, b in zip(pos, pos[1:])]
        i = max(range(len(gaps)), key=lambda j: (gaps[j], -j))
        new = 0.5 * (pos[i] + pos[i + 1])
    return Codebook.from_raw(f"{base.name}-{mode}", base.bits, base.family, raw + [new], nu=base.nu)


# ---------------------------------------------------------------------------
# validation and serialization
# ---------------------------------------------------------------------------

def validate(cb: Codebook) -> list[str]:
    """Return the names of the violated codebook invariants (empty if valid)."""
    problems = []
    raw = cb.raw_values
    norm = cb.normalized_values
    if any(b <= a for a, b in zip(raw, raw[1:])) or any(b <= a for a, b in zip(norm, norm[1:])):
        problems.append("values not strictly increasing")
    zeros = sum(1 for v in norm if v == 0.0)
    if zeros == 0:
        problems.append("missing exact zero")
    elif zeros > 1:
        problems.append("duplicate zero")
    if len(raw) not in (2**cb.bits - 1, 2**cb.bits):
        problems.append("cardinality")
    if len(norm) != len(raw):
        problems.append("raw/normalized length mismatch")
    else:
        peak = max((abs(v) for v in raw), default=0.0)
        if not norm or max(abs(v) for v in norm) != 1.0:
            problems.append("max |normalized| != 1")
        elif peak == 0 or any(n != r / peak for n, r in zip(norm, raw)):
            problems.append("normalized != raw / max|raw|")
    if cb.family not in FAMILIES:
        problems.append(f"unknown family {cb.family!r}")
    return problems


def _sig9(v: float) -> float:
    return float(f"{v:.9g}")


def to_json(cb: Codebook) -> dict:
    return {
        "schema": JSON_SCHEMA_VERSION,
        "name": cb.name,
        "bits": cb.bits,
        "family": cb.family,
        "raw_values": [_sig9(v) for v in cb.raw_values],
        "normalized_values": [_sig9(v) for v in cb.normalized_values],
        "metadata": {} if cb.nu is None else {"nu": cb.nu},
    }


_JSON_KEYS = {"schema", "name", "bits", "family", "raw_values", "normalized_values", "metadata"}


def from_json(obj: dict) -> Codebook:
    unknown = set(obj) - _JSON_KEYS
    if unknown:
        raise ValueError(f"unknown codebook fields: {sorted(unknown)}")
    missing = _JSON_KEYS - {"schema", "metadata"} - set(obj)
    if missing:
        raise ValueError(f"missing codebook fields: {sorted(missing)}")
    if obj.get("schema", JSON_SCHEMA_VERSION) != JSON_SCHEMA_VERSION:
        raise ValueError(f"unsupported codebook schema {obj['schema']!r}")
    meta = obj.get("metadata") or {}
    extra = set(meta) - {"nu"}
    if extra:
        raise ValueError(f"unknown codebook metadata: {sorted(extra)}")
    # normalized values are re-derived so that the loaded codebook satisfies
    # the raw/max invariant exactly despite the 9-digit serialization
    cb = Codebook.from_raw(obj["name"], int(obj["bits"]), obj["family"], obj["raw_values"],
                           nu=meta.get("nu"))
    stored = obj["normalized_values"]
    if len(stored) != len(cb) or any(abs(a - b) > 1e-8 for a, b in zip(stored, cb.normalized_values)):
        raise ValueError(f"codebook {cb.name!r}: normalized_values disagree with raw_values")
    return cb


def dump(cb: Codebook, fp) -> None:
    json.dump(to_json(cb), fp, indent=2)
    fp.write("\n")


def load(path) -> Codebook:
    with open(path) as f:
        return from_json(json.load(f))
