"""MAC unit cost reference data, accumulator sizing, chip overhead, Pareto fronts."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .codebook import Codebook, builtin

__all__ = [
    "MacCost",
    "ParetoPoint",
    "REFERENCE_MAC_COSTS",
    "BASELINE_FORMAT",
    "paper_mac_cost",
    "estimate_accumulator_bits",
    "AccumulatorCheck",
    "compare_accumulator_bits",
    "chip_overhead",
    "format_overhead",
    "pareto_front",
    "NotApplicableError",
]

MAC_AREA_FRACTION = 0.10
MEM_AREA_FRACTION = 0.60
BASELINE_FORMAT = "int4"
# finest fixed-point grid considered; anything finer is treated as non-dyadic
MAX_LSB_DENOMINATOR = 2**16


class NotApplicableError(ValueError):
    """The codebook's values do not sit on a power-of-two fixed-point grid."""


@dataclass(frozen=True)
class MacCost:
    format: str
    accum_bits: int
    mult_area_um2: float
    accum_area_um2: float
    mac_area_um2: float
    power_uw: float
    operand_bits: int = 4
    source: str = "paper_reference"


# Synthesized MAC units, accumulators sized for 256-term dot products.
REFERENCE_MAC_COSTS: dict[str, MacCost] = {
    c.format: c
    for c in (
        MacCost("int4", 16, 75.3, 85.4, 160.7, 48.5),
        MacCost("int5", 18, 106.6, 97.0, 203.6, 59.8, operand_bits=5),
        MacCost("e2m1-i", 20, 119.1, 109.1, 228.2, 59.7),
        MacCost("e2m1-b", 23, 137.9, 131.0, 268.9, 67.9),
        MacCost("e2m1", 17, 79.7, 90.7, 170.4, 49.6),
        MacCost("e2m1-sr", 18, 96.8, 94.5, 191.3, 53.5),
        MacCost("e2m1-sp", 19, 121.5, 96.5, 218.0, 54.6),
        MacCost("e3m0", 22, 98.0, 119.7, 217.7, 59.5),
        MacCost("apot4", 16, 96.2, 85.4, 181.6, 47.2),
        MacCost("apot4-sp", 16, 99.7, 85.4, 185.1, 45.5),
    )
}


def paper_mac_cost(fmt: str) -> MacCost:
    try:
        return REFERENCE_MAC_COSTS[fmt.lower()]
    except KeyError:
        raise KeyError(f"no reference MAC cost for {fmt!r}; known: {', '.join(REFERENCE_MAC_COSTS)}") from None


def estimate_accumulator_bits(cb: Codebook, n_terms: int = 256) -> int:
    """Lossless two's-complement accumulator width for ``n_terms`` products.

    The raw values are mapped to integers on their common power-of-two grid;
    the worst-case sum ``n_terms * max|int|**2`` needs ``bit_length`` bits of
    magnitude plus a sign bit. This is a lower bound: real multipliers may
    carry extra bits.
    """
    if n_terms < 1:
        raise ValueError(f"n_terms must be >= 1, got {n_terms}")
    if cb.family == "lookup":
        raise NotApplicableError(f"{cb.name} is a lookup format with no fixed-point grid")
    fracs = [Fraction(v) for v in cb.raw_values]
    denom = max(f.denominator for f in fracs)
    if denom > MAX_LSB_DENOMINATOR:
        raise NotApplicableError(f"{cb.name} values are not on a power-of-two grid")
    peak = max(abs(int(f * denom)) for f in fracs)
    return (n_terms * peak * peak).bit_length() + 1


@dataclass(frozen=True)
class AccumulatorCheck:
    format: str
    reference_bits: int
    estimated_bits: int

    @property
    def matches(self) -> bool:
        return self.reference_bits == self.estimated_bits


def compare_accumulator_bits(n_terms: int = 256) -> list[AccumulatorCheck]:
    """Estimated width next to every reference row, in table order.

    Rows where the two differ are flagged through ``matches``; the
    reference value is never replaced.
    """
    return [
        AccumulatorCheck(fmt, c.accum_bits, estimate_accumulator_bits(builtin(fmt), n_terms))
        for fmt, c in REFERENCE_MAC_COSTS.items()
    ]


def chip_overhead(mac_area: float, baseline_mac_area: float, bits: int, baseline_bits: int,
                  mac_frac: float = MAC_AREA_FRACTION, mem_frac: float = MEM_AREA_FRACTION) -> float:
    """Relative chip area overhead in percent.

    MAC units and memory are assumed to take ``mac_frac`` and ``mem_frac``
    of the baseline chip; memory scales linearly with operand width.
    """
    if not (mac_area > 0 and baseline_mac_area > 0):
        raise ValueError("MAC areas must be > 0")
    if bits < 1 or baseline_bits < 1:
        raise ValueError("bit widths must be >= 1")
    return 100.0 * (mac_frac * (mac_area / baseline_mac_area - 1.0)
                    + mem_frac * (bits / baseline_bits - 1.0))


def format_overhead(fmt: str, baseline: str = BASELINE_FORMAT) -> float:
    """Chip overhead of a reference format relative to ``baseline``."""
    c = paper_mac_cost(fmt)
    b = paper_mac_cost(baseline)
    return chip_overhead(c.mac_area_um2, b.mac_area_um2, c.operand_bits, b.operand_bits)


@dataclass(frozen=True)
class ParetoPoint:
    format: str
    quality: float
    overhead_pct: float


def _dominates(a: ParetoPoint, b: ParetoPoint) -> bool:
    return (a.quality >= b.quality and a.overhead_pct <= b.overhead_pct
            and (a.quality > b.quality or a.overhead_pct < b.overhead_pct))


def pareto_front(points: Sequence[ParetoPoint]) -> list[ParetoPoint]:
    """Points not dominated in (higher quality, lower overhead), by overhead.

    Identical points do not dominate each other, so all copies survive.
    """
    if not points:
        raise ValueError("pareto_front needs at least one point")
    order = sorted(points, key=lambda p: (p.overhead_pct, -p.quality))
    front: list[ParetoPoint] = []
    best_q = None
    for p in order:
        if best_q is None or p.quality > best_q:
            front.append(p)
            best_q = p.quality
        elif front and p.quality == front[-1].quality and p.overhead_pct == front[-1].overhead_pct:
            front.append(p)
    return front
