"""Rounding intervals: the maximal binary64 range that rounds to a target value.

For a finite target pattern y, the interval [lo, hi] contains every binary64
w with round_to_target(w) = y, and is maximal: stepping lo down or hi up by
one binary64 ulp leaves the set.  Construction is by midpoints of adjacent
target values (ties-to-even decides whether a representable midpoint is
included); a binary-search construction over binary64 ordinals is provided
as an independent cross-check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .formats import (
    FINITE_CLASSES,
    TargetFormat,
    classify,
    decode,
    f64_from_ordinal,
    f64_ordinal,
    posit_boundary,
    pred_h,
    round_to_target,
    succ_h,
    target_ordinal,
    target_pred,
    target_succ,
)

__all__ = ["RoundingInterval", "rounding_interval", "rounding_interval_search"]

_MAX_F64 = math.nextafter(math.inf, 0.0)
_MIN_POS_F64 = 5e-324


@dataclass(frozen=True)
class RoundingInterval:
    fmt_name: str
    y_bits: int
    lo: float
    hi: float

    def contains(self, w: float) -> bool:
        return self.lo <= w <= self.hi


def _zero_interval(fmt: TargetFormat, y_bits: int) -> RoundingInterval:
    if fmt.kind == "posit":
        # only exact zero rounds to posit zero
        return RoundingInterval(fmt.name, y_bits, 0.0, 0.0)
    # ieee +-0: band up to the first midpoint; pattern 0 is even so the
    # midpoint with the minimum subnormal is included
    half = decode(fmt, 1) * 0.5
    if y_bits == fmt.sign_mask:  # -0
        return RoundingInterval(fmt.name, y_bits, -half, -0.0)
    return RoundingInterval(fmt.name, y_bits, 0.0, half)


def rounding_interval(fmt: TargetFormat, y_bits: int) -> RoundingInterval:
    """Maximal [lo, hi] in binary64 rounding to finite target pattern y."""
    cls = classify(fmt, y_bits)
    if cls not in FINITE_CLASSES:
        raise ValueError(f"rounding interval of non-finite target {hex(y_bits)}")
    if cls == "zero":
        return _zero_interval(fmt, y_bits)

    v = decode(fmt, y_bits)
    even = (y_bits & 1) == 0  # tie-to-even acts on the stored pattern's LSB

    if fmt.kind == "posit":
        return _posit_interval(fmt, y_bits, v, even)

    # lower endpoint: midpoint with the numeric predecessor
    try:
        below = decode(fmt, target_pred(fmt, y_bits))
        mid = (below + v) * 0.5  # exact: adjacent targets, short significands
        lo = mid if even else succ_h(mid)
    except OverflowError:  # y is the most negative finite value
        ulp = decode(fmt, target_succ(fmt, y_bits)) - v  # gap to the successor
        lo = succ_h(v - ulp * 0.5)  # at v - ulp/2 exactly, overflow wins

    # upper endpoint: midpoint with the numeric successor
    try:
        above = decode(fmt, target_succ(fmt, y_bits))
        mid = (v + above) * 0.5
        hi = mid if even else pred_h(mid)
    except OverflowError:  # y is the most positive finite value
        ulp = v - decode(fmt, target_pred(fmt, y_bits))
        hi = pred_h(v + ulp * 0.5)

    return RoundingInterval(fmt.name, y_bits, lo, hi)


def _posit_interval(fmt: TargetFormat, y_bits: int, v: float, even: bool) -> RoundingInterval:
    # work on the positive magnitude pattern, mirror for negatives at the end
    neg = bool(y_bits & fmt.sign_mask)
    mag = ((-y_bits) & fmt.bits_mask) if neg else y_bits
    # boundary below the magnitude
    if mag == fmt.minpos_bits:
        lo = _MIN_POS_F64  # (0, boundary] rounds to minpos; only exact 0 -> 0
    else:
        b = posit_boundary(fmt, mag - 1)
        lo = b if even else succ_h(b)
    # boundary above the magnitude
    if mag == fmt.maxpos_bits:
        hi = _MAX_F64  # saturation
    else:
        b = posit_boundary(fmt, mag)
        hi = b if even else pred_h(b)
    if neg:
        lo, hi = -hi, -lo
    return RoundingInterval(fmt.name, y_bits, lo, hi)


def rounding_interval_search(fmt: TargetFormat, y_bits: int) -> RoundingInterval:
    """Binary-search construction of the same interval (cross-check oracle)."""
    cls = classify(fmt, y_bits)
    if cls not in FINITE_CLASSES:
        raise ValueError("non-finite target")
    if cls == "zero":
        # searching in ordinal space cannot distinguish -0/+0; probe directly
        ref = _zero_interval(fmt, y_bits)
        assert round_to_target(fmt, ref.lo) == y_bits
        assert round_to_target(fmt, ref.hi) == y_bits
        assert round_to_target(fmt, pred_h(ref.lo)) != y_bits
        assert round_to_target(fmt, succ_h(ref.hi)) != y_bits
        return ref

    v = decode(fmt, y_bits)
    yo = target_ordinal(fmt, y_bits)

    def cmp(w: float) -> int:
        return target_ordinal(fmt, round_to_target(fmt, w)) - yo

    seed = f64_ordinal(v)
    # lowest binary64 ordinal with round(w) >= y
    a, b = f64_ordinal(-_MAX_F64), seed
    while a < b:
        mid = (a + b) // 2
        if cmp(f64_from_ordinal(mid)) >= 0:
            b = mid
        else:
            a = mid + 1
    lo_ord = a
    # highest binary64 ordinal with round(w) <= y
    a, b = seed, f64_ordinal(_MAX_F64)
    while a < b:
        mid = (a + b + 1) // 2
        if cmp(f64_from_ordinal(mid)) <= 0:
            a = mid
        else:
            b = mid - 1
    hi_ord = a
    lo = f64_from_ordinal(lo_ord)
    hi = f64_from_ordinal(hi_ord)
    # keep signed zeros consistent with the side they approach from
    if lo == 0.0 and v < 0:
        lo = -0.0
    if hi == 0.0 and v < 0:
        hi = -0.0
    return RoundingInterval(fmt.name, y_bits, lo, hi)
