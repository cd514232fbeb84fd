"""Special-case tables: inputs answered before range reduction.

Each function/format pair carries an ordered rule list; the first rule whose
predicate matches the input produces the result.  Predicates compare the
decoded binary64 input (or its class); actions are constants, the identity,
the near-zero pi*x path, or the huge-argument parity rules for cospi.

Band thresholds are not copied from printed decimals: they are derived here,
once per function/format, by monotone binary searches against the oracle
(per binade where the predicate is only piecewise monotone), or by exhaustive
scan where no monotonicity is available (the pi*x band).  Thresholds are
stored as exact binary64 bit patterns.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from . import oracle
from .formats import (
    TargetFormat,
    bits_to_f64,
    decode,
    f64_to_bits,
    round_to_target,
    target_from_ordinal,
    target_ordinal,
)

__all__ = ["SpecialRule", "apply_special", "derive_special_table", "PI_D"]

PI_D = 3.141592653589793  # RN64(pi), the double constant used by the pi*x path


@dataclass(frozen=True)
class SpecialRule:
    pred: str  # nan|inf_pos|inf_neg|zero|neg|le|ge|between|abs_lt|abs_le|abs_ge|half_int
    action: str  # const|identity|pi_x|parity_one
    t1_bits: int = 0
    t2_bits: int = 0
    out_bits: int = 0

    def matches(self, x: float) -> bool:
        p = self.pred
        if p == "nan":
            return math.isnan(x)
        if math.isnan(x):
            return False
        if p == "inf_pos":
            return x == math.inf
        if p == "inf_neg":
            return x == -math.inf
        if p == "zero":
            return x == 0.0
        if p == "neg":
            return x < 0.0
        if math.isinf(x):
            return False
        if p == "le":
            return x <= bits_to_f64(self.t1_bits)
        if p == "ge":
            return x >= bits_to_f64(self.t1_bits)
        if p == "between":
            return bits_to_f64(self.t1_bits) <= x <= bits_to_f64(self.t2_bits)
        if p == "abs_lt":
            return abs(x) < bits_to_f64(self.t1_bits)
        if p == "abs_le":
            return abs(x) <= bits_to_f64(self.t1_bits)
        if p == "abs_ge":
            return abs(x) >= bits_to_f64(self.t1_bits)
        if p == "half_int":
            return abs(x) - math.floor(abs(x)) == 0.5
        raise ValueError(f"unknown predicate {p!r}")


def apply_special(
    table: tuple[SpecialRule, ...], fmt: TargetFormat, x_bits: int, x: float
) -> int | None:
    """Result bits if x is a declared special case, else None."""
    for rule in table:
        if not rule.matches(x):
            continue
        a = rule.action
        if a == "const":
            return rule.out_bits
        if a == "identity":
            return x_bits
        if a == "pi_x":
            return round_to_target(fmt, PI_D * x)
        if a == "parity_one":
            odd = math.fmod(abs(x), 2.0) != 0.0
            return round_to_target(fmt, -1.0 if odd else 1.0)
        raise ValueError(f"unknown action {a!r}")
    return None


# ---------------------------------------------------------------------------
# threshold derivation


def _finite_ordinal_range(fmt: TargetFormat) -> tuple[int, int]:
    if fmt.kind == "ieee":
        return (
            target_ordinal(fmt, fmt.max_finite_bits | fmt.sign_mask),
            target_ordinal(fmt, fmt.max_finite_bits),
        )
    return (
        target_ordinal(fmt, (-fmt.maxpos_bits) & fmt.bits_mask),
        target_ordinal(fmt, fmt.maxpos_bits),
    )


def _boundary(fmt: TargetFormat, pred, true_ord: int, false_ord: int) -> int:
    """Last ordinal on the true side of a monotone predicate edge."""
    assert pred(true_ord) and not pred(false_ord)
    step = 1 if false_ord > true_ord else -1
    a, b = true_ord, false_ord
    while abs(b - a) > 1:
        mid = (a + b) // 2
        if pred(mid):
            a = mid
        else:
            b = mid
    del step
    return a


def _binade_blocks(fmt: TargetFormat, lo_ord: int, hi_ord: int):
    """Split [lo_ord, hi_ord] (positive values) into constant-gap blocks.

    Target spacing is uniform inside each binade for both kinds, so blocks
    are delimited by the ordinals of powers of two.
    """
    blocks = []
    start = lo_ord
    o = lo_ord
    while o <= hi_ord:
        v = decode(fmt, target_from_ordinal(fmt, o))
        # ordinal of the largest value in this binade
        top = math.ldexp(1.0, math.frexp(v)[1])  # next power of two above v
        t_bits = round_to_target(fmt, top)
        t_ord = target_ordinal(fmt, t_bits)
        if decode(fmt, t_bits) >= top:
            t_ord -= 1
        end = min(t_ord, hi_ord)
        blocks.append((start, end))
        o = end + 1
        start = o
    return blocks


def _band_limit_per_binade(fmt: TargetFormat, pred, lo_ord: int, hi_ord: int) -> int:
    """Largest ordinal B such that pred holds on [lo_ord, B], for predicates
    monotone (true -> false) within each binade."""
    last_true = lo_ord - 1
    for start, end in _binade_blocks(fmt, lo_ord, hi_ord):
        if not pred(start):
            break
        if pred(end):
            last_true = end
            continue
        last_true = _boundary(fmt, pred, start, end)
        break
    return last_true


def _one_bits(fmt: TargetFormat) -> int:
    return round_to_target(fmt, 1.0)


def _pos_zero_bits(fmt: TargetFormat) -> int:
    return 0


def derive_special_table(
    fid: str, fmt: TargetFormat, pi_x_band: float | None = None
) -> tuple[SpecialRule, ...]:
    """Build the rule table; pi_x_band supplies the scanned near-zero cutoff
    for 32-bit sinpi (computed by the vectorized lane)."""
    builder = _BUILDERS[fid]
    if fid == "sinpi":
        return builder(fmt, pi_x_band)
    return builder(fmt)


def _class_rules_ieee(out_nan: int, out_pinf: int | None, out_ninf: int | None):
    rules = [SpecialRule("nan", "const", out_bits=out_nan)]
    if out_pinf is not None:
        rules.append(SpecialRule("inf_pos", "const", out_bits=out_pinf))
    if out_ninf is not None:
        rules.append(SpecialRule("inf_neg", "const", out_bits=out_ninf))
    return rules


def _log_table(fmt: TargetFormat) -> tuple[SpecialRule, ...]:
    if fmt.kind == "posit":
        nar = fmt.nar_bits
        return (
            SpecialRule("nan", "const", out_bits=nar),
            SpecialRule("zero", "const", out_bits=nar),
            SpecialRule("neg", "const", out_bits=nar),
        )
    qnan = fmt.quiet_nan_bits
    ninf = fmt.inf_bits | fmt.sign_mask
    return (
        *_class_rules_ieee(qnan, fmt.inf_bits, qnan),
        SpecialRule("zero", "const", out_bits=ninf),
        SpecialRule("neg", "const", out_bits=qnan),
    )


def _exp_table_for(fid: str):
    def build(fmt: TargetFormat) -> tuple[SpecialRule, ...]:
        one = _one_bits(fmt)
        lo_ord, hi_ord = _finite_ordinal_range(fmt)
        zero_ord = target_ordinal(fmt, 0)

        def orc(o: int) -> int:
            return oracle.oracle_round(fid, decode(fmt, target_from_ordinal(fmt, o)), fmt)

        if fmt.kind == "ieee":
            big = fmt.inf_bits
            small = 0
        else:
            big = fmt.maxpos_bits
            small = fmt.minpos_bits
        # overflow cutoff: smallest x whose result saturates high
        ov = _boundary(fmt, lambda o: orc(o) != big, zero_ord, hi_ord) + 1
        # underflow cutoff: largest (most negative) x saturating low
        un = _boundary(fmt, lambda o: orc(o) != small, zero_ord, lo_ord) - 1
        # the band that rounds to one
        one_hi = _boundary(fmt, lambda o: orc(o) == one, zero_ord, ov)
        one_lo = _boundary(fmt, lambda o: orc(o) == one, zero_ord, un)
        rules = []
        if fmt.kind == "ieee":
            rules += _class_rules_ieee(fmt.quiet_nan_bits, fmt.inf_bits, 0)
        else:
            rules.append(SpecialRule("nan", "const", out_bits=fmt.nar_bits))
        rules += [
            SpecialRule("ge", "const", t1_bits=f64_to_bits(decode(fmt, target_from_ordinal(fmt, ov))), out_bits=big),
            SpecialRule("le", "const", t1_bits=f64_to_bits(decode(fmt, target_from_ordinal(fmt, un))), out_bits=small),
            SpecialRule(
                "between",
                "const",
                t1_bits=f64_to_bits(decode(fmt, target_from_ordinal(fmt, one_lo))),
                t2_bits=f64_to_bits(decode(fmt, target_from_ordinal(fmt, one_hi))),
                out_bits=one,
            ),
        ]
        return tuple(rules)

    return build


def _huge_trig_cutoff(fmt: TargetFormat) -> float:
    """Smallest power of two at/above which every finite value is an integer."""
    if fmt.kind == "ieee":
        return math.ldexp(1.0, fmt.mantissa_bits)
    # posit: spacing within [2**s, 2**(s+1)) is 2**(s - frac_bits(s)); find the
    # smallest s where spacing >= 1 from there on (it only grows with s)
    from .formats import _posit_fields_raw

    s = 0
    while s < fmt.max_scale:
        # probe the first pattern at scale >= s
        bits = round_to_target(fmt, math.ldexp(1.0, s))
        _, scale, _, frac_bits = _posit_fields_raw(fmt.total_bits, fmt.es, bits)
        if scale - frac_bits >= 0 and scale >= s:
            return math.ldexp(1.0, s)
        s += 1
    return math.ldexp(1.0, fmt.max_scale)


def _pi_x_band(fid: str, fmt: TargetFormat) -> float:
    """Largest B such that rounding pi*x in binary64 is correct for all |x| < B.

    Not monotone, so scan positive inputs upward exhaustively until the first
    failure.  16-bit formats scan every pattern; float32 callers use the
    vectorized lane (vector32.pi_x_band_f32) and pass the result in presets.
    """
    assert fmt.total_bits == 16
    lo_ord = target_ordinal(fmt, fmt.minpos_bits if fmt.kind == "posit" else 1)
    hi = _huge_trig_cutoff(fmt)
    o = lo_ord
    first_fail = None
    while True:
        bits = target_from_ordinal(fmt, o)
        x = decode(fmt, bits)
        if x >= hi:
            break
        want = oracle.oracle_round(fid, x, fmt)
        got = round_to_target(fmt, PI_D * x)
        if got != want:
            first_fail = x
            break
        o += 1
    return first_fail if first_fail is not None else hi


def _sinpi_table(fmt: TargetFormat, pi_x_band: float | None = None) -> tuple[SpecialRule, ...]:
    huge = _huge_trig_cutoff(fmt)
    if pi_x_band is not None:
        band = pi_x_band
    else:
        band = _pi_x_band("sinpi", fmt) if fmt.total_bits == 16 else None
    rules = []
    if fmt.kind == "ieee":
        qnan = fmt.quiet_nan_bits
        rules += [
            SpecialRule("nan", "const", out_bits=qnan),
            SpecialRule("inf_pos", "const", out_bits=qnan),
            SpecialRule("inf_neg", "const", out_bits=qnan),
        ]
    else:
        rules.append(SpecialRule("nan", "const", out_bits=fmt.nar_bits))
    rules.append(SpecialRule("abs_ge", "const", t1_bits=f64_to_bits(huge), out_bits=_pos_zero_bits(fmt)))
    if band is not None:
        rules.append(SpecialRule("abs_lt", "pi_x", t1_bits=f64_to_bits(band)))
    return tuple(rules)


def _cospi_table(fmt: TargetFormat) -> tuple[SpecialRule, ...]:
    huge = _huge_trig_cutoff(fmt)
    one = _one_bits(fmt)

    def orc(o: int) -> int:
        return oracle.oracle_round("cospi", decode(fmt, target_from_ordinal(fmt, o)), fmt)

    zero_ord = target_ordinal(fmt, fmt.minpos_bits if fmt.kind == "posit" else 1)
    half_ord = target_ordinal(fmt, round_to_target(fmt, 0.25))
    band_hi = _boundary(fmt, lambda o: orc(o) == one, zero_ord, half_ord)
    band = decode(fmt, target_from_ordinal(fmt, band_hi))
    rules = []
    if fmt.kind == "ieee":
        qnan = fmt.quiet_nan_bits
        rules += [
            SpecialRule("nan", "const", out_bits=qnan),
            SpecialRule("inf_pos", "const", out_bits=qnan),
            SpecialRule("inf_neg", "const", out_bits=qnan),
        ]
    else:
        rules.append(SpecialRule("nan", "const", out_bits=fmt.nar_bits))
    rules += [
        SpecialRule("abs_ge", "parity_one", t1_bits=f64_to_bits(huge)),
        SpecialRule("half_int", "const", out_bits=_pos_zero_bits(fmt)),
        SpecialRule("abs_le", "const", t1_bits=f64_to_bits(band), out_bits=one),
    ]
    return tuple(rules)


def _sinh_table(fmt: TargetFormat) -> tuple[SpecialRule, ...]:
    lo_ord, hi_ord = _finite_ordinal_range(fmt)

    def orc(o: int) -> int:
        return oracle.oracle_round("sinh", decode(fmt, target_from_ordinal(fmt, o)), fmt)

    if fmt.kind == "ieee":
        big, small = fmt.inf_bits, fmt.inf_bits | fmt.sign_mask
    else:
        big, small = fmt.maxpos_bits, (-fmt.maxpos_bits) & fmt.bits_mask
    one_ord = target_ordinal(fmt, round_to_target(fmt, 1.0))
    ov = _boundary(fmt, lambda o: orc(o) != big, one_ord, hi_ord) + 1
    # identity band: RN(sinh x) == x; monotone within each binade
    min_ord = target_ordinal(fmt, fmt.minpos_bits if fmt.kind == "posit" else 1)

    def ident(o: int) -> bool:
        bits = target_from_ordinal(fmt, o)
        return orc(o) == bits

    band_ord = _band_limit_per_binade(fmt, ident, min_ord, one_ord)
    band = decode(fmt, target_from_ordinal(fmt, band_ord))
    ov_x = decode(fmt, target_from_ordinal(fmt, ov))
    rules = []
    if fmt.kind == "ieee":
        rules += _class_rules_ieee(fmt.quiet_nan_bits, fmt.inf_bits, fmt.inf_bits | fmt.sign_mask)
    else:
        rules.append(SpecialRule("nan", "const", out_bits=fmt.nar_bits))
    rules += [
        SpecialRule("ge", "const", t1_bits=f64_to_bits(ov_x), out_bits=big),
        SpecialRule("le", "const", t1_bits=f64_to_bits(-ov_x), out_bits=small),
        SpecialRule("abs_le", "identity", t1_bits=f64_to_bits(band)),
    ]
    return tuple(rules)


def _cosh_table(fmt: TargetFormat) -> tuple[SpecialRule, ...]:
    lo_ord, hi_ord = _finite_ordinal_range(fmt)
    one = _one_bits(fmt)

    def orc(o: int) -> int:
        return oracle.oracle_round("cosh", decode(fmt, target_from_ordinal(fmt, o)), fmt)

    big = fmt.inf_bits if fmt.kind == "ieee" else fmt.maxpos_bits
    one_ord = target_ordinal(fmt, one)
    ov = _boundary(fmt, lambda o: orc(o) != big, one_ord, hi_ord) + 1
    min_ord = target_ordinal(fmt, fmt.minpos_bits if fmt.kind == "posit" else 1)
    band_hi = _boundary(fmt, lambda o: orc(o) == one, min_ord, one_ord)
    band = decode(fmt, target_from_ordinal(fmt, band_hi))
    ov_x = decode(fmt, target_from_ordinal(fmt, ov))
    rules = []
    if fmt.kind == "ieee":
        rules += [
            SpecialRule("nan", "const", out_bits=fmt.quiet_nan_bits),
            SpecialRule("inf_pos", "const", out_bits=fmt.inf_bits),
            SpecialRule("inf_neg", "const", out_bits=fmt.inf_bits),
        ]
    else:
        rules.append(SpecialRule("nan", "const", out_bits=fmt.nar_bits))
    rules += [
        SpecialRule("abs_ge", "const", t1_bits=f64_to_bits(ov_x), out_bits=big),
        SpecialRule("abs_le", "const", t1_bits=f64_to_bits(band), out_bits=one),
    ]
    return tuple(rules)


_BUILDERS = {
    "ln": _log_table,
    "log2": _log_table,
    "log10": _log_table,
    "exp": _exp_table_for("exp"),
    "exp2": _exp_table_for("exp2"),
    "exp10": _exp_table_for("exp10"),
    "sinpi": _sinpi_table,
    "cospi": _cospi_table,
    "sinh": _sinh_table,
    "cosh": _cosh_table,
}
