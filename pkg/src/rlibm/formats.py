"""Bit-exact codecs and ordered enumeration for 16/32-bit target formats.

Two families of targets are supported: IEEE-style binary floats
(sign / exponent / mantissa, gradual underflow, +-inf, NaN) and posits
(sign / regime / exponent / fraction, a single NaR, saturation at the
extremes).  The working format is binary64, represented as plain Python
floats; every finite value of every supported target decodes exactly to
a binary64.

Bit patterns are plain ints.  Helpers at the bottom operate on binary64
patterns directly (successor / predecessor, ordered integer mapping).
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator

__all__ = [
    "TargetFormat",
    "FORMATS",
    "get_format",
    "decode",
    "classify",
    "round_to_target",
    "round_fraction_to_target",
    "target_ordinal",
    "target_from_ordinal",
    "target_succ",
    "target_pred",
    "enumerate_bits",
    "f64_to_bits",
    "bits_to_f64",
    "succ_h",
    "pred_h",
    "f64_ordinal",
    "f64_from_ordinal",
]

# value classes
ZERO = "zero"
SUBNORMAL = "subnormal"
NORMAL = "normal"
INF = "inf"
NAN = "nan"
NAR = "nar"

FINITE_CLASSES = frozenset({ZERO, SUBNORMAL, NORMAL})


@dataclass(frozen=True)
class TargetFormat:
    """A 16/32-bit representation we generate correctly rounded results for."""

    name: str
    kind: str  # "ieee" | "posit"
    total_bits: int
    exponent_bits: int = 0  # ieee only
    es: int = 0  # posit only

    def __post_init__(self):
        if self.total_bits not in (16, 32):
            raise ValueError("total_bits must be 16 or 32")
        if self.kind not in ("ieee", "posit"):
            raise ValueError("kind must be 'ieee' or 'posit'")

    # --- ieee derived parameters ---
    @property
    def mantissa_bits(self) -> int:
        return self.total_bits - 1 - self.exponent_bits

    @property
    def bias(self) -> int:
        return (1 << (self.exponent_bits - 1)) - 1

    @property
    def emax(self) -> int:
        return (1 << self.exponent_bits) - 2 - self.bias

    @property
    def emin(self) -> int:
        return 1 - self.bias

    @property
    def max_finite_bits(self) -> int:
        return (((1 << self.exponent_bits) - 2) << self.mantissa_bits) | (
            (1 << self.mantissa_bits) - 1
        )

    @property
    def quiet_nan_bits(self) -> int:
        """Canonical quiet NaN pattern (all-ones exponent, MSB of mantissa set)."""
        return (((1 << self.exponent_bits) - 1) << self.mantissa_bits) | (
            1 << (self.mantissa_bits - 1)
        )

    @property
    def inf_bits(self) -> int:
        return ((1 << self.exponent_bits) - 1) << self.mantissa_bits

    # --- posit derived parameters ---
    @property
    def nar_bits(self) -> int:
        return 1 << (self.total_bits - 1)

    @property
    def maxpos_bits(self) -> int:
        return (1 << (self.total_bits - 1)) - 1

    @property
    def minpos_bits(self) -> int:
        return 1

    @property
    def max_scale(self) -> int:
        """Binary exponent of maxpos: (total_bits - 2) * 2**es."""
        return (self.total_bits - 2) << self.es

    @property
    def sign_mask(self) -> int:
        return 1 << (self.total_bits - 1)

    @property
    def bits_mask(self) -> int:
        return (1 << self.total_bits) - 1


FORMATS = {
    "bfloat16": TargetFormat("bfloat16", "ieee", 16, exponent_bits=8),
    "float16": TargetFormat("float16", "ieee", 16, exponent_bits=5),
    "float32": TargetFormat("float32", "ieee", 32, exponent_bits=8),
    "posit16": TargetFormat("posit16", "posit", 16, es=1),
    "posit32": TargetFormat("posit32", "posit", 32, es=2),
}


def get_format(name: str) -> TargetFormat:
    try:
        return FORMATS[name]
    except KeyError:
        raise KeyError(f"unknown format {name!r}; known: {sorted(FORMATS)}") from None


# ---------------------------------------------------------------------------
# decode / classify


def classify(fmt: TargetFormat, bits: int) -> str:
    bits &= fmt.bits_mask
    if fmt.kind == "ieee":
        exp = (bits >> fmt.mantissa_bits) & ((1 << fmt.exponent_bits) - 1)
        mant = bits & ((1 << fmt.mantissa_bits) - 1)
        if exp == (1 << fmt.exponent_bits) - 1:
            return INF if mant == 0 else NAN
        if exp == 0:
            return ZERO if mant == 0 else SUBNORMAL
        return NORMAL
    else:
        if bits == 0:
            return ZERO
        if bits == fmt.nar_bits:
            return NAR
        return NORMAL


def _posit_fields(fmt: TargetFormat, bits: int) -> tuple[int, int, int, int]:
    return _posit_fields_raw(fmt.total_bits, fmt.es, bits)


def _posit_fields_raw(n: int, es: int, bits: int) -> tuple[int, int, int, int]:
    """Decode a nonzero, non-NaR posit pattern into (sign, scale, frac, frac_bits).

    value = (-1)**sign * 2**scale * (1 + frac / 2**frac_bits)
    """
    sign = bits >> (n - 1)
    body = (-bits) & ((1 << n) - 1) if sign else bits
    rest = body & ((1 << (n - 1)) - 1)
    width = n - 1
    first = (rest >> (width - 1)) & 1
    run = 1
    while run < width and ((rest >> (width - 1 - run)) & 1) == first:
        run += 1
    k = run - 1 if first else -run
    consumed = min(run + 1, width)  # regime run plus terminating bit
    remaining = width - consumed
    exp_bits = min(es, remaining)
    exp_field = (rest >> (remaining - exp_bits)) & ((1 << exp_bits) - 1) if exp_bits else 0
    exp = exp_field << (es - exp_bits)  # truncated low exponent bits read as zero
    frac_bits = remaining - exp_bits
    frac = rest & ((1 << frac_bits) - 1) if frac_bits else 0
    scale = (k << es) + exp
    return sign, scale, frac, frac_bits


def decode(fmt: TargetFormat, bits: int) -> float:
    """Exact binary64 value of a target pattern; NaN for NaN/NaR, +-inf for inf."""
    bits &= fmt.bits_mask
    cls = classify(fmt, bits)
    if cls == NAN or cls == NAR:
        return math.nan
    if fmt.kind == "ieee":
        sign = bits >> (fmt.total_bits - 1)
        if cls == INF:
            return -math.inf if sign else math.inf
        exp = (bits >> fmt.mantissa_bits) & ((1 << fmt.exponent_bits) - 1)
        mant = bits & ((1 << fmt.mantissa_bits) - 1)
        if exp == 0:
            val = math.ldexp(mant, fmt.emin - fmt.mantissa_bits)
        else:
            val = math.ldexp((1 << fmt.mantissa_bits) | mant, exp - fmt.bias - fmt.mantissa_bits)
        return -val if sign else val
    else:
        if cls == ZERO:
            return 0.0
        sign, scale, frac, frac_bits = _posit_fields(fmt, bits)
        val = math.ldexp((1 << frac_bits) | frac, scale - frac_bits)
        return -val if sign else val


# ---------------------------------------------------------------------------
# ordered enumeration

# Numeric total order over patterns, used for succ/pred and midpoint logic.
# ieee: signed-magnitude offset trick (-0 and +0 are adjacent ordinals).
# posit: the pattern as a two's complement integer is already monotone in
# value, with NaR at the very bottom.


def target_ordinal(fmt: TargetFormat, bits: int) -> int:
    bits &= fmt.bits_mask
    if fmt.kind == "ieee":
        mag = bits & ~fmt.sign_mask
        return -mag - 1 if bits & fmt.sign_mask else mag
    else:
        return bits - (1 << fmt.total_bits) if bits & fmt.sign_mask else bits


def target_from_ordinal(fmt: TargetFormat, i: int) -> int:
    if fmt.kind == "ieee":
        return i if i >= 0 else (fmt.sign_mask | (-i - 1))
    else:
        return i & fmt.bits_mask


def target_succ(fmt: TargetFormat, bits: int) -> int:
    """Next finite pattern in numeric order; raises past the largest finite."""
    nxt = target_from_ordinal(fmt, target_ordinal(fmt, bits) + 1)
    if classify(fmt, nxt) not in FINITE_CLASSES:
        raise OverflowError("no finite successor")
    return nxt


def target_pred(fmt: TargetFormat, bits: int) -> int:
    prv = target_from_ordinal(fmt, target_ordinal(fmt, bits) - 1)
    if classify(fmt, prv) not in FINITE_CLASSES:
        raise OverflowError("no finite predecessor")
    return prv


def enumerate_bits(fmt: TargetFormat, exclude: frozenset[str] | set[str] = frozenset()) -> Iterator[int]:
    """Yield every bit pattern once, in raw pattern order, skipping excluded classes."""
    if not exclude:
        yield from range(1 << fmt.total_bits)
        return
    exclude = frozenset(exclude)
    for bits in range(1 << fmt.total_bits):
        if classify(fmt, bits) not in exclude:
            yield bits


# ---------------------------------------------------------------------------
# rounding to a target, round-to-nearest with ties to even
#
# One exact integer core handles both the binary64 fast path and arbitrary
# rationals: the input is presented as  (-1)**sign * sig * 2**e  where sig's
# most significant bit sits at position `top`.  For inexact rationals a
# sticky bit is appended so tie detection stays exact.


def _round_sig_ieee(fmt: TargetFormat, sign: int, sig: int, e: int, top: int) -> int:
    ve = e + top  # value is in [2**ve, 2**(ve+1))
    mb = fmt.mantissa_bits
    qe = max(ve, fmt.emin) - mb  # exponent of the destination quantum
    shift = qe - e
    if shift <= 0:
        keep = sig << (-shift)
    else:
        keep = sig >> shift
        rem = sig & ((1 << shift) - 1)
        half = 1 << (shift - 1)
        if rem > half or (rem == half and (keep & 1)):
            keep += 1
    if keep == 0:
        return fmt.sign_mask if sign else 0
    kb = keep.bit_length() - 1
    if kb < mb:  # target subnormal
        bits = keep
    else:
        if kb > mb:  # rounding carried into the next binade
            keep >>= kb - mb
        ve2 = qe + kb
        if ve2 > fmt.emax:
            return fmt.inf_bits | (fmt.sign_mask if sign else 0)
        bits = ((ve2 + fmt.bias) << mb) | (keep & ((1 << mb) - 1))
    return bits | (fmt.sign_mask if sign else 0)


def _round_sig_posit(fmt: TargetFormat, sign: int, sig: int, e: int, top: int) -> int:
    n = fmt.total_bits
    ve = e + top
    if ve >= fmt.max_scale:
        mag = fmt.maxpos_bits  # saturate large
        return ((-mag) & fmt.bits_mask) if sign else mag
    if ve < -fmt.max_scale:
        mag = fmt.minpos_bits  # saturate small; only exact zero rounds to zero
        return ((-mag) & fmt.bits_mask) if sign else mag
    k = ve >> fmt.es
    pexp = ve & ((1 << fmt.es) - 1)
    if k >= 0:
        regime_len = k + 2
        regime = ((1 << (k + 1)) - 1) << 1
    else:
        regime_len = -k + 1
        regime = 1
    # unbounded magnitude stream: regime, es exponent bits, fraction bits
    frac = sig & ((1 << top) - 1)
    stream = (((regime << fmt.es) | pexp) << top) | frac
    stream_len = regime_len + fmt.es + top
    cut = stream_len - (n - 1)  # keep n-1 magnitude bits
    if cut <= 0:
        mag = stream << (-cut)
    else:
        mag = stream >> cut
        rem = stream & ((1 << cut) - 1)
        half = 1 << (cut - 1)
        if rem > half or (rem == half and (mag & 1)):
            mag += 1
    # integer carry through exponent/regime fields is exactly value-order
    # rounding, because posit magnitude patterns are monotone in value
    if mag >= fmt.maxpos_bits:
        mag = fmt.maxpos_bits
    if mag == 0:
        mag = fmt.minpos_bits
    return ((-mag) & fmt.bits_mask) if sign else mag


def round_to_target(fmt: TargetFormat, x: float) -> int:
    """Round a binary64 to the nearest target pattern (ties to even).

    Floats overflow to +-inf per IEEE; posits saturate to maxpos/minpos and
    only exact zero maps to zero.  NaN maps to the canonical quiet NaN / NaR.
    """
    if math.isnan(x):
        return fmt.quiet_nan_bits if fmt.kind == "ieee" else fmt.nar_bits
    if math.isinf(x):
        if fmt.kind == "ieee":
            return fmt.inf_bits | (fmt.sign_mask if x < 0 else 0)
        return fmt.nar_bits
    if x == 0.0:
        if fmt.kind == "ieee":
            return fmt.sign_mask if math.copysign(1.0, x) < 0 else 0
        return 0
    b = f64_to_bits(x)
    sign = b >> 63
    exp_field = (b >> 52) & 0x7FF
    mant = b & ((1 << 52) - 1)
    if exp_field == 0:  # binary64 subnormal
        sig = mant
        e = -1022 - 52
    else:
        sig = (1 << 52) | mant
        e = exp_field - 1023 - 52
    shift_up = 52 - (sig.bit_length() - 1)
    sig <<= shift_up
    e -= shift_up
    if fmt.kind == "ieee":
        return _round_sig_ieee(fmt, sign, sig, e, 52)
    return _round_sig_posit(fmt, sign, sig, e, 52)


def round_fraction_to_target(fmt: TargetFormat, q: Fraction) -> int:
    """Exact round-to-nearest-even of an arbitrary rational to a target pattern."""
    if q == 0:
        return 0
    sign = 1 if q < 0 else 0
    mag = -q if sign else q
    num, den = mag.numerator, mag.denominator
    e = num.bit_length() - den.bit_length()
    # fix up so that 2**e <= mag < 2**(e+1)
    if e >= 0:
        if num < (den << e):
            e -= 1
    else:
        if (num << -e) < den:
            e -= 1
    # integer significand with 64 bits plus a sticky bit: mag = sig * 2**(e-65)
    w = 64
    if e >= w:
        sig, rem = divmod(num, den << (e - w))
    else:
        sig, rem = divmod(num << (w - e), den)
    sig = (sig << 1) | (1 if rem else 0)
    top = w + 1
    if fmt.kind == "ieee":
        return _round_sig_ieee(fmt, sign, sig, e - top, top)
    return _round_sig_posit(fmt, sign, sig, e - top, top)


# ---------------------------------------------------------------------------
# binary64 pattern helpers


def f64_to_bits(x: float) -> int:
    return struct.unpack("<Q", struct.pack("<d", x))[0]


def bits_to_f64(b: int) -> float:
    return struct.unpack("<d", struct.pack("<Q", b & ((1 << 64) - 1)))[0]


def succ_h(x: float) -> float:
    """Next binary64 in numeric order; +inf acts as the saturating sentinel."""
    return math.nextafter(x, math.inf)


def pred_h(x: float) -> float:
    return math.nextafter(x, -math.inf)


def f64_ordinal(x: float) -> int:
    """Monotone signed-magnitude index of a binary64; ordinal(+-0) = 0.

    Stepping by +-1 in ordinal space is exactly nextafter (signed zeros
    collapse to a single ordinal, matching numeric succ/pred).
    """
    b = f64_to_bits(x)
    mag = b & ((1 << 63) - 1)
    return -mag if b >> 63 else mag


def f64_from_ordinal(i: int) -> float:
    return bits_to_f64(i) if i >= 0 else bits_to_f64((1 << 63) | (-i))


def posit_boundary(fmt: TargetFormat, mag_bits: int) -> float:
    """Rounding boundary above a positive posit magnitude pattern.

    The boundary between adjacent n-bit patterns p and p+1 is the value of
    the (n+1)-bit posit pattern 2p+1 with the same es: appending one bit
    refines the encoding lattice, and posit rounding cuts in encoding space
    (arithmetic midpoints in the fraction zone, geometric steps where regime
    or exponent bits are being truncated).
    """
    if not (0 < mag_bits < fmt.maxpos_bits):
        raise ValueError("boundary defined between positive finite magnitudes")
    sign, scale, frac, frac_bits = _posit_fields_raw(
        fmt.total_bits + 1, fmt.es, 2 * mag_bits + 1
    )
    assert sign == 0
    return math.ldexp((1 << frac_bits) | frac, scale - frac_bits)
