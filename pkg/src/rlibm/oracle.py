"""Correctly rounded reference results for the ten elementary functions.

Every query is answered from a rigorous enclosure: each MPFR operation is
evaluated twice, once rounding down and once rounding up, composed so that
the true real result always lies inside [lo, hi].  A rounding decision is
accepted only when both enclosure ends round to the same target pattern
(Ziv test); otherwise the working precision escalates along a schedule.

Results that are exactly representable (ln 1, exp2 of integers, sinpi at
half integers, ...) short-circuit to exact rationals so that ties at
rounding boundaries are decided by the tie-to-even rule instead of never
converging.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import gmpy2

from . import formats
from .formats import TargetFormat, round_fraction_to_target

__all__ = [
    "FUNCTIONS",
    "OracleConfig",
    "OracleResult",
    "DomainError",
    "UndecidableAtMaxPrecision",
    "eval_hp",
    "eval_enclosure",
    "oracle_round",
    "oracle_round_h",
    "round_h_decided",
    "hi_lo_split",
]

FUNCTIONS = ("ln", "log2", "log10", "exp", "exp2", "exp10", "sinpi", "cospi", "sinh", "cosh")


class DomainError(ValueError):
    """Input outside the function's real domain (pole or undefined)."""


class UndecidableAtMaxPrecision(RuntimeError):
    """The rounding decision did not converge within the precision schedule."""


@dataclass(frozen=True)
class OracleConfig:
    precision_schedule: tuple[int, ...] = (128, 256, 400)
    max_precision: int = 400

    def __post_init__(self):
        s = self.precision_schedule
        if list(s) != sorted(set(s)):
            raise ValueError("precision schedule must be strictly increasing")
        if s[-1] < 400:
            raise ValueError("schedule must reach at least 400 bits")


DEFAULT_CONFIG = OracleConfig()


@dataclass(frozen=True)
class OracleResult:
    """An enclosure of f(x): exact rational, or [lo, hi] dyadic bounds."""

    exact: Fraction | None
    lo: object | None  # gmpy2.mpfr
    hi: object | None
    prec: int

    @property
    def value(self) -> Fraction:
        if self.exact is not None:
            return self.exact
        return _mpfr_to_fraction(self.lo)

    @property
    def error_bound(self) -> Fraction:
        if self.exact is not None:
            return Fraction(0)
        return _mpfr_to_fraction(self.hi) - _mpfr_to_fraction(self.lo)

    @property
    def rounded_ok(self) -> bool:
        """True when the enclosure is a single point (no rounding ambiguity)."""
        return self.exact is not None or self.lo == self.hi


def _mpfr_to_fraction(m) -> Fraction:
    if m == 0:
        return Fraction(0)
    mant, exp = m.as_mantissa_exp()
    return Fraction(int(mant)) * Fraction(2) ** int(exp)


def _ctx(prec: int, mode) -> "gmpy2.context":
    # context objects are single-use as context managers; always build fresh
    return gmpy2.context(precision=prec, round=mode)


@lru_cache(maxsize=None)
def _const_pi(prec: int, up: bool):
    with _ctx(prec, gmpy2.RoundUp if up else gmpy2.RoundDown):
        return gmpy2.const_pi()


def _directed(op, x, prec: int):
    """Evaluate a correctly rounded mpfr op under both directed modes."""
    with _ctx(prec, gmpy2.RoundDown):
        lo = op(x)
    with _ctx(prec, gmpy2.RoundUp):
        hi = op(x)
    return lo, hi


# --- exact argument reduction for sinpi/cospi ------------------------------


def _trig_reduce_exact(x: float) -> tuple[int, Fraction]:
    """Reduce x to (sign, t) with t in [0, 1/2] exactly: sinpi(x) = sign * sinpi(t)."""
    q = Fraction(x)
    t = q - 2 * (q.numerator // (2 * q.denominator))  # q mod 2, in [0, 2)
    sign = 1
    if t >= 1:
        t -= 1
        sign = -sign
    if t > Fraction(1, 2):
        t = 1 - t
    return sign, t


def _trig_reduce_exact_cos(x: float) -> tuple[int, Fraction]:
    """Reduce for cospi: cospi(x) = sign * cospi(t), t in [0, 1/2]."""
    q = Fraction(abs(x))
    t = q - 2 * (q.numerator // (2 * q.denominator))
    sign = 1
    if t >= 1:
        t -= 1
        sign = -sign
    if t > Fraction(1, 2):
        t = 1 - t
        sign = -sign
    return sign, t


def _sinpi_zero_sign(x: float) -> float:
    """Sign convention for sinpi at integral x: follows the reduction parity.

    sinpi(x) = (-1)**K * sinpi(L) with K the integer parity of x mod 2; at
    L = 0 the library's data path yields (-1)**K * 0, so the oracle adopts
    the same signed zero.
    """
    if x == 0.0:
        return math.copysign(0.0, x)
    q = Fraction(x)
    k = (q.numerator // q.denominator) & 1
    return -0.0 if k else 0.0


# --- per-function enclosures ------------------------------------------------


_LOG1P_OPS = {"ln1p": gmpy2.log, "log21p": gmpy2.log2, "log101p": gmpy2.log10}

# ids accepted by eval_enclosure: the ten public functions plus the
# reduced-domain inner functions log_a(1 + r)
ALL_FIDS = FUNCTIONS + tuple(_LOG1P_OPS)


def eval_enclosure(fid: str, x: float, prec: int) -> OracleResult:
    """Rigorous enclosure of f(x) for finite binary64 x."""
    if fid not in ALL_FIDS:
        raise KeyError(f"unknown function id {fid!r}")
    if math.isnan(x) or math.isinf(x):
        raise DomainError(f"{fid}: non-finite input {x!r}")

    if fid in _LOG1P_OPS:
        # f(r) = log_a(1 + r); 1 + r is exact at working precision for |r| < 1
        if x <= -1.0:
            raise DomainError(f"{fid}: input must exceed -1, got {x!r}")
        if x == 0.0:
            return OracleResult(Fraction(0), None, None, prec)
        op = _LOG1P_OPS[fid]
        with _ctx(prec, gmpy2.RoundDown):
            lo = op(gmpy2.mpfr(1) + gmpy2.mpfr(x))
        with _ctx(prec, gmpy2.RoundUp):
            hi = op(gmpy2.mpfr(1) + gmpy2.mpfr(x))
        return OracleResult(None, lo, hi, prec)

    if fid in ("ln", "log2", "log10"):
        if x <= 0.0:
            raise DomainError(f"{fid}: input must be positive, got {x!r}")
        if x == 1.0:
            return OracleResult(Fraction(0), None, None, prec)
        if fid == "log2":
            q = Fraction(x)
            if q.numerator == 1:  # x = 2**-k
                return OracleResult(Fraction(-(q.denominator.bit_length() - 1)), None, None, prec)
            if q.denominator == 1 and (q.numerator & (q.numerator - 1)) == 0:
                return OracleResult(Fraction(q.numerator.bit_length() - 1), None, None, prec)
        if fid == "log10":
            p = 1
            for k in range(1, 23):
                p *= 10
                if x == float(p) and Fraction(x) == p:
                    return OracleResult(Fraction(k), None, None, prec)
                if p > 2 ** 70:
                    break
        op = {"ln": gmpy2.log, "log2": gmpy2.log2, "log10": gmpy2.log10}[fid]
        lo, hi = _directed(op, gmpy2.mpfr(x), prec)
        return OracleResult(None, lo, hi, prec)

    if fid in ("exp", "exp2", "exp10"):
        if x == 0.0:
            return OracleResult(Fraction(1), None, None, prec)
        if fid == "exp2" and x == int(x) and abs(x) <= 4096:
            return OracleResult(Fraction(2) ** int(x), None, None, prec)
        if fid == "exp10" and x == int(x) and 0 < x <= 512:
            return OracleResult(Fraction(10) ** int(x), None, None, prec)
        op = {"exp": gmpy2.exp, "exp2": gmpy2.exp2, "exp10": gmpy2.exp10}[fid]
        lo, hi = _directed(op, gmpy2.mpfr(x), prec)
        return OracleResult(None, lo, hi, prec)

    if fid in ("sinh", "cosh"):
        if x == 0.0:
            if fid == "sinh":
                return OracleResult(Fraction(0), None, None, prec)  # sign handled by caller
            return OracleResult(Fraction(1), None, None, prec)
        op = gmpy2.sinh if fid == "sinh" else gmpy2.cosh
        lo, hi = _directed(op, gmpy2.mpfr(x), prec)
        return OracleResult(None, lo, hi, prec)

    if fid == "sinpi":
        sign, t = _trig_reduce_exact(x)
        if t == 0:
            return OracleResult(Fraction(0), None, None, prec)
        if t == Fraction(1, 2):
            return OracleResult(Fraction(sign), None, None, prec)
        lo, hi = _sin_pi_t_enclosure(t, prec)
        if sign < 0:
            lo, hi = -hi, -lo
        return OracleResult(None, lo, hi, prec)

    # cospi
    sign, t = _trig_reduce_exact_cos(x)
    if t == 0:
        return OracleResult(Fraction(sign), None, None, prec)
    if t == Fraction(1, 2):
        return OracleResult(Fraction(0), None, None, prec)
    lo, hi = _cos_pi_t_enclosure(t, prec)
    if sign < 0:
        lo, hi = -hi, -lo
    return OracleResult(None, lo, hi, prec)


def _sin_pi_t_enclosure(t: Fraction, prec: int):
    """Enclosure of sin(pi*t) for t in (0, 1/2); sin is increasing there."""
    with _ctx(prec, gmpy2.RoundDown):
        a_lo = _const_pi(prec, False) * gmpy2.mpfr(t)
        s_lo = gmpy2.sin(a_lo)
    with _ctx(prec, gmpy2.RoundUp):
        a_hi = _const_pi(prec, True) * gmpy2.mpfr(t)
        s_hi = gmpy2.sin(a_hi)
        if s_hi > 1:
            s_hi = gmpy2.mpfr(1)
    return s_lo, s_hi


def _cos_pi_t_enclosure(t: Fraction, prec: int):
    """Enclosure of cos(pi*t) for t in (0, 1/2); cos is decreasing on (0, pi)."""
    with _ctx(prec, gmpy2.RoundDown):
        a_lo = _const_pi(prec, False) * gmpy2.mpfr(t)
    with _ctx(prec, gmpy2.RoundUp):
        a_hi = _const_pi(prec, True) * gmpy2.mpfr(t)
    with _ctx(prec, gmpy2.RoundDown):
        c_lo = gmpy2.cos(a_hi)
    with _ctx(prec, gmpy2.RoundUp):
        c_hi = gmpy2.cos(a_lo)
        if c_hi > 1:
            c_hi = gmpy2.mpfr(1)
    return c_lo, c_hi


def eval_hp(fid: str, x: float, prec: int) -> OracleResult:
    """Arbitrary-precision evaluation with a rigorous error bound."""
    return eval_enclosure(fid, x, prec)


# --- rounding drivers --------------------------------------------------------


def _round_mpfr_to_target(fmt: TargetFormat, m) -> int:
    """Round one mpfr bound to a target pattern, short-circuiting magnitudes
    far outside the format range so no huge exact rationals are built.

    An infinite/zero mpfr here can only be MPFR's own overflow/underflow of a
    nonzero true value (exact zeros take the exact path), so it is classified
    as hugely large/small rather than as a literal value.
    """
    if fmt.kind == "ieee":
        big_e, tiny_e = fmt.emax + 2, fmt.emin - fmt.mantissa_bits - 2
        big = fmt.inf_bits
        tiny = 0
    else:
        big_e, tiny_e = fmt.max_scale + 2, -fmt.max_scale - 2
        big = fmt.maxpos_bits
        tiny = fmt.minpos_bits
    neg = math.copysign(1.0, float(m)) < 0
    if gmpy2.is_infinite(m):
        bits = big
    elif m == 0:
        bits = tiny
    else:
        e = gmpy2.get_exp(m) - 1  # value in [2**e, 2**(e+1))
        if e >= big_e:
            bits = big
        elif e <= tiny_e:
            bits = tiny
        else:
            return round_fraction_to_target(fmt, _mpfr_to_fraction(m))
    if bits == 0:
        return fmt.sign_mask if neg else 0
    if neg:
        bits = (bits | fmt.sign_mask) if fmt.kind == "ieee" else ((-bits) & fmt.bits_mask)
    return bits


def oracle_round(
    fid: str,
    x: float,
    fmt: TargetFormat,
    config: OracleConfig = DEFAULT_CONFIG,
) -> int:
    """RN_fmt(f(x)) as a bit pattern, escalating precision until unambiguous."""
    for prec in config.precision_schedule:
        res = eval_enclosure(fid, x, prec)
        if res.exact is not None:
            if fid == "sinpi" and res.exact == 0:
                return formats.round_to_target(fmt, _sinpi_zero_sign(x))
            if fid == "sinh" and res.exact == 0:
                return formats.round_to_target(fmt, math.copysign(0.0, x))
            return round_fraction_to_target(fmt, res.exact)
        lo_bits = _round_mpfr_to_target(fmt, res.lo)
        hi_bits = _round_mpfr_to_target(fmt, res.hi)
        if lo_bits == hi_bits:
            return lo_bits
    raise UndecidableAtMaxPrecision(f"{fid}({x!r}) undecided at {config.max_precision} bits")


def round_h_decided(res: OracleResult, x: float, fid: str) -> float | None:
    """RN binary64 of an enclosure, or None if the enclosure straddles a boundary."""
    if res.exact is not None:
        if fid == "sinpi" and res.exact == 0:
            return _sinpi_zero_sign(x)
        if fid == "sinh" and res.exact == 0:
            return math.copysign(0.0, x)
        n, d = res.exact.numerator, res.exact.denominator
        e = n.bit_length() - d.bit_length()
        if e > 1100:
            return math.copysign(math.inf, res.exact)
        if e < -1140:
            return math.copysign(0.0, res.exact)
        return n / d
    lo_f = float(res.lo)  # mpfr -> double is round-to-nearest
    hi_f = float(res.hi)
    if lo_f == hi_f:
        return lo_f
    return None


def oracle_round_h(fid: str, x: float, config: OracleConfig = DEFAULT_CONFIG) -> float:
    """Correctly rounded binary64 result of f(x)."""
    for prec in config.precision_schedule:
        res = eval_enclosure(fid, x, prec)
        out = round_h_decided(res, x, fid)
        if out is not None:
            return out
    raise UndecidableAtMaxPrecision(f"{fid}({x!r}) undecided at {config.max_precision} bits")


# --- split constants for output compensation --------------------------------

_CONST_EXPR = {
    "ln2": lambda prec, up: _directed(gmpy2.log, gmpy2.mpfr(2), prec),
    "log10_2": lambda prec, up: _directed(gmpy2.log10, gmpy2.mpfr(2), prec),
}


def hi_lo_split(const_id: str) -> tuple[float, float]:
    """A constant as a (hi, lo) double pair: hi + lo carries ~106 bits."""
    lo_m, hi_m = _CONST_EXPR[const_id](160, False)
    exact_lo = _mpfr_to_fraction(lo_m)
    exact_hi = _mpfr_to_fraction(hi_m)
    t_h = exact_lo.numerator / exact_lo.denominator  # RN64
    rest_lo = exact_lo - Fraction(t_h)
    rest_hi = exact_hi - Fraction(t_h)
    t_l_lo = rest_lo.numerator / rest_lo.denominator
    t_l_hi = rest_hi.numerator / rest_hi.denominator
    if t_l_lo != t_l_hi:
        raise UndecidableAtMaxPrecision(f"hi/lo split of {const_id} ambiguous")
    return t_h, t_l_lo
