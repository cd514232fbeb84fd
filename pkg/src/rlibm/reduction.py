"""Range reduction, output compensation and lookup-table construction.

Six families are implemented; each maps an input x (decoded binary64,
already past the special cases) to a reduced input r plus integer context,
and reconstructs f(x) in binary64 from approximations of one or two inner
functions of r.  Every binary64 operation and its order is pinned here:
the generator deduces interval freedom through *these exact* computations,
so the runtime evaluates the same code paths bit for bit.

Inner functions per family:
    log_a   -> log_a(1 + r)                     (one polynomial)
    a**x    -> a**r                             (one polynomial)
    sinpi   -> sinpi(r), cospi(r)               (two, shared with cospi)
    cospi   -> sinpi(r), cospi(r)
    sinh    -> sinh(r), cosh(r)                 (two, shared with cosh)
    cosh    -> sinh(r), cosh(r)
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import oracle
from .formats import TargetFormat, f64_to_bits, get_format

__all__ = [
    "PipelineSpec",
    "ReducedInput",
    "build_tables",
    "reduce_one",
    "oc_eval",
    "oc_direction",
    "inner_fids",
    "inner_round_h",
    "check_monotone",
    "NonMonotonicOC",
]

INV_512 = 1.0 / 512.0

FAMILY_OF = {
    "ln": "log",
    "log2": "log",
    "log10": "log",
    "exp": "exp",
    "exp2": "exp",
    "exp10": "exp",
    "sinpi": "sinpi",
    "cospi": "cospi",
    "sinh": "sinh",
    "cosh": "cosh",
}

_LOG_INNER = {"ln": "ln1p", "log2": "log21p", "log10": "log101p"}
_EXP_BASE_LOG2 = {"exp": "ln", "exp2": None, "exp10": "log10"}  # log_a(2) source


class NonMonotonicOC(RuntimeError):
    """Output compensation failed the empirical monotonicity check."""


@dataclass(frozen=True)
class PipelineSpec:
    """Everything needed to generate one function for one format."""

    fid: str
    fmt_name: str
    seg_bits: int = 7  # log family: F table has 2**seg_bits entries
    grid_bits: int = 6  # exp/sinh/cosh: j grid is 2**grid_bits per octave step
    degrees: tuple[int, ...] = (8,)  # max degree budget per inner function
    parities: tuple[str, ...] = ("none",)
    max_split_bits: int = 8  # piecewise tables no larger than 2**this
    oc_order: str = ""  # evaluation-order recipe; family default when empty
    pi_x_band_bits: int = 0  # 32-bit trig: scanned near-zero cutoff (f64 bits)

    @property
    def family(self) -> str:
        return FAMILY_OF[self.fid]

    @property
    def fmt(self) -> TargetFormat:
        return get_format(self.fmt_name)

    @property
    def order(self) -> str:
        if self.oc_order:
            return self.oc_order
        return _DEFAULT_ORDER[self.fid]

    def inner(self) -> tuple[str, ...]:
        return inner_fids(self)


# default output-compensation evaluation orders (float flavors); posit
# presets override per function where the appendix uses a different order
_DEFAULT_ORDER = {
    "ln": "sum_then_nc",  # (P + logF) + n*ln2
    "log2": "sum_then_n",  # (P + logF) + n
    "log10": "split_nhl",  # ((P + n*t_l) + logF) + n*t_h
    "exp": "scale",
    "exp2": "scale",
    "exp10": "scale",
    "sinpi": "trig",
    "cospi": "trig",
    "sinh": "hyperbolic",
    "cosh": "hyperbolic",
}


@dataclass(frozen=True)
class ReducedInput:
    r: float
    ctx: tuple


def inner_fids(spec: PipelineSpec) -> tuple[str, ...]:
    fam = spec.family
    if fam == "log":
        return (_LOG_INNER[spec.fid],)
    if fam == "exp":
        return (spec.fid,)
    if fam in ("sinpi", "cospi"):
        return ("sinpi", "cospi")
    return ("sinh", "cosh")


def inner_round_h(inner: str, r: float) -> float:
    return oracle.oracle_round_h(inner, r)


# ---------------------------------------------------------------------------
# table construction


def _rn64(enc_fn, schedule=(128, 192, 256, 400)) -> float:
    for prec in schedule:
        lo, hi = enc_fn(prec)
        a, b = float(lo), float(hi)
        if a == b:
            return a
    raise oracle.UndecidableAtMaxPrecision("table entry undecided at 400 bits")


def _enc_fid(fid: str, x: float):
    def enc(prec):
        res = oracle.eval_enclosure(fid, x, prec)
        if res.exact is not None:
            v = res.exact.numerator / res.exact.denominator
            return v, v
        return res.lo, res.hi

    return enc


def _enc_log_of_fraction(base_fid: str, num: int, den: int):
    import gmpy2

    op = {"ln": gmpy2.log, "log2": gmpy2.log2, "log10": gmpy2.log10}[base_fid]

    def enc(prec):
        with gmpy2.context(precision=prec, round=gmpy2.RoundDown):
            lo = op(gmpy2.mpq(num, den))
        with gmpy2.context(precision=prec, round=gmpy2.RoundUp):
            hi = op(gmpy2.mpq(num, den))
        return lo, hi

    return enc


def _enc_sinh_cosh_kln2(which: str, k_num: int, k_den: int):
    """Enclosure of sinh/cosh((k_num/k_den) * ln2); both increasing for x>0."""
    import gmpy2

    op = gmpy2.sinh if which == "sinh" else gmpy2.cosh

    def enc(prec):
        if k_num == 0:
            z = gmpy2.mpfr(0 if which == "sinh" else 1)
            return z, z
        with gmpy2.context(precision=prec, round=gmpy2.RoundDown):
            lo = op(gmpy2.log(gmpy2.mpfr(2)) * gmpy2.mpq(k_num, k_den))
        with gmpy2.context(precision=prec, round=gmpy2.RoundUp):
            hi = op(gmpy2.log(gmpy2.mpfr(2)) * gmpy2.mpq(k_num, k_den))
        return lo, hi

    return enc


def _sinh_k_max(spec: PipelineSpec, special_table) -> int:
    """Largest k the reduction can produce given the saturation cutoffs."""
    from .special import SpecialRule  # noqa: F401  (type only)
    from .formats import bits_to_f64

    hi = None
    for rule in special_table:
        if rule.pred in ("ge", "abs_ge") and rule.action == "const":
            hi = bits_to_f64(rule.t1_bits)
    assert hi is not None, "sinh/cosh special table lacks a saturation cutoff"
    c2 = _rn64(_enc_log_of_fraction("ln", 2, 1))  # ln2
    # mirror the runtime computation conservatively: one extra slot of slack
    return int(hi / c2 * (1.0 + 2e-16)) + 2


def build_tables(spec: PipelineSpec, special_table=None) -> dict[str, np.ndarray]:
    """Oracle-correct binary64 tables and constants for a pipeline."""
    fam = spec.family
    out: dict[str, np.ndarray] = {}
    if fam == "log":
        segs = 1 << spec.seg_bits
        base = spec.fid
        logf = np.empty(segs)
        recip = np.empty(segs)
        for j in range(segs):
            logf[j] = 0.0 if j == 0 else _rn64(_enc_log_of_fraction(base, segs + j, segs))
            recip[j] = _rn64_of_fraction(segs, segs + j)
        out["log_f"] = logf
        out["recip_f"] = recip
        if spec.order == "sum_then_nc":
            out["c_h"] = np.array([_const_hi(spec.fid)])
        elif spec.order == "split_nhl":
            th, tl = _const_split(spec.fid)
            out["c_h"] = np.array([th])
            out["c_l"] = np.array([tl])
    elif fam == "exp":
        grid = 1 << spec.grid_bits
        tab = np.empty(grid)
        for j in range(grid):
            tab[j] = _rn64(_enc_fid("exp2", j / grid))
        out["pow2_j"] = tab
        c1, c2 = _exp_constants(spec)
        out["c1"] = np.array([c1])
        out["c2"] = np.array([c2])
    elif fam in ("sinpi", "cospi"):
        count = 257 if fam == "cospi" else 256
        sin_n = np.empty(count)
        cos_n = np.empty(count)
        for n in range(count):
            sin_n[n] = _rn64(_enc_fid("sinpi", n * INV_512))
            cos_n[n] = _rn64(_enc_fid("cospi", n * INV_512))
        out["sin_n"] = sin_n
        out["cos_n"] = cos_n
    else:  # sinh / cosh
        grid = 1 << spec.grid_bits
        k_max = _sinh_k_max(spec, special_table) if special_table is not None else 0
        if k_max <= 0:
            raise ValueError("sinh/cosh tables need the special table for k_max")
        sinh_k = np.empty(k_max + 1)
        cosh_k = np.empty(k_max + 1)
        for k in range(k_max + 1):
            sinh_k[k] = _rn64(_enc_sinh_cosh_kln2("sinh", k, 1))
            cosh_k[k] = _rn64(_enc_sinh_cosh_kln2("cosh", k, 1))
        sinh_j = np.empty(grid)
        cosh_j = np.empty(grid)
        for j in range(grid):
            sinh_j[j] = _rn64(_enc_sinh_cosh_kln2("sinh", j, grid))
            cosh_j[j] = _rn64(_enc_sinh_cosh_kln2("cosh", j, grid))
        out["sinh_k"] = sinh_k
        out["cosh_k"] = cosh_k
        out["sinh_j"] = sinh_j
        out["cosh_j"] = cosh_j
        c1, c2 = _hyper_constants(spec)
        out["c1"] = np.array([c1])
        out["c2"] = np.array([c2])
    return out


def _rn64_of_fraction(num: int, den: int) -> float:
    from fractions import Fraction

    q = Fraction(num, den)
    return q.numerator / q.denominator


def _const_hi(fid: str) -> float:
    if fid == "ln":
        return _rn64(_enc_log_of_fraction("ln", 2, 1))
    raise ValueError(fid)


def _const_split(fid: str) -> tuple[float, float]:
    if fid == "log10":
        return oracle.hi_lo_split("log10_2")
    if fid == "ln":
        return oracle.hi_lo_split("ln2")
    raise ValueError(fid)


def _exp_constants(spec: PipelineSpec) -> tuple[float, float]:
    """c1 = RN64(log_a(2)/grid), c2 = RN64(grid/log_a(2))."""
    import gmpy2

    grid = 1 << spec.grid_bits
    base = _EXP_BASE_LOG2[spec.fid]
    if base is None:  # exp2: log_2(2) = 1 exactly
        return 1.0 / grid, float(grid)

    def enc_c1(prec):
        op = gmpy2.log if base == "ln" else gmpy2.log10
        with gmpy2.context(precision=prec, round=gmpy2.RoundDown):
            lo = op(gmpy2.mpfr(2)) / grid
        with gmpy2.context(precision=prec, round=gmpy2.RoundUp):
            hi = op(gmpy2.mpfr(2)) / grid
        return lo, hi

    def enc_c2(prec):
        # division flips bound sides: lo needs the upper log, hi the lower
        op = gmpy2.log if base == "ln" else gmpy2.log10
        with gmpy2.context(precision=prec, round=gmpy2.RoundDown):
            log_lo = op(gmpy2.mpfr(2))
        with gmpy2.context(precision=prec, round=gmpy2.RoundUp):
            log_hi = op(gmpy2.mpfr(2))
        with gmpy2.context(precision=prec, round=gmpy2.RoundDown):
            lo = grid / log_hi
        with gmpy2.context(precision=prec, round=gmpy2.RoundUp):
            hi = grid / log_lo
        return lo, hi

    return _rn64(enc_c1), _rn64(enc_c2)


def _hyper_constants(spec: PipelineSpec) -> tuple[float, float]:
    import gmpy2

    grid = 1 << spec.grid_bits

    def enc_c1(prec):
        with gmpy2.context(precision=prec, round=gmpy2.RoundDown):
            lo = gmpy2.log(gmpy2.mpfr(2)) / grid
        with gmpy2.context(precision=prec, round=gmpy2.RoundUp):
            hi = gmpy2.log(gmpy2.mpfr(2)) / grid
        return lo, hi

    def enc_c2(prec):
        with gmpy2.context(precision=prec, round=gmpy2.RoundDown):
            log_lo = gmpy2.log(gmpy2.mpfr(2))
        with gmpy2.context(precision=prec, round=gmpy2.RoundUp):
            log_hi = gmpy2.log(gmpy2.mpfr(2))
        with gmpy2.context(precision=prec, round=gmpy2.RoundDown):
            lo = grid / log_hi
        with gmpy2.context(precision=prec, round=gmpy2.RoundUp):
            hi = grid / log_lo
        return lo, hi

    return _rn64(enc_c1), _rn64(enc_c2)


# ---------------------------------------------------------------------------
# reduction (scalar reference; the vectorized float32 lane mirrors this)


def reduce_one(spec: PipelineSpec, tables: dict, x: float) -> ReducedInput:
    fam = spec.family
    if fam == "log":
        return _reduce_log(spec, tables, x)
    if fam == "exp":
        return _reduce_exp(spec, tables, x)
    if fam == "sinpi":
        return _reduce_sinpi(x)
    if fam == "cospi":
        return _reduce_cospi(x)
    return _reduce_hyper(spec, tables, x)


def _reduce_log(spec: PipelineSpec, tables: dict, x: float) -> ReducedInput:
    assert x > 0 and math.isfinite(x)
    m, e = math.frexp(x)  # x = m * 2**e, m in [0.5, 1)
    m *= 2.0
    n = e - 1
    mant52 = f64_to_bits(m) & ((1 << 52) - 1)
    j = mant52 >> (52 - spec.seg_bits)
    f = m - (1.0 + j * (1.0 / (1 << spec.seg_bits)))  # exact (same grid)
    r = f * tables["recip_f"][j]
    return ReducedInput(r, (n, j))


def _reduce_exp(spec: PipelineSpec, tables: dict, x: float) -> ReducedInput:
    grid_bits = spec.grid_bits
    c1 = tables["c1"][0]
    c2 = tables["c2"][0]
    t = x * c2
    k = math.floor(t + 0.5)
    n = k >> grid_bits
    j = k & ((1 << grid_bits) - 1)
    r = x - k * c1
    return ReducedInput(r, (n, j))


def _reduce_sinpi(x: float) -> ReducedInput:
    i = math.floor(x * 0.5)
    jj = x - 2.0 * i  # exact, in [0, 2)
    k = int(jj)  # 0 or 1
    ell = jj - k  # exact, in [0, 1)
    lp = ell if ell <= 0.5 else 1.0 - ell  # exact (Sterbenz)
    u = lp * 512.0  # exact scale by 2**9
    n = int(u)
    if n == 256:  # lp == 0.5 exactly
        n = 255
    r = lp - n * INV_512  # exact
    s = -1.0 if k else 1.0
    return ReducedInput(r, (s, n))


def _reduce_cospi(x: float) -> ReducedInput:
    ax = abs(x)
    i = math.floor(ax * 0.5)
    jj = ax - 2.0 * i
    k = int(jj)
    ell = jj - k
    if ell <= 0.5:
        m, lp = 0, ell
    else:
        m, lp = 1, 1.0 - ell
    s = 1.0 if (k + m) % 2 == 0 else -1.0
    u = lp * 512.0
    n0 = int(u)
    # lp == 0.5 is a special case upstream (exact zero of cospi)
    assert n0 <= 255, (x, lp)
    if n0 == 0:
        return ReducedInput(lp, (s, 0, 0))
    q = lp - n0 * INV_512  # exact
    if q == 0.0:  # exact grid point: stay on it
        return ReducedInput(0.0, (s, n0, 1))
    r = INV_512 - q  # exact (Sterbenz)
    return ReducedInput(r, (s, n0 + 1, 1))


def _reduce_hyper(spec: PipelineSpec, tables: dict, x: float) -> ReducedInput:
    s = -1.0 if x < 0 else 1.0
    ax = abs(x)
    grid_bits = spec.grid_bits
    c1 = tables["c1"][0]
    c2 = tables["c2"][0]
    t = ax * c2
    q = int(t)
    r = ax - q * c1
    if r < 0.0:  # boundary fuzz: renormalize so r stays non-negative
        q -= 1
        r = ax - q * c1
    k = q >> grid_bits
    j = q & ((1 << grid_bits) - 1)
    return ReducedInput(r, (s, k, j))


# ---------------------------------------------------------------------------
# output compensation


def oc_eval(spec: PipelineSpec, tables: dict, values: tuple, ctx: tuple) -> float:
    fam = spec.family
    order = spec.order
    if fam == "log":
        (v,) = values
        n, j = ctx
        logf = tables["log_f"][j]
        if order == "sum_then_n":
            return (v + logf) + n
        if order == "sum_then_nc":
            return (v + logf) + n * tables["c_h"][0]
        if order == "split_nhl":
            return ((v + n * tables["c_l"][0]) + logf) + n * tables["c_h"][0]
        if order == "n_then_logf":
            return (v + n) + logf
        raise ValueError(order)
    if fam == "exp":
        (v,) = values
        n, j = ctx
        return math.ldexp(tables["pow2_j"][j] * v, n)
    if fam == "sinpi":
        vs, vc = values
        s, n = ctx
        return s * (tables["sin_n"][n] * vc + tables["cos_n"][n] * vs)
    if fam == "cospi":
        vs, vc = values
        s, n, branch = ctx
        if branch == 0:
            return s * vc
        return s * (tables["cos_n"][n] * vc + tables["sin_n"][n] * vs)
    # sinh / cosh
    vs, vc = values
    s, k, j = ctx
    sh = tables["sinh_k"][k] * tables["cosh_j"][j] + tables["cosh_k"][k] * tables["sinh_j"][j]
    ch = tables["cosh_k"][k] * tables["cosh_j"][j] + tables["sinh_k"][k] * tables["sinh_j"][j]
    if spec.fid == "sinh":
        return s * (sh * vc + ch * vs)
    return sh * vs + ch * vc


def make_oc_fast(spec: PipelineSpec, tables: dict):
    """Specialized oc_eval closure over plain python floats (hot scalar loops)."""
    fam = spec.family
    ldexp = math.ldexp
    if fam == "log":
        logf = [float(v) for v in tables["log_f"]]
        order = spec.order
        if order == "sum_then_n":
            return lambda values, ctx: (values[0] + logf[ctx[1]]) + ctx[0]
        if order == "sum_then_nc":
            ch = float(tables["c_h"][0])
            return lambda values, ctx: (values[0] + logf[ctx[1]]) + ctx[0] * ch
        if order == "split_nhl":
            ch = float(tables["c_h"][0])
            cl = float(tables["c_l"][0])
            return lambda values, ctx: (
                ((values[0] + ctx[0] * cl) + logf[ctx[1]]) + ctx[0] * ch
            )
        if order == "n_then_logf":
            return lambda values, ctx: (values[0] + ctx[0]) + logf[ctx[1]]
        raise ValueError(order)
    if fam == "exp":
        tab = [float(v) for v in tables["pow2_j"]]
        return lambda values, ctx: ldexp(tab[ctx[1]] * values[0], ctx[0])
    if fam == "sinpi":
        sn = [float(v) for v in tables["sin_n"]]
        cn = [float(v) for v in tables["cos_n"]]
        return lambda values, ctx: ctx[0] * (sn[ctx[1]] * values[1] + cn[ctx[1]] * values[0])
    if fam == "cospi":
        sn = [float(v) for v in tables["sin_n"]]
        cn = [float(v) for v in tables["cos_n"]]

        def oc_cospi(values, ctx):
            s, n, branch = ctx
            if branch == 0:
                return s * values[1]
            return s * (cn[n] * values[1] + sn[n] * values[0])

        return oc_cospi
    sk = [float(v) for v in tables["sinh_k"]]
    ck = [float(v) for v in tables["cosh_k"]]
    sj = [float(v) for v in tables["sinh_j"]]
    cj = [float(v) for v in tables["cosh_j"]]
    if spec.fid == "sinh":

        def oc_sinh(values, ctx):
            s, k, j = ctx
            sh = sk[k] * cj[j] + ck[k] * sj[j]
            ch = ck[k] * cj[j] + sk[k] * sj[j]
            return s * (sh * values[1] + ch * values[0])

        return oc_sinh

    def oc_cosh(values, ctx):
        _, k, j = ctx
        sh = sk[k] * cj[j] + ck[k] * sj[j]
        ch = ck[k] * cj[j] + sk[k] * sj[j]
        return sh * values[0] + ch * values[1]

    return oc_cosh


def oc_direction(spec: PipelineSpec, ctx: tuple) -> int:
    """+1 if OC is nondecreasing in every inner value, -1 if nonincreasing."""
    fam = spec.family
    if fam in ("log", "exp"):
        return 1
    if fam in ("sinpi", "cospi"):
        return 1 if ctx[0] > 0 else -1
    if spec.fid == "sinh":
        return 1 if ctx[0] > 0 else -1
    return 1  # cosh


# ---------------------------------------------------------------------------
# empirical monotonicity check (generation precondition)


def check_monotone(oc_fn, direction: int, value_sets, steps: int = 3):
    """Verify oc_fn moves consistently with `direction` when any one inner
    value steps up by an ulp.  Returns None, or a witness tuple."""
    from .formats import succ_h

    for values in value_sets:
        base = oc_fn(values)
        for i, v in enumerate(values):
            w = list(values)
            up = v
            for _ in range(steps):
                up = succ_h(up)
                w[i] = up
                out = oc_fn(tuple(w))
                if direction * (out - base) < 0:
                    return (values, i, up, base, out)
    return None


def oc_monotone_check(spec: PipelineSpec, tables: dict, samples) -> None:
    """Empirically verify OC monotonicity over sampled (r, ctx); raise on failure."""
    for red in samples:
        vals = tuple(inner_round_h(fid, red.r) for fid in inner_fids(spec))
        direction = oc_direction(spec, red.ctx)
        witness = check_monotone(
            lambda vv: oc_eval(spec, tables, vv, red.ctx), direction, [vals]
        )
        if witness is not None:
            raise NonMonotonicOC(f"{spec.fid}/{spec.fmt_name}: witness {witness!r}")
