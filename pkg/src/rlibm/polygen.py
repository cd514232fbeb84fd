"""Piecewise polynomial generation from reduced constraint sets.

The counterexample-guided loop: sample constraints, solve an exact rational
LP for coefficients, round them to binary64, repair rounding fallout by
shrinking violated sample intervals one ulp at a time, then check the full
constraint set and feed violators back into the sample.  When a sub-domain
cannot be satisfied within budget, the whole domain is re-split into twice
as many sub-domains keyed by leading bits of the reduced input's binary64
pattern (one shift plus one mask at lookup time).
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .constraints import ConstraintSet
from .lp import DEFAULT_TIME_LIMIT, LPInfeasible, LPProblem, LPTimeout, solve_lp

__all__ = [
    "GenConfig",
    "GenerationFailure",
    "SampleOverflow",
    "RefineExhausted",
    "BudgetExhausted",
    "Polynomial",
    "SignedPiecewise",
    "PiecewisePoly",
    "powers_for",
    "eval_poly_scalar",
    "eval_poly_vector",
    "split_domain",
    "cegar_generate",
    "generate_piecewise",
]


class GenerationFailure(RuntimeError):
    """One sub-domain could not be satisfied; callers split further."""


class SampleOverflow(GenerationFailure):
    pass


class RefineExhausted(GenerationFailure):
    pass


class BudgetExhausted(RuntimeError):
    """No piecewise table within the degree/sub-domain budgets."""

    def __init__(self, msg, dump=None):
        super().__init__(msg)
        self.dump = dump


@dataclass(frozen=True)
class GenConfig:
    initial_sample: int = 512
    counterexample_batch: int = 256
    sample_threshold: int = 50_000
    tight_cap: int = 2048
    epsilon_ulps: float = 2.0
    lp_time_limit: float = DEFAULT_TIME_LIMIT
    max_refine: int = 200
    max_iterations: int = 1000


@dataclass(frozen=True)
class Polynomial:
    """Dense coefficients for the parity's monomials, low power first."""

    coeffs: tuple[float, ...]
    parity: str  # none | odd | even

    @property
    def degree(self) -> int:
        p = powers_for(self.parity, _budget_from_len(self.parity, len(self.coeffs)))
        return p[len(self.coeffs) - 1] if self.coeffs else 0


def _budget_from_len(parity: str, n: int) -> int:
    if parity == "none":
        return n - 1
    if parity == "odd":
        return 2 * n - 1
    return 2 * (n - 1)


def powers_for(parity: str, degree: int) -> tuple[int, ...]:
    if parity == "none":
        return tuple(range(degree + 1))
    if parity == "odd":
        return tuple(range(1, degree + 1, 2))
    if parity == "even":
        return tuple(range(0, degree + 1, 2))
    raise ValueError(parity)


def eval_poly_scalar(coeffs, parity: str, r: float) -> float:
    """Horner evaluation in binary64; the exact recipe the runtime uses."""
    if parity == "none":
        acc = 0.0
        for c in reversed(coeffs):
            acc = acc * r + c
        return acc
    s = r * r
    acc = 0.0
    for c in reversed(coeffs):
        acc = acc * s + c
    return acc * r if parity == "odd" else acc


def eval_poly_vector(coeffs, parity: str, r: np.ndarray) -> np.ndarray:
    if parity == "none":
        acc = np.zeros_like(r)
        for c in reversed(coeffs):
            acc = acc * r + c
        return acc
    s = r * r
    acc = np.zeros_like(r)
    for c in reversed(coeffs):
        acc = acc * s + c
    return acc * r if parity == "odd" else acc


def eval_table_vector(table: np.ndarray, parity: str, idx: np.ndarray, r: np.ndarray) -> np.ndarray:
    """Vector Horner with per-row coefficients gathered by sub-domain index."""
    ncoef = table.shape[1]
    if parity == "none":
        acc = np.zeros_like(r)
        for c in range(ncoef - 1, -1, -1):
            acc = acc * r + table[idx, c]
        return acc
    s = r * r
    acc = np.zeros_like(r)
    for c in range(ncoef - 1, -1, -1):
        acc = acc * s + table[idx, c]
    return acc * r if parity == "odd" else acc


# ---------------------------------------------------------------------------
# bit-pattern domain splitting


def split_domain(r_bits: np.ndarray, index_bits: int) -> tuple[int, np.ndarray]:
    """Group same-sign reduced inputs by the `index_bits` bits that follow
    their common bit prefix.  Returns (shift, group index per row)."""
    b_lo = int(r_bits.min())
    b_hi = int(r_bits.max())
    prefix_len = 64 - (b_lo ^ b_hi).bit_length()
    shift = max(0, 64 - prefix_len - index_bits)
    mask = (1 << index_bits) - 1
    idx = (r_bits >> np.uint64(shift)).astype(np.int64) & mask
    return shift, idx


# ---------------------------------------------------------------------------
# counterexample-guided generation for one sub-domain


@dataclass
class SubdomainReport:
    index: int
    size: int
    degree: int = -1
    iterations: int = 0
    sample_size: int = 0
    lp_seconds: float = 0.0
    outcome: str = "pending"


def _initial_sample_idx(n: int, tight: np.ndarray, cfg: GenConfig) -> np.ndarray:
    take = min(n, cfg.initial_sample)
    base = np.unique(np.linspace(0, n - 1, take).astype(np.int64))
    tight_idx = np.flatnonzero(tight)
    if len(tight_idx) > cfg.tight_cap:
        pick = np.linspace(0, len(tight_idx) - 1, cfg.tight_cap).astype(np.int64)
        tight_idx = tight_idx[pick]
    return np.union1d(base, tight_idx)


def tight_mask(lo: np.ndarray, hi: np.ndarray, v: np.ndarray, eps_ulps: float) -> np.ndarray:
    eps = eps_ulps * np.spacing(np.abs(v))
    return ((v - lo) < eps) | ((hi - v) < eps)


def _coeffs_to_floats(coeffs) -> tuple[float, ...]:
    import gmpy2

    out = []
    for c in coeffs:
        m = gmpy2.mpfr(c, precision=53)  # round-to-nearest rational -> binary64
        out.append(float(m))
    return tuple(out)


def cegar_generate(
    r: np.ndarray,
    lo: np.ndarray,
    hi: np.ndarray,
    v: np.ndarray,
    degree_budget: int,
    parity: str,
    cfg: GenConfig = GenConfig(),
    report: SubdomainReport | None = None,
    min_coeffs: int = 1,
) -> Polynomial:
    """Polynomial whose binary64 Horner evaluation lands inside [lo, hi] for
    every row; raises a GenerationFailure subclass when the budget is out."""
    n = len(r)
    assert n > 0
    full_powers = powers_for(parity, degree_budget)
    if not full_powers:
        raise GenerationFailure("empty power set for budget")
    # degenerate: all intervals share a point
    common_lo, common_hi = float(np.max(lo)), float(np.min(hi))
    if common_lo <= common_hi and parity != "odd":
        value = common_lo if common_lo != 0.0 else common_hi if common_hi != 0.0 else 0.0
        cand = Polynomial((value,), "none" if parity == "none" else parity)
        out = eval_poly_vector(cand.coeffs, cand.parity, r)
        if bool(np.all((lo <= out) & (out <= hi))):
            if report is not None:
                report.degree = 0
                report.outcome = "constant"
            return cand

    sample = _initial_sample_idx(n, tight_mask(lo, hi, v, cfg.epsilon_ulps), cfg)
    s_lo = lo[sample].copy()
    s_hi = hi[sample].copy()
    ncoef_min = min_coeffs
    lp_seconds = 0.0
    iterations = 0
    deadline = None

    while True:
        iterations += 1
        if iterations > cfg.max_iterations:
            raise GenerationFailure(f"no convergence in {cfg.max_iterations} iterations")
        # ascending-degree LP with refine: find float64 coefficients passing
        # the (possibly shrunken) sample in binary64 evaluation
        poly = None
        for ncoef in range(ncoef_min, len(full_powers) + 1):
            powers = full_powers[:ncoef]
            refine_lo = s_lo.copy()
            refine_hi = s_hi.copy()
            failed = False
            for _ in range(cfg.max_refine):
                t0 = time.perf_counter()
                try:
                    exact = solve_lp(
                        LPProblem.from_floats(r[sample], refine_lo, refine_hi, powers),
                        cfg.lp_time_limit,
                    )
                except LPInfeasible:
                    failed = True
                    lp_seconds += time.perf_counter() - t0
                    break
                lp_seconds += time.perf_counter() - t0
                coeffs = _coeffs_to_floats(exact)
                out = eval_poly_vector(coeffs, parity, r[sample])
                viol_lo = out < refine_lo
                viol_hi = out > refine_hi
                if not bool(viol_lo.any() or viol_hi.any()):
                    poly = Polynomial(coeffs, parity)
                    break
                # shrink the violated side of violated rows by one step
                refine_lo[viol_lo] = np.nextafter(refine_lo[viol_lo], np.inf)
                refine_hi[viol_hi] = np.nextafter(refine_hi[viol_hi], -np.inf)
                if bool((refine_lo > refine_hi).any()):
                    failed = True
                    break
            else:
                raise RefineExhausted(f"refine loop exceeded {cfg.max_refine} rounds")
            if poly is not None:
                ncoef_min = ncoef  # adding constraints never lowers the degree
                break
            if not failed:
                raise RefineExhausted("refine ended without a verdict")
        if poly is None:
            raise GenerationFailure(
                f"infeasible at degree budget {degree_budget} ({parity})"
            )
        # validate against the entire sub-domain
        out = eval_poly_vector(poly.coeffs, parity, r)
        bad = np.flatnonzero((out < lo) | (out > hi))
        if len(bad) == 0:
            if report is not None:
                report.degree = full_powers[len(poly.coeffs) - 1]
                report.iterations = iterations
                report.sample_size = len(sample)
                report.lp_seconds = lp_seconds
                report.outcome = "ok"
            return poly
        # add counterexamples: worst violator plus an even spread
        gap = np.maximum(lo[bad] - out[bad], out[bad] - hi[bad])
        picks = [bad[int(np.argmax(gap))]]
        if len(bad) > 1:
            spread = bad[np.unique(np.linspace(0, len(bad) - 1, cfg.counterexample_batch).astype(np.int64))]
            picks = np.union1d(np.array(picks, dtype=np.int64), spread)
        new_sample = np.union1d(sample, picks)
        if len(new_sample) > cfg.sample_threshold:
            raise SampleOverflow(
                f"sample would reach {len(new_sample)} > {cfg.sample_threshold}"
            )
        added = np.setdiff1d(new_sample, sample)
        # rebuild sample bound arrays, keeping prior shrinks where rows persist
        keep_pos = np.searchsorted(new_sample, sample)
        ns_lo = lo[new_sample].copy()
        ns_hi = hi[new_sample].copy()
        ns_lo[keep_pos] = s_lo
        ns_hi[keep_pos] = s_hi
        sample, s_lo, s_hi = new_sample, ns_lo, ns_hi
        del added, deadline


# ---------------------------------------------------------------------------
# piecewise assembly


@dataclass(frozen=True)
class SignedPiecewise:
    """Coefficient table for one sign of the reduced domain."""

    shift: int
    index_bits: int
    parity: str
    table: np.ndarray  # (2**index_bits, ncoef) float64, zero-padded rows

    def lookup(self, r_bits: int) -> np.ndarray:
        idx = (r_bits >> self.shift) & ((1 << self.index_bits) - 1)
        return self.table[idx]


@dataclass(frozen=True)
class PiecewisePoly:
    inner: str
    pos: SignedPiecewise | None
    neg: SignedPiecewise | None

    def eval_scalar(self, r: float) -> float:
        from .formats import f64_to_bits

        b = f64_to_bits(r)
        side = self.neg if (b >> 63) else self.pos
        assert side is not None, "reduced input on a side with no table"
        row = side.lookup(b)
        return eval_poly_scalar(row, side.parity, r)


def generate_piecewise(
    cs: ConstraintSet,
    degree_budget: int,
    parity: str,
    max_split_bits: int,
    cfg: GenConfig = GenConfig(),
    reports: list | None = None,
    progress=None,
) -> PiecewisePoly:
    from .formats import f64_to_bits

    r_bits = np.array([f64_to_bits(float(x)) for x in cs.r], dtype=np.uint64)
    neg_mask = (r_bits >> np.uint64(63)).astype(bool)
    sides = {}
    for name, mask in (("pos", ~neg_mask), ("neg", neg_mask)):
        if not bool(mask.any()):
            sides[name] = None
            continue
        sides[name] = _generate_side(
            name,
            cs.r[mask],
            r_bits[mask],
            cs.lo[mask],
            cs.hi[mask],
            cs.v[mask],
            degree_budget,
            parity,
            max_split_bits,
            cfg,
            reports,
            progress,
        )
    return PiecewisePoly(cs.inner, sides["pos"], sides["neg"])


def _generate_side(
    side_name,
    r,
    r_bits,
    lo,
    hi,
    v,
    degree_budget,
    parity,
    max_split_bits,
    cfg,
    reports,
    progress,
) -> SignedPiecewise:
    full_powers = powers_for(parity, degree_budget)
    ncoef_full = len(full_powers)
    last_failure = None
    for index_bits in range(0, max_split_bits + 1):
        shift, idx = split_domain(r_bits, index_bits)
        ngroups = 1 << index_bits
        table = np.zeros((ngroups, ncoef_full))
        group_reports = []
        ok = True
        min_coeffs = 1
        for g in range(ngroups):
            sel = np.flatnonzero(idx == g)
            rep = SubdomainReport(index=g, size=len(sel))
            group_reports.append(rep)
            if len(sel) == 0:
                rep.outcome = "empty"
                continue
            try:
                poly = cegar_generate(
                    r[sel], lo[sel], hi[sel], v[sel],
                    degree_budget, parity, cfg, rep, min_coeffs=1,
                )
            except (GenerationFailure, LPTimeout) as exc:
                rep.outcome = f"failed: {exc}"
                last_failure = exc
                ok = False
                break
            table[g, : len(poly.coeffs)] = poly.coeffs
            if progress is not None:
                progress(side_name, index_bits, g, ngroups, rep)
        if ok:
            if reports is not None:
                reports.extend(group_reports)
            ncoef_used = int(np.max(np.nonzero(np.any(table != 0.0, axis=0))[0])) + 1 if table.any() else 1
            return SignedPiecewise(shift, index_bits, parity, table[:, :ncoef_used])
        del min_coeffs
    raise BudgetExhausted(
        f"{side_name}: no table within 2^{max_split_bits} sub-domains "
        f"(degree <= {degree_budget}, {parity}); last: {last_failure}",
        dump={"r": r, "lo": lo, "hi": hi},
    )
