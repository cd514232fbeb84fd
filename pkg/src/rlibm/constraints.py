"""Deduction of reduced intervals and their merge into constraint sets.

Given an input x with rounding interval [l, h], the reduced constraint for
x's reduced input r is the widest box of inner-function values around the
correctly rounded seeds (v_1, .., v_k) such that output compensation stays
inside [l, h].  Widening moves all inner values in lockstep, one binary64
step at a time (implemented as a binary search over the step count, valid
because output compensation is monotone in each inner value).  Constraints
for equal r merge by interval intersection.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .formats import f64_from_ordinal, f64_ordinal
from .reduction import (
    PipelineSpec,
    ReducedInput,
    inner_fids,
    inner_round_h,
    make_oc_fast,
    oc_direction,
    reduce_one,
)

__all__ = [
    "RangeReductionInfeasible",
    "EmptyIntersection",
    "DeducedConstraint",
    "Deducer",
    "ConstraintAccumulator",
    "ConstraintSet",
]

_MAX_ORD = f64_ordinal(math.inf)


class RangeReductionInfeasible(RuntimeError):
    """The correctly rounded seeds already miss the rounding interval."""


class EmptyIntersection(RuntimeError):
    """Two inputs with the same reduced input demand disjoint intervals."""


@dataclass(frozen=True)
class DeducedConstraint:
    r: float
    ctx: tuple
    seeds: tuple[float, ...]
    lo: tuple[float, ...]
    hi: tuple[float, ...]


class Deducer:
    """Per-(spec, tables) deduction engine with cached inner-oracle seeds."""

    def __init__(self, spec: PipelineSpec, tables: dict):
        self.spec = spec
        self.tables = tables
        self.inner = inner_fids(spec)
        self.oc = make_oc_fast(spec, tables)
        self._seed_cache: dict[int, tuple[float, ...]] = {}

    def seeds_for(self, r: float) -> tuple[float, ...]:
        from .formats import f64_to_bits

        key = f64_to_bits(r)
        got = self._seed_cache.get(key)
        if got is None:
            got = tuple(inner_round_h(fid, r) for fid in self.inner)
            self._seed_cache[key] = got
        return got

    def deduce(self, x: float, lo: float, hi: float) -> DeducedConstraint:
        red = reduce_one(self.spec, self.tables, x)
        seeds = self.seeds_for(red.r)
        oc = self.oc
        ctx = red.ctx
        out0 = oc(seeds, ctx)
        if not (lo <= out0 <= hi):
            raise RangeReductionInfeasible(
                f"{self.spec.fid}/{self.spec.fmt_name}: x={x!r} oc(seeds)={out0!r} "
                f"outside [{lo!r}, {hi!r}]"
            )
        ords = tuple(f64_ordinal(v) for v in seeds)

        def ok_down(t: int) -> bool:
            vv = tuple(f64_from_ordinal(max(o - t, -_MAX_ORD)) for o in ords)
            out = oc(vv, ctx)
            return lo <= out <= hi

        def ok_up(t: int) -> bool:
            vv = tuple(f64_from_ordinal(min(o + t, _MAX_ORD)) for o in ords)
            out = oc(vv, ctx)
            return lo <= out <= hi

        t_dn = _max_true(ok_down)
        t_up = _max_true(ok_up)
        lo_vals = tuple(f64_from_ordinal(o - t_dn) for o in ords)
        hi_vals = tuple(f64_from_ordinal(o + t_up) for o in ords)
        return DeducedConstraint(red.r, ctx, seeds, lo_vals, hi_vals)

    def deduce_stepwise(self, x: float, lo: float, hi: float, cap: int = 1 << 22) -> DeducedConstraint:
        """One-ulp-at-a-time reference widening (test oracle for deduce)."""
        red = reduce_one(self.spec, self.tables, x)
        seeds = self.seeds_for(red.r)
        ctx = red.ctx
        out0 = self.oc(seeds, ctx)
        if not (lo <= out0 <= hi):
            raise RangeReductionInfeasible(str(x))
        ords = tuple(f64_ordinal(v) for v in seeds)
        t = 0
        while t < cap:
            vv = tuple(f64_from_ordinal(o - (t + 1)) for o in ords)
            if not (lo <= self.oc(vv, ctx) <= hi):
                break
            t += 1
        t_dn = t
        t = 0
        while t < cap:
            vv = tuple(f64_from_ordinal(o + (t + 1)) for o in ords)
            if not (lo <= self.oc(vv, ctx) <= hi):
                break
            t += 1
        t_up = t
        return DeducedConstraint(
            red.r,
            ctx,
            seeds,
            tuple(f64_from_ordinal(o - t_dn) for o in ords),
            tuple(f64_from_ordinal(o + t_up) for o in ords),
        )


def _max_true(ok) -> int:
    """Largest t >= 0 with ok(t), for ok monotone true->false; ok(0) holds."""
    if not ok(1):
        return 0
    t = 1
    while ok(t * 2):
        t *= 2
        if t >= (1 << 62):
            break
    a, b = t, min(t * 2, 1 << 62)
    # ok(a) true; find the edge in (a, b]
    while a + 1 < b:
        mid = (a + b) // 2
        if ok(mid):
            a = mid
        else:
            b = mid
    return a if not ok(b) else b


@dataclass
class ConstraintSet:
    """Merged constraints for one inner function, sorted by reduced input."""

    inner: str
    r: np.ndarray  # float64
    lo: np.ndarray
    hi: np.ndarray
    v: np.ndarray  # correctly rounded seed per r

    def __len__(self) -> int:
        return len(self.r)


class ConstraintAccumulator:
    """Merges deduced constraints keyed by the bit pattern of r."""

    def __init__(self, inner: tuple[str, ...]):
        self.inner = inner
        self._by_r: dict[int, list] = {}

    def add(self, c: DeducedConstraint, witness=None) -> None:
        from .formats import f64_to_bits

        key = f64_to_bits(c.r)
        row = self._by_r.get(key)
        if row is None:
            self._by_r[key] = [c.r, list(c.lo), list(c.hi), list(c.seeds), witness]
            return
        _, los, his, _, first_witness = row
        for i in range(len(self.inner)):
            lo = max(los[i], c.lo[i])
            hi = min(his[i], c.hi[i])
            if lo > hi:
                raise EmptyIntersection(
                    f"{self.inner[i]}: r={c.r!r} from {first_witness!r} vs {witness!r}"
                )
            los[i] = lo
            his[i] = hi

    def finish(self) -> list[ConstraintSet]:
        items = sorted(self._by_r.items())
        out = []
        n = len(items)
        for i, inner in enumerate(self.inner):
            r = np.empty(n)
            lo = np.empty(n)
            hi = np.empty(n)
            v = np.empty(n)
            for k, (_, row) in enumerate(items):
                r[k] = row[0]
                lo[k] = row[1][i]
                hi[k] = row[2][i]
                v[k] = row[3][i]
            order = np.argsort(r, kind="stable")
            out.append(ConstraintSet(inner, r[order], lo[order], hi[order], v[order]))
        return out
