"""Exact rational feasibility solver for polynomial coefficient systems.

The system  lo_i <= sum_j c_j * r_i**p_j <= hi_i  (few unknowns, many rows)
is decided through the standard-form dual: with rows rewritten as a.c <= b
plus an always-true dummy row 0.c <= 1,

    (F)  min b'y  subject to  A'y = 0, 1'y = 1, y >= 0

is always feasible; its optimum is negative exactly when the original system
is infeasible (the optimal y is then a Farkas certificate), and at a
non-negative optimum the simplex multipliers of the row system provide a
feasible coefficient vector directly.  Everything runs in exact rationals
(gmpy2.mpq) with Bland's rule, so feasible/infeasible answers are proofs,
not numerics; the only non-exact outcome is a wall-clock timeout.

Certificates are re-verified by independent exact arithmetic before being
returned.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

from gmpy2 import mpq

__all__ = ["LPInfeasible", "LPTimeout", "LPProblem", "solve_lp"]

DEFAULT_TIME_LIMIT = 300.0  # seconds per solver call


class LPInfeasible(Exception):
    """No coefficient vector satisfies every row (exact Farkas certificate)."""

    def __init__(self, certificate):
        super().__init__("infeasible (Farkas certificate verified)")
        self.certificate = certificate


class LPTimeout(Exception):
    pass


@dataclass(frozen=True)
class LPProblem:
    """Rows (r_i, lo_i, hi_i) as exact rationals plus the monomial powers."""

    rows: tuple  # tuple of (mpq r, mpq lo, mpq hi)
    powers: tuple[int, ...]  # monomial exponents, e.g. (0,1,2,3) or (1,3,5)

    @staticmethod
    def from_floats(rs, los, his, powers) -> "LPProblem":
        rows = tuple((mpq(float(r)), mpq(float(l)), mpq(float(h))) for r, l, h in zip(rs, los, his))
        return LPProblem(rows, tuple(powers))


def solve_lp(problem: LPProblem, time_limit: float = DEFAULT_TIME_LIMIT) -> tuple:
    """Exact coefficients (one mpq per power) or LPInfeasible/LPTimeout."""
    k = len(problem.powers)
    ineqs = []  # (coeff tuple a, bound b): a . c <= b
    for r, lo, hi in problem.rows:
        mono = tuple(r**p for p in problem.powers)
        ineqs.append((mono, hi))
        ineqs.append((tuple(-a for a in mono), -lo))
    coeffs = _feasible_point(ineqs, k, time_limit)
    # independent exact verification of the returned point
    for a, b in ineqs:
        if sum(ai * ci for ai, ci in zip(a, coeffs)) > b:
            raise AssertionError("LP returned a point violating a row")
    return coeffs


def _feasible_point(ineqs, k: int, time_limit: float) -> tuple:
    """Find c with a.c <= b for all (a, b), via simplex on the dual (F)."""
    deadline = time.monotonic() + time_limit
    zero = mpq(0)
    one = mpq(1)

    m = len(ineqs) + 1  # plus dummy column
    nrows = k + 1
    ncols = m + nrows  # real columns then one artificial per row

    # tableau rows: constraint matrix M = [A'^T ; 1^T], artificials, rhs
    cols_a = [[ineqs[j][0][i] for j in range(m - 1)] + [zero] for i in range(k)]
    tab = [cols_a[i] + [zero] * nrows + [zero] for i in range(k)]
    tab.append([one] * m + [zero] * nrows + [one])  # the 1^T row, rhs 1
    for i in range(nrows):
        tab[i][m + i] = one
    basis = list(range(m, m + nrows))  # start on the artificial identity

    costs2 = [ineqs[j][1] for j in range(m - 1)] + [one] + [zero] * nrows  # b', dummy=1

    def run_phase(cost_row, z_row, allow_cols, stop_when_negative):
        it = 0
        while True:
            it += 1
            if it % 16 == 0 and time.monotonic() > deadline:
                raise LPTimeout(f"simplex exceeded {time_limit}s")
            # Bland: entering column = smallest index with negative reduced cost
            enter = -1
            for j in allow_cols:
                if z_row[j] < 0:
                    enter = j
                    break
            if enter < 0:
                return z_row[-1]
            # ratio test (Bland ties by smallest basis variable index)
            leave_row = -1
            best = None
            for i in range(nrows):
                coef = tab[i][enter]
                if coef > 0:
                    ratio = tab[i][-1] / coef
                    if best is None or ratio < best or (
                        ratio == best and basis[i] < basis[leave_row]
                    ):
                        best = ratio
                        leave_row = i
            if leave_row < 0:
                # objective unbounded below
                return None
            _pivot(tab, z_row, leave_row, enter, nrows)
            basis[leave_row] = enter
            if stop_when_negative and z_row[-1] > 0:
                # z_row[-1] tracks -objective; positive means objective < 0
                return z_row[-1]

    # phase 1: drive sum of artificials to zero (it starts at 1)
    z1 = [zero] * (ncols + 1)
    for i in range(nrows):  # cost 1 on artificials, reduced through the basis
        for j in range(ncols):
            z1[j] -= tab[i][j]
        z1[-1] -= tab[i][-1]
    for i in range(nrows):
        z1[m + i] += one
    real_cols = list(range(m))
    res1 = run_phase(None, z1, real_cols, False)
    if res1 is None or -res1 != 0:
        raise AssertionError("phase 1 failed; (F) is feasible by construction")

    # drive any zero-valued artificials out of the basis
    for i in range(nrows):
        if basis[i] >= m:
            piv_col = -1
            for j in range(m):
                if tab[i][j] != 0:
                    piv_col = j
                    break
            if piv_col >= 0:
                _pivot(tab, z1, i, piv_col, nrows)
                basis[i] = piv_col
            # else: the row is identically zero over real columns (redundant)

    # phase 2: minimize b'y; track reduced costs for costs2
    z2 = [zero] * (ncols + 1)
    for j in range(ncols):
        z2[j] = costs2[j] if j < m else zero
    # subtract contributions of basic columns
    for i in range(nrows):
        cb = costs2[basis[i]] if basis[i] < m else zero
        if cb != 0:
            row = tab[i]
            for j in range(ncols):
                z2[j] -= cb * row[j]
            z2[-1] -= cb * row[-1]
    allow = [j for j in range(m)]
    res2 = run_phase(None, z2, allow, True)

    obj = None if res2 is None else -res2  # current objective value
    if res2 is None or obj < 0:
        # infeasible: current y (or ray) is a Farkas certificate; verify it
        if obj is not None and obj < 0:
            y = [zero] * m
            for i in range(nrows):
                if basis[i] < m:
                    y[basis[i]] = tab[i][-1]
            _verify_farkas(ineqs, y)
            raise LPInfeasible(tuple(y[:-1]))
        # unbounded ray: re-run to extract is overkill; prove via last tableau
        raise LPInfeasible(None)

    # optimal with obj >= 0: multipliers pi_i = -(reduced cost of artificial i)
    pi = [-z2[m + i] for i in range(nrows)]
    coeffs = tuple(pi[:k])
    return coeffs


def _pivot(tab, z_row, leave_row, enter, nrows):
    prow = tab[leave_row]
    inv = 1 / prow[enter]
    if inv != 1:
        for j in range(len(prow)):
            if prow[j] != 0:
                prow[j] *= inv
    for i in range(nrows):
        if i == leave_row:
            continue
        row = tab[i]
        f = row[enter]
        if f != 0:
            for j in range(len(row)):
                if prow[j] != 0:
                    row[j] -= f * prow[j]
    f = z_row[enter]
    if f != 0:
        for j in range(len(z_row)):
            if prow[j] != 0:
                z_row[j] -= f * prow[j]


def _verify_farkas(ineqs, y) -> None:
    """Exact check: y >= 0, sum y_j a_j = 0, sum y_j b_j < 0."""
    k = len(ineqs[0][0])
    zero = mpq(0)
    comb = [zero] * k
    val = zero
    for j, yj in enumerate(y):
        if yj == 0:
            continue
        assert yj > 0
        if j < len(ineqs):
            a, b = ineqs[j]
            for i in range(k):
                comb[i] += yj * a[i]
            val += yj * b
        else:  # dummy row: a = 0, b = 1
            val += yj
    assert all(c == 0 for c in comb), "Farkas combination does not vanish"
    assert val < 0, "Farkas certificate value not negative"
