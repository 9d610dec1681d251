"""Cyclotomic Bessel functions as eigen-series.

n = 1 uses the Frobenius recursion b_m p(l m) = lam^l b_{m-1}, where p is the
symbol of the spherical operator D'.  General n solves the joint eigen-system
degree by degree on monomial symmetric functions in x_i^l.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import permutations

import numpy as np

from .dunkl import DunklParams, build_dunkl
from .opalg import apply, symmetric_monomial, _partitions
from .scalars import CycRat, ParamPoly, c_from_C

__all__ = [
    "ResonanceError",
    "TruncationError",
    "RankDeficiencyError",
    "ResidualError",
    "SeriesN1",
    "InvariantExpansion",
    "Lambda",
    "kernel_roots",
    "dprime_symbol_value",
    "series_n1",
    "eval_n1",
    "series_multivariate",
    "eval_multivariate",
    "coefficients_csv_rows",
    "c_for_series",
]


class ResonanceError(ArithmeticError):
    """Some p(l m) vanishes: a logarithmic case."""


class TruncationError(ArithmeticError):
    def __init__(self, msg, suggested=None):
        super().__init__(msg)
        self.suggested = suggested


class RankDeficiencyError(np.linalg.LinAlgError):
    pass


class ResidualError(ArithmeticError):
    pass


def _is_exact(v) -> bool:
    return isinstance(v, (int, Fraction))


# ---------------------------------------------------------------------------
# n = 1


def kernel_roots(C) -> list:
    """a_i = -l * sum_{s<=i} C_s; the roots of the D' symbol."""
    ell = len(C)
    out, s = [], 0
    for v in C:
        s = s + v
        out.append(-ell * s)
    return out


def dprime_symbol_value(C, r):
    """p(r) = prod_i (r - a_i), the monic symbol of D' on x^r."""
    out = 1
    for a in kernel_roots(C):
        out = out * (r - a)
    return out


@dataclass
class SeriesN1:
    ell: int
    C: tuple
    lam: object
    coeffs: list
    M: int

    @property
    def exact(self) -> bool:
        return all(_is_exact(b) for b in self.coeffs)


def series_n1(ell: int, C, lam, M: int) -> SeriesN1:
    """Coefficients b_m of B(x) = sum_m b_m x^{l m}."""
    if len(C) != ell:
        raise ValueError("C must have length ell")
    exact = all(_is_exact(v) for v in C) and _is_exact(lam)
    C = tuple(Fraction(v) if exact else v for v in C)
    lam_l = (Fraction(lam) if exact else complex(lam)) ** ell
    coeffs = [Fraction(1) if exact else 1 + 0j]
    for m in range(1, M + 1):
        p = dprime_symbol_value(C, ell * m)
        if (p == 0) if exact else abs(p) < 1e-12:
            raise ResonanceError(f"p({ell * m}) = 0: logarithmic case")
        coeffs.append(coeffs[-1] * lam_l / p)
    return SeriesN1(ell, C, lam, coeffs, M)


def _tail_ratio(s: SeriesN1, y: float, M: int) -> float:
    """Upper bound on |b_{m+1} y| / |b_m| for all m >= M."""
    denom = 1.0
    for a in kernel_roots(s.C):
        gap = s.ell * (M + 1) - abs(complex(a))
        if gap <= 0:
            return math.inf
        denom *= gap
    return abs(complex(s.lam)) ** s.ell * y / denom


def eval_n1(s: SeriesN1, x, tol: float = 1e-12):
    """Horner evaluation; returns (value, tail_bound)."""
    y = complex(x) ** s.ell
    val = 0j
    for b in reversed(s.coeffs):
        val = val * y + complex(b)
    last = abs(complex(s.coeffs[-1])) * abs(y) ** s.M
    rho = _tail_ratio(s, abs(y), s.M)
    tail = 0.0 if last == 0 else (last * rho / (1 - rho) if rho < 1 else math.inf)
    if tail > tol * max(1.0, abs(val)):
        raise TruncationError(
            f"tail bound {tail:.3g} exceeds tolerance", suggested=_suggest_M(s, abs(y), tol)
        )
    return val, tail


def _suggest_M(s, y, tol):
    M = s.M
    while M < 100000:
        M *= 2
        rho = _tail_ratio(s, y, M)
        if rho < 0.5:
            break
    return M


# ---------------------------------------------------------------------------
# general n


@dataclass(frozen=True)
class Lambda:
    values: tuple
    ell: int

    @property
    def regular(self) -> bool:
        v = [complex(a) for a in self.values]
        if any(abs(a) < 1e-14 for a in v):
            return False
        pw = [a**self.ell for a in v]
        return all(abs(pw[i] - pw[j]) > 1e-12 for i in range(len(v)) for j in range(i + 1, len(v)))


@dataclass
class InvariantExpansion:
    n: int
    ell: int
    k: object
    c: tuple
    lam: tuple
    D_max: int
    exact: bool
    # degree -> {partition: coefficient}
    components: dict = field(default_factory=dict)
    residuals: dict = field(default_factory=dict)


def basis(n: int, ell: int, degree: int) -> list[tuple]:
    if degree % ell:
        return []
    return list(_partitions(degree // ell, n))


def _coord(poly: dict, part: tuple, n: int, ell: int):
    e = tuple(ell * v for v in part) + (0,) * (n - len(part))
    return poly.get(e)


def _operator_matrix(params: DunklParams, r: int, degree: int):
    """Matrix of sum_i D_i^{l r} from degree to degree - l r on the invariant basis."""
    n, ell = params.n, params.ell
    src = basis(n, ell, degree)
    dst = basis(n, ell, degree - ell * r)
    D = [build_dunkl(i, params) for i in range(n)]
    cols = []
    for part in src:
        p = symmetric_monomial(n, ell, part)
        total: dict = {}
        for i in range(n):
            q = p
            for _ in range(ell * r):
                q = apply(D[i], q)
            for e, v in q.items():
                total[e] = total[e] + v if e in total else v
        total = {e: v for e, v in total.items() if not v.is_zero()}
        col = []
        for part2 in dst:
            v = _coord(total, part2, n, ell)
            col.append(v.constant_value() if v is not None else CycRat.rational(ell, 0))
        # invariance: every monomial must sit in its symmetric orbit with equal weight
        for e, v in total.items():
            key = tuple(sorted((a // ell for a in e), reverse=True))
            key = tuple(a for a in key if a)
            if any(a % ell for a in e) or _coord(total, key, n, ell) != v:
                raise ResidualError("operator image left the invariant subspace")
        cols.append(col)
    return src, dst, cols


def _to_number(v: CycRat, exact: bool):
    if exact:
        return v
    return v.to_complex()


def _solve_exact(A, b, ell):
    """Solve A u = b over Q(zeta) with a full-column-rank check."""
    rows = [list(r) + [bv] for r, bv in zip(A, b)]
    ncol = len(A[0]) if A else 0
    piv_row = 0
    pivots = []
    for col in range(ncol):
        pr = next((i for i in range(piv_row, len(rows)) if not rows[i][col].is_zero()), None)
        if pr is None:
            raise RankDeficiencyError(f"rank deficient at column {col}")
        rows[piv_row], rows[pr] = rows[pr], rows[piv_row]
        inv = rows[piv_row][col].inverse()
        rows[piv_row] = [v * inv for v in rows[piv_row]]
        for i in range(len(rows)):
            if i != piv_row and not rows[i][col].is_zero():
                f = rows[i][col]
                rows[i] = [a - f * bb for a, bb in zip(rows[i], rows[piv_row])]
        pivots.append(piv_row)
        piv_row += 1
    for i in range(piv_row, len(rows)):
        if not rows[i][-1].is_zero():
            raise ResidualError("inconsistent eigen-system")
    return [rows[i][-1] for i in range(ncol)]


def series_multivariate(n: int, ell: int, k, c, lam, D_max: int, exact: bool | None = None,
                        rtol: float = 1e-10) -> InvariantExpansion:
    """Solve sum_i D_i^{l r} f_D = P_r(lam) f_{D - l r}, r = 1..n, for D <= D_max."""
    lam = tuple(lam)
    if len(lam) != n:
        raise ValueError("lam must have length n")
    if not Lambda(lam, ell).regular:
        raise ValueError("lam is not regular")
    if exact is None:
        exact = all(_is_exact(v) for v in lam) and _is_exact(k) and all(_is_exact(v) or isinstance(v, CycRat) for v in c)
    params = DunklParams(n, ell, k=k, c=list(c))
    if exact:
        lam_c = [CycRat.rational(ell, Fraction(v)) for v in lam]
    else:
        lam_c = [complex(v) for v in lam]

    def P(r):
        return sum((v ** (ell * r) for v in lam_c[1:]), lam_c[0] ** (ell * r))

    comps = {0: {(): CycRat.rational(ell, 1) if exact else 1 + 0j}}
    residuals = {}
    mats: dict = {}

    def mat(r, degree):
        key = (r, degree)
        if key not in mats:
            mats[key] = _operator_matrix(params, r, degree)
        return mats[key]

    def rows_for(r, degree):
        src, dst, cols = mat(r, degree)
        A = [[_to_number(cols[j][i], exact) for j in range(len(src))] for i in range(len(dst))]
        prev = comps.get(degree - ell * r, {})
        b = [P(r) * prev.get(part, 0) for part in dst]
        return A, b

    for degree in range(ell, D_max + 1, ell):
        A, b = [], []
        for r in range(1, n + 1):
            if degree - ell * r < 0:
                continue
            Ar, br = rows_for(r, degree)
            A += Ar
            b += br
        src = basis(n, ell, degree)
        if exact:
            sol = _solve_exact(A, b, ell)
        else:
            An = np.array(A, dtype=complex)
            bn = np.array(b, dtype=complex)
            if np.linalg.matrix_rank(An) < len(src):
                raise RankDeficiencyError(f"rank deficient at degree {degree}")
            sol, *_ = np.linalg.lstsq(An, bn, rcond=None)
            res = np.linalg.norm(An @ sol - bn)
            scale = max(np.linalg.norm(bn), 1e-300)
            if res > rtol * scale:
                raise ResidualError(f"residual {res:.3g} at degree {degree}")
        comps[degree] = dict(zip(src, sol))
        # overdetermination: r = n+1, n+2
        for r in (n + 1, n + 2):
            if degree - ell * r < 0:
                continue
            Ar, br = rows_for(r, degree)
            if exact:
                diff = [sum((a * s for a, s in zip(row, sol)), CycRat.rational(ell, 0)) - bv for row, bv in zip(Ar, br)]
                ok = all(d.is_zero() for d in diff)
                residuals[(degree, r)] = 0.0 if ok else float("inf")
                if not ok:
                    raise ResidualError(f"equation r={r} fails at degree {degree}")
            else:
                An, bn = np.array(Ar, dtype=complex), np.array(br, dtype=complex)
                res = float(np.linalg.norm(An @ np.array(sol) - bn))
                scale = max(float(np.linalg.norm(bn)), float(np.linalg.norm(np.abs(An) @ np.abs(sol))), 1e-300)
                residuals[(degree, r)] = res / scale
                if res > rtol * scale:
                    raise ResidualError(f"equation r={r} residual {res:.3g} at degree {degree}")
    return InvariantExpansion(n, ell, k, tuple(c), lam, D_max, exact, comps, residuals)


def _msym_value(part, xs, ell):
    exps = list(part) + [0] * (len(xs) - len(part))
    total = 0j
    for perm in set(permutations(exps)):
        v = 1 + 0j
        for xi, e in zip(xs, perm):
            v *= xi ** (ell * e)
        total += v
    return total


def eval_multivariate(e: InvariantExpansion, x, tol: float = 1e-10, check_symmetry: bool = True) -> complex:
    xs = [complex(v) for v in x]
    if len(xs) != e.n:
        raise ValueError("x must have length n")

    def value(pts):
        total, last = 0j, 0.0
        for degree in sorted(e.components):
            part_sum = sum(complex(_num(cf)) * _msym_value(p, pts, e.ell) for p, cf in e.components[degree].items())
            total += part_sum
            last = abs(part_sum)
        return total, last

    val, last = value(xs)
    if last > tol * max(1.0, abs(val)):
        raise TruncationError(f"last degree contributes {last:.3g}", suggested=2 * e.D_max)
    if check_symmetry:
        for perm in permutations(range(e.n)):
            v2, _ = value([xs[i] for i in perm])
            if abs(v2 - val) > 1e-10 * max(abs(val), 1e-300):
                raise AssertionError("expansion is not permutation invariant")
    return val


def _num(v):
    if isinstance(v, CycRat):
        return v.to_complex()
    return v


def coefficients_csv_rows(e: InvariantExpansion):
    """Rows (degree, partition, re, im)."""
    for degree in sorted(e.components):
        for part, cf in sorted(e.components[degree].items()):
            z = complex(_num(cf))
            yield degree, "-".join(str(p) for p in part) or "0", z.real, z.imag


def c_for_series(C, convention=None):
    """Parameters c that reproduce the given C under the active convention."""
    from .dunkl import FROZEN_CONVENTION

    conv = convention or FROZEN_CONVENTION
    return c_from_C(C, c_sign=conv.c_sign)
