"""Radial part of the cyclic quiver for n = 1 and its twist by x^{ell sigma}."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import factorial

from .dunkl import DunklParams, dprime, spherical_power, symbol
from .opalg import Operator, RatFn, conjugate_by_monomial
from .scalars import ExponentExpr, ParamPoly, compute_a_b, compute_sigma_t

__all__ = [
    "EquivMonomial",
    "lift",
    "dpp_symbol",
    "dpp",
    "hc_identity_check",
    "dm_identity_check",
    "proportionality",
]


@dataclass(frozen=True)
class EquivMonomial:
    """Exponents r_0..r_{l-1} of A_{0,1}, ..., A_{l-1,0}."""

    exponents: tuple

    def restricted_degree(self) -> ExponentExpr:
        """Exponent of x after setting every A to x."""
        total = ExponentExpr(0)
        for r in self.exponents:
            total = total + r
        return total

    def differentiate(self):
        """Apply prod_i d/dA_i: returns (coefficient, new monomial)."""
        return list(self.exponents), EquivMonomial(tuple(r - 1 for r in self.exponents))


def _as_exp(v) -> ExponentExpr:
    return ExponentExpr.coerce(v)


def lift(m, C) -> EquivMonomial:
    """r_i = m/l - sigma + sum_{s<=i} C_s."""
    ell = len(C)
    m = _as_exp(m)
    sigma, _ = compute_sigma_t(C)
    base = m / ell - _as_exp(sigma)
    out = []
    partial = ExponentExpr(0)
    for v in C:
        partial = partial + _as_exp(ParamPoly.coerce(ell, v))
        out.append(base + partial)
    return EquivMonomial(tuple(out))


def dpp_symbol(C, var: str = "m") -> ParamPoly:
    """q(m) = prod_i r_i(m) as a polynomial in ``var``."""
    ell = len(C)
    q = ParamPoly.const(ell, 1)
    for r in lift(ExponentExpr.var(var), C).exponents:
        q = q * r.to_parampoly(ell)
    return q


def _falling_factorial_coeffs(q: ParamPoly, var: str, order: int) -> list[ParamPoly]:
    """gamma_j with q(m) = sum_j gamma_j m(m-1)...(m-j+1), by forward differences."""
    vals = [q.subs({var: j}) for j in range(order + 1)]
    coeffs = []
    for j in range(order + 1):
        diff = vals[0]
        vals = [vals[i + 1] - vals[i] for i in range(len(vals) - 1)]
        coeffs.append(diff * Fraction(1, factorial(j)))
    return coeffs


def dpp(C) -> Operator:
    """D'' as sum_j gamma_j x^{j-l} d^j, matching the symbol q on x^m."""
    ell = len(C)
    gam = _falling_factorial_coeffs(dpp_symbol(C), "m", ell)
    op = Operator.zero(1, ell)
    for j, g in enumerate(gam):
        if g.is_zero():
            continue
        coef = Operator.coefficient(RatFn(1, ell, {(j - ell,): g}))
        op = op + coef * Operator.partial(1, ell, 0, j)
    return op


def proportionality(p: ParamPoly, q: ParamPoly, var: str = "r"):
    """Return K with p = K*q exactly and K free of every variable, else None."""
    if q.is_zero():
        return None
    dq = q.degree(var)
    if p.degree(var) != dq:
        return None
    lead_p = p.coefficients_in(var)[dq]
    lead_q = q.coefficients_in(var)[dq]
    if not (lead_p.is_constant() and lead_q.is_constant()):
        return None
    K = lead_p.constant_value() / lead_q.constant_value()
    return K if (p - q * K).is_zero() else None


def _fraction_or_str(K):
    if K is None:
        return None
    return str(K.to_fraction()) if K.is_rational() else repr(K)


def hc_identity_check(params: DunklParams) -> dict:
    """Compare D' with x^{-l sigma} D'' x^{l sigma} on x^r; report the constant."""
    ell = params.ell
    C = params.C()
    sigma, t = compute_sigma_t(C)
    Dp = dprime(params).operator
    tw = conjugate_by_monomial(dpp(C), [_as_exp(t)])
    p_sym, _ = symbol(Dp)
    q_sym, _ = symbol(tw)
    K = proportionality(p_sym, q_sym)
    expected = params.convention.hc_constant(ell)
    return {
        "check": "hc",
        "ell": ell,
        "m": 1,
        "convention": params.convention.as_dict(),
        "dprime_symbol": repr(p_sym),
        "twisted_symbol": repr(q_sym),
        "proportionality_constant": _fraction_or_str(K),
        "expected_constant": str(expected),
        "status": "PASS" if K is not None else "FAIL",
    }


def dm_symbol(m: int, C, var: str = "M") -> ParamPoly:
    """Symbol of prod_i (d/dA_i)^m on lifts of x^M, by iterated differentiation."""
    ell = len(C)
    mono = lift(ExponentExpr.var(var), C)
    sym = ParamPoly.const(ell, 1)
    for j in range(m):
        factors, mono = mono.differentiate()
        for f in factors:
            sym = sym * f.to_parampoly(ell)
        # the differentiated monomial is again a lift, of x^{M - l(j+1)}
        expected = lift(ExponentExpr.var(var) - ell * (j + 1), C)
        if mono != expected:
            raise AssertionError("differentiated monomial is not a lift")
    return sym


def dm_identity_check(m: int, params: DunklParams) -> dict:
    """Twisted radial part of prod_i (d/dA_i)^m against Theta^sph_{0,c}(y^{l m}).

    For n = 1 the diagonal torus is one-dimensional, so the statement is
    checked directly; for general n it reduces coordinatewise.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    ell = params.ell
    C = params.C()
    _, t = compute_sigma_t(C)
    p0 = DunklParams(1, ell, k=0, c=params.c, convention=params.convention)
    sph = spherical_power(m, p0)
    p_sym, _ = symbol(sph)
    # twist: x^{-t} D x^{t} acts on x^r as the symbol at M = r + t
    q = dm_symbol(m, C, "M").subs({"M": ParamPoly.var(ell, "r") + t})
    K = proportionality(p_sym, q)
    expected = params.convention.hc_constant(ell) ** m
    return {
        "check": "dm",
        "ell": ell,
        "m": m,
        "convention": params.convention.as_dict(),
        "reduction": "n=1; general n reduces coordinatewise on the diagonal torus",
        "proportionality_constant": _fraction_or_str(K),
        "expected_constant": str(expected),
        "status": "PASS" if K is not None else "FAIL",
    }


def kernel_exponents_check(C) -> bool:
    """r_i(b_i) = 0 for each i."""
    _, b = compute_a_b(C)
    return all(lift(bi, C).exponents[i] == 0 for i, bi in enumerate(b))
