"""The smash product Gamma_n x| D(t^reg).

An :class:`Operator` is a finite sum of normal-ordered terms

    f(x) * d^beta * g

with ``f`` a rational function whose denominator is a product of arrangement
factors ``x_a - zeta^m x_b`` (coordinate hyperplanes are absorbed as negative
Laurent exponents), ``d^beta`` a monomial in the partial derivatives, and ``g``
an element of Gamma_n = S_n x| (Z/ell)^n acting on the right.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from itertools import product as iproduct
from math import comb

from .scalars import CycRat, ExponentExpr, ParamPoly, zeta

__all__ = [
    "GroupElement",
    "Factor",
    "RatFn",
    "Operator",
    "InexactDivisionError",
    "ContractViolation",
    "UnsupportedDenominatorError",
    "laurent",
    "monomial",
    "group_act",
    "op_mul",
    "apply",
    "restrict_to_invariants",
    "apply_formal",
    "conjugate_by_monomial",
    "invariant_monomials",
]


class InexactDivisionError(ArithmeticError):
    """A numerator did not divide exactly by an arrangement factor."""


class ContractViolation(AssertionError):
    """A spot check of an operator contract failed."""


class UnsupportedDenominatorError(ValueError):
    """Formal action requested for an operator with arrangement denominators."""


# ---------------------------------------------------------------------------
# group elements


@dataclass(frozen=True)
class GroupElement:
    """x_i -> zeta^{twist[i]} * x_{perm[i]} as a ring automorphism."""

    perm: tuple[int, ...]
    twist: tuple[int, ...]
    ell: int

    @classmethod
    def identity(cls, n: int, ell: int) -> "GroupElement":
        return cls(tuple(range(n)), (0,) * n, ell)

    @classmethod
    def alpha(cls, i: int, n: int, ell: int, power: int = 1, sign: int = 1) -> "GroupElement":
        tw = [0] * n
        tw[i] = (sign * power) % ell
        return cls(tuple(range(n)), tuple(tw), ell)

    @classmethod
    def transposition(cls, i: int, j: int, n: int, ell: int) -> "GroupElement":
        p = list(range(n))
        p[i], p[j] = j, i
        return cls(tuple(p), (0,) * n, ell)

    @property
    def n(self) -> int:
        return len(self.perm)

    def is_identity(self) -> bool:
        return self.perm == tuple(range(self.n)) and not any(self.twist)

    def __mul__(self, other: "GroupElement") -> "GroupElement":
        # composition self o other
        perm = tuple(self.perm[other.perm[i]] for i in range(self.n))
        twist = tuple((other.twist[i] + self.twist[other.perm[i]]) % self.ell for i in range(self.n))
        return GroupElement(perm, twist, self.ell)

    def inverse(self) -> "GroupElement":
        inv = [0] * self.n
        for i, p in enumerate(self.perm):
            inv[p] = i
        twist = tuple((-self.twist[inv[i]]) % self.ell for i in range(self.n))
        return GroupElement(tuple(inv), twist, self.ell)

    def __pow__(self, e: int) -> "GroupElement":
        out = GroupElement.identity(self.n, self.ell)
        base = self if e >= 0 else self.inverse()
        for _ in range(abs(e)):
            out = out * base
        return out

    def label(self) -> str:
        if self.is_identity():
            return "1"
        parts = []
        if self.perm != tuple(range(self.n)):
            parts.append("s" + "".join(str(p + 1) for p in self.perm))
        if any(self.twist):
            parts.append("a" + "".join(str(t) for t in self.twist))
        return "*".join(parts)


# ---------------------------------------------------------------------------
# Laurent polynomials: dict exponent-tuple -> ParamPoly


def laurent(ell: int, terms: dict) -> dict:
    out = {}
    for e, c in terms.items():
        c = ParamPoly.coerce(ell, c)
        if not c.is_zero():
            out[tuple(e)] = c
    return out


def monomial(n: int, ell: int, exps, coeff=1) -> dict:
    return laurent(ell, {tuple(exps): coeff})


def lp_add_into(acc: dict, p: dict, scale=None) -> dict:
    for e, c in p.items():
        if scale is not None:
            c = c * scale
        if e in acc:
            s = acc[e] + c
            if s.is_zero():
                del acc[e]
            else:
                acc[e] = s
        elif not c.is_zero():
            acc[e] = c
    return acc


def lp_add(p: dict, q: dict) -> dict:
    return lp_add_into(dict(p), q)


def lp_sub(p: dict, q: dict) -> dict:
    return lp_add_into(dict(p), {e: -c for e, c in q.items()})


def lp_scale(p: dict, s) -> dict:
    out = {}
    for e, c in p.items():
        v = c * s
        if not v.is_zero():
            out[e] = v
    return out


def lp_mul(p: dict, q: dict) -> dict:
    out: dict = {}
    for e1, c1 in p.items():
        for e2, c2 in q.items():
            e = tuple(a + b for a, b in zip(e1, e2))
            v = c1 * c2
            if e in out:
                v = out[e] + v
                if v.is_zero():
                    del out[e]
                    continue
            out[e] = v
    return out


def lp_shift(p: dict, shift) -> dict:
    return {tuple(a + b for a, b in zip(e, shift)): c for e, c in p.items()}


def group_act(g: GroupElement, p: dict) -> dict:
    """Apply the ring automorphism ``g`` to a Laurent polynomial."""
    if g.is_identity():
        return p
    ell = g.ell
    out = {}
    for e, c in p.items():
        ne = [0] * len(e)
        power = 0
        for i, ei in enumerate(e):
            ne[g.perm[i]] = ei
            power += g.twist[i] * ei
        power %= ell
        out[tuple(ne)] = c * zeta(ell, power) if power else c
    return out


def lp_diff(p: dict, i: int) -> dict:
    out = {}
    for e, c in p.items():
        if e[i]:
            ne = list(e)
            ne[i] -= 1
            out[tuple(ne)] = c * e[i]
    return out


# ---------------------------------------------------------------------------
# arrangement factors


@dataclass(frozen=True, order=True)
class Factor:
    """The linear form x_a - zeta^m x_b with a < b (0-based indices)."""

    a: int
    b: int
    m: int

    def act(self, g: GroupElement) -> tuple[CycRat, "Factor"]:
        """g(F) = unit * F'; returns (unit, F')."""
        ell = g.ell
        pa, pb = g.perm[self.a], g.perm[self.b]
        mu = (self.m + g.twist[self.b] - g.twist[self.a]) % ell
        if pa < pb:
            return zeta(ell, g.twist[self.a]), Factor(pa, pb, mu)
        return -zeta(ell, g.twist[self.a] + mu), Factor(pb, pa, (-mu) % ell)

    def as_laurent(self, n: int, ell: int) -> dict:
        ea = [0] * n
        ea[self.a] = 1
        eb = [0] * n
        eb[self.b] = 1
        return {tuple(ea): ParamPoly.const(ell, 1), tuple(eb): ParamPoly.const(ell, -zeta(ell, self.m))}

    def diff(self, i: int, ell: int):
        if i == self.a:
            return CycRat.rational(ell, 1)
        if i == self.b:
            return -zeta(ell, self.m)
        return None


def lp_mul_factor(p: dict, f: Factor, ell: int) -> dict:
    out: dict = {}
    w = -zeta(ell, f.m)
    for e, c in p.items():
        ea = list(e)
        ea[f.a] += 1
        lp_add_into(out, {tuple(ea): c})
        eb = list(e)
        eb[f.b] += 1
        lp_add_into(out, {tuple(eb): c * w})
    return out


def lp_divide_factor(p: dict, f: Factor, ell: int):
    """Exact quotient p / (x_a - zeta^m x_b), or None when not divisible."""
    if not p:
        return {}
    a, b = f.a, f.b
    n = len(next(iter(p)))
    mins = [min(e[i] for e in p) for i in range(n)]
    shift = [-v for v in mins]
    q = lp_shift(p, shift)
    # group by exponent of x_a
    by_deg: dict[int, dict] = {}
    for e, c in q.items():
        rest = list(e)
        d = rest[a]
        rest[a] = 0
        by_deg.setdefault(d, {})[tuple(rest)] = c
    top = max(by_deg)
    w = zeta(ell, f.m)

    def times_w(poly):
        out = {}
        for e, c in poly.items():
            ne = list(e)
            ne[b] += 1
            out[tuple(ne)] = c * w
        return out

    quot: dict[int, dict] = {}
    carry: dict = {}
    for d in range(top, 0, -1):
        cur = lp_add(by_deg.get(d, {}), times_w(carry)) if carry else dict(by_deg.get(d, {}))
        quot[d - 1] = cur
        carry = cur
    rem = lp_add(by_deg.get(0, {}), times_w(carry)) if carry else by_deg.get(0, {})
    if rem:
        return None
    out: dict = {}
    for d, poly in quot.items():
        for e, c in poly.items():
            ne = list(e)
            ne[a] = d
            out[tuple(ne)] = c
    return lp_shift(out, mins)


# ---------------------------------------------------------------------------
# rational coefficients


class RatFn:
    """num / prod(den) with den a sorted tuple of arrangement factors."""

    __slots__ = ("n", "ell", "num", "den")

    def __init__(self, n: int, ell: int, num: dict, den: tuple = ()):
        self.n = n
        self.ell = ell
        self.num = num
        self.den = tuple(sorted(den))

    @classmethod
    def const(cls, n: int, ell: int, value) -> "RatFn":
        return cls(n, ell, laurent(ell, {(0,) * n: value}))

    def is_zero(self) -> bool:
        return not self.num

    def reduce(self) -> "RatFn":
        if not self.den or not self.num:
            return RatFn(self.n, self.ell, self.num, () if not self.num else self.den)
        num = self.num
        left = []
        for f, mult in sorted(Counter(self.den).items()):
            k = 0
            while k < mult:
                q = lp_divide_factor(num, f, self.ell)
                if q is None:
                    break
                num = q
                k += 1
            left.extend([f] * (mult - k))
        return RatFn(self.n, self.ell, num, tuple(left))

    def _expand_to(self, den: Counter) -> dict:
        have = Counter(self.den)
        num = self.num
        for f, mult in den.items():
            for _ in range(mult - have.get(f, 0)):
                num = lp_mul_factor(num, f, self.ell)
        return num

    def __add__(self, other: "RatFn") -> "RatFn":
        if other.is_zero():
            return self
        if self.is_zero():
            return other
        if self.den == other.den:
            return RatFn(self.n, self.ell, lp_add(self.num, other.num), self.den)
        lcm = Counter(self.den) | Counter(other.den)
        num = lp_add(self._expand_to(lcm), other._expand_to(lcm))
        return RatFn(self.n, self.ell, num, tuple(lcm.elements()))

    def __neg__(self):
        return RatFn(self.n, self.ell, {e: -c for e, c in self.num.items()}, self.den)

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, RatFn):
            return RatFn(self.n, self.ell, lp_mul(self.num, other.num), self.den + other.den)
        return RatFn(self.n, self.ell, lp_scale(self.num, other), self.den)

    __rmul__ = __mul__

    def act(self, g: GroupElement) -> "RatFn":
        if g.is_identity():
            return self
        num = group_act(g, self.num)
        unit = CycRat.rational(self.ell, 1)
        den = []
        for f in self.den:
            u, nf = f.act(g)
            unit = unit * u
            den.append(nf)
        if unit != 1:
            num = lp_scale(num, unit.inverse())
        return RatFn(self.n, self.ell, num, tuple(den))

    def diff(self, i: int) -> "RatFn":
        out = RatFn(self.n, self.ell, lp_diff(self.num, i), self.den)
        for f, mult in Counter(self.den).items():
            d = f.diff(i, self.ell)
            if d is None:
                continue
            term = RatFn(self.n, self.ell, lp_scale(self.num, -d * mult), self.den + (f,))
            out = out + term
        return out

    def to_laurent(self) -> dict:
        r = self.reduce()
        if r.den:
            raise InexactDivisionError(f"denominator {r.den} does not cancel")
        return r.num

    def subs(self, values: dict) -> "RatFn":
        num = {}
        for e, c in self.num.items():
            v = c.subs(values)
            if not v.is_zero():
                num[e] = v
        return RatFn(self.n, self.ell, num, self.den)

    def text(self) -> str:
        num = " + ".join(
            f"({c!r})*x^{list(e)}" for e, c in sorted(self.num.items(), key=lambda it: it[0])
        )
        if not self.den:
            return num
        den = "*".join(f"(x{f.a + 1}-z^{f.m}*x{f.b + 1})" for f in self.den)
        return f"[{num}]/[{den}]"


# ---------------------------------------------------------------------------
# operators


class Operator:
    """Canonical normal-ordered element of Gamma_n x| D(t^reg)."""

    __slots__ = ("n", "ell", "terms")

    def __init__(self, n: int, ell: int, terms: dict | None = None, *, canonical: bool = False):
        self.n = n
        self.ell = ell
        if canonical:
            self.terms = terms or {}
        else:
            self.terms = {}
            for key, f in (terms or {}).items():
                f = f.reduce()
                if not f.is_zero():
                    self.terms[key] = f

    # constructors
    @classmethod
    def zero(cls, n, ell):
        return cls(n, ell)

    @classmethod
    def identity(cls, n, ell, coeff=1):
        return cls.coefficient(RatFn.const(n, ell, coeff))

    @classmethod
    def coefficient(cls, f: RatFn) -> "Operator":
        key = ((0,) * f.n, GroupElement.identity(f.n, f.ell))
        return cls(f.n, f.ell, {key: f})

    @classmethod
    def x(cls, n, ell, i, power=1):
        e = [0] * n
        e[i] = power
        return cls.coefficient(RatFn(n, ell, monomial(n, ell, e)))

    @classmethod
    def partial(cls, n, ell, i, power=1):
        beta = [0] * n
        beta[i] = power
        key = (tuple(beta), GroupElement.identity(n, ell))
        return cls(n, ell, {key: RatFn.const(n, ell, 1)})

    @classmethod
    def group(cls, g: GroupElement, coeff=1):
        return cls(g.n, g.ell, {((0,) * g.n, g): RatFn.const(g.n, g.ell, coeff)})

    # arithmetic
    def is_zero(self) -> bool:
        return not self.terms

    def _combine(self, other, sign):
        terms = dict(self.terms)
        for key, f in other.terms.items():
            if sign < 0:
                f = -f
            if key in terms:
                s = (terms[key] + f).reduce()
                if s.is_zero():
                    del terms[key]
                else:
                    terms[key] = s
            else:
                terms[key] = f
        return Operator(self.n, self.ell, terms, canonical=True)

    def __add__(self, other):
        if not isinstance(other, Operator):
            other = Operator.identity(self.n, self.ell, other)
        return self._combine(other, 1)

    __radd__ = __add__

    def __sub__(self, other):
        if not isinstance(other, Operator):
            other = Operator.identity(self.n, self.ell, other)
        return self._combine(other, -1)

    def __rsub__(self, other):
        return (-self) + other

    def __neg__(self):
        return Operator(self.n, self.ell, {k: -f for k, f in self.terms.items()}, canonical=True)

    def __mul__(self, other):
        if isinstance(other, Operator):
            return op_mul(self, other)
        if isinstance(other, RatFn):
            return op_mul(self, Operator.coefficient(other))
        terms = {}
        for k, f in self.terms.items():
            v = f * other
            if not v.is_zero():
                terms[k] = v
        return Operator(self.n, self.ell, terms, canonical=True)

    def __rmul__(self, other):
        if isinstance(other, RatFn):
            return op_mul(Operator.coefficient(other), self)
        return self * other

    def __pow__(self, e: int):
        out = Operator.identity(self.n, self.ell)
        for _ in range(e):
            out = out * self
        return out

    def __eq__(self, other):
        if not isinstance(other, Operator):
            return NotImplemented
        return (self - other).is_zero()

    __hash__ = None

    def commutator(self, other: "Operator") -> "Operator":
        return self * other - other * self

    def is_differential(self) -> bool:
        return all(g.is_identity() for _, g in self.terms)

    def order(self) -> int:
        return max((sum(b) for b, _ in self.terms), default=-1)

    def subs(self, values: dict) -> "Operator":
        return Operator(self.n, self.ell, {k: f.subs(values) for k, f in self.terms.items()})

    def to_text(self) -> str:
        """Deterministic text form, one term per line, sorted."""
        lines = []
        for (beta, g), f in self.terms.items():
            lines.append(f"d^{list(beta)} g={g.label()} :: {f.reduce().text()}")
        return "\n".join(sorted(lines)) if lines else "0"

    def __repr__(self):
        return f"Operator(n={self.n}, ell={self.ell}, terms={len(self.terms)})"


def _derivatives(h: RatFn, beta) -> dict:
    """All d^gamma h for gamma <= beta."""
    cache = {(0,) * len(beta): h}
    ranges = [range(b + 1) for b in beta]
    for gamma in sorted(iproduct(*ranges), key=sum):
        if gamma in cache:
            continue
        i = next(j for j, v in enumerate(gamma) if v)
        prev = list(gamma)
        prev[i] -= 1
        cache[gamma] = cache[tuple(prev)].diff(i)
    return cache


def op_mul(A: Operator, B: Operator) -> Operator:
    """Exact product A*B re-expressed in normal order."""
    n, ell = A.n, A.ell
    acc: dict = {}
    for (b1, g1), f1 in A.terms.items():
        for (b2, g2), f2 in B.terms.items():
            h = f2.act(g1)
            # g1 d^b2 = zeta^{-sum t_i b2_i} d^{pi(b2)} g1
            power = -sum(t * b for t, b in zip(g1.twist, b2)) % ell
            b2p = [0] * n
            for i, bi in enumerate(b2):
                b2p[g1.perm[i]] = bi
            scalar = zeta(ell, power)
            g = g1 * g2
            ders = _derivatives(h, b1)
            for gamma, dh in ders.items():
                if dh.is_zero():
                    continue
                coef = 1
                for bi, gi in zip(b1, gamma):
                    coef *= comb(bi, gi)
                beta = tuple(bi - gi + bp for bi, gi, bp in zip(b1, gamma, b2p))
                term = (f1 * dh) * (scalar * coef)
                key = (beta, g)
                acc[key] = acc[key] + term if key in acc else term
    return Operator(n, ell, acc)


def apply(A: Operator, p: dict) -> dict:
    """Apply A to a Laurent polynomial; the result must be a Laurent polynomial."""
    total = RatFn(A.n, A.ell, {})
    by_den: dict = {}
    for (beta, g), f in A.terms.items():
        q = group_act(g, p)
        for i, b in enumerate(beta):
            for _ in range(b):
                q = lp_diff(q, i)
        if not q:
            continue
        num = lp_mul(f.num, q)
        if f.den in by_den:
            lp_add_into(by_den[f.den], num)
        else:
            by_den[f.den] = num
    for den, num in by_den.items():
        r = RatFn(A.n, A.ell, num, den).reduce()
        total = total + r
    return total.to_laurent()


def invariant_monomials(n: int, ell: int, max_degree: int):
    """Monomial symmetric functions in x_i^ell of total degree <= max_degree."""
    out = []
    for d in range(0, max_degree // ell + 1):
        for part in _partitions(d, n):
            out.append(symmetric_monomial(n, ell, part))
    return out


def _partitions(d: int, parts: int, largest: int | None = None):
    if largest is None:
        largest = d
    if d == 0:
        yield ()
        return
    if parts == 0:
        return
    for first in range(min(d, largest), 0, -1):
        for rest in _partitions(d - first, parts - 1, first):
            yield (first,) + rest


def symmetric_monomial(n: int, ell: int, part) -> dict:
    exps = list(part) + [0] * (n - len(part))
    seen = set()
    terms = {}
    from itertools import permutations

    for perm in permutations(exps):
        if perm in seen:
            continue
        seen.add(perm)
        terms[tuple(ell * v for v in perm)] = ParamPoly.const(ell, 1)
    return terms


def restrict_to_invariants(A: Operator, check_degree: int | None = None) -> Operator:
    """Drop the (rightmost) group parts; valid on Gamma_n-invariant functions."""
    acc: dict = {}
    ident = GroupElement.identity(A.n, A.ell)
    for (beta, _), f in A.terms.items():
        key = (beta, ident)
        acc[key] = acc[key] + f if key in acc else f
    out = Operator(A.n, A.ell, acc)
    if check_degree is not None:
        for p in invariant_monomials(A.n, A.ell, check_degree):
            if apply(out, p) != apply(A, p):
                raise ContractViolation("restricted operator disagrees on an invariant polynomial")
    return out


def _falling(e: ExponentExpr, b: int, ell: int) -> ParamPoly:
    out = ParamPoly.const(ell, 1)
    base = e.to_parampoly(ell)
    for j in range(b):
        out = out * (base - j)
    return out


def apply_formal(A: Operator, e) -> list[tuple[ParamPoly, tuple]]:
    """Action on the formal monomial x^e with symbolic exponents."""
    e = tuple(ExponentExpr.coerce(v) for v in e)
    acc: dict = {}
    for (beta, g), f in A.terms.items():
        if not g.is_identity():
            raise UnsupportedDenominatorError("formal action needs a differential operator")
        if f.den:
            raise UnsupportedDenominatorError("formal action needs monomial coefficients")
        coef = ParamPoly.const(A.ell, 1)
        for ei, bi in zip(e, beta):
            coef = coef * _falling(ei, bi, A.ell)
        if coef.is_zero():
            continue
        for gam, c in f.num.items():
            key = tuple(ei - bi + gi for ei, bi, gi in zip(e, beta, gam))
            v = coef * c
            acc[key] = acc[key] + v if key in acc else v
    out = [(c, k) for k, c in acc.items() if not c.is_zero()]
    out.sort(key=lambda it: repr(it[1]))
    return out


def conjugate_by_monomial(A: Operator, e) -> Operator:
    """x^{-e} o A o x^{e} via d_i -> d_i + e_i / x_i."""
    if not A.is_differential():
        raise UnsupportedDenominatorError("conjugation by a monomial needs a differential operator")
    n, ell = A.n, A.ell
    e = [ExponentExpr.coerce(v) for v in e]
    shifted = []
    for i in range(n):
        ex = [0] * n
        ex[i] = -1
        coef = RatFn(n, ell, {tuple(ex): e[i].to_parampoly(ell)}) if not e[i] == 0 else None
        op = Operator.partial(n, ell, i)
        if coef is not None and not coef.is_zero():
            op = op + Operator.coefficient(coef)
        shifted.append(op)
    out = Operator.zero(n, ell)
    for (beta, _), f in A.terms.items():
        term = Operator.coefficient(f)
        for i, b in enumerate(beta):
            for _ in range(b):
                term = term * shifted[i]
        out = out + term
    return out
