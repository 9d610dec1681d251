"""Exact scalars: the cyclotomic field Q(zeta_l), parameter polynomials in
k, c_1..c_{l-1} (plus a formal exponent variable ``r``), and affine exponent
expressions.  Also the derived constants C_i, sigma, t, a_i, b_i.
"""

from __future__ import annotations

import cmath
from fractions import Fraction
from functools import lru_cache
from numbers import Rational

__all__ = [
    "CycRat",
    "ParamPoly",
    "ExponentExpr",
    "NonlinearExponentError",
    "cyclotomic_poly",
    "cyc_reduce",
    "cyc_invert",
    "zeta",
    "param_symbols",
    "compute_C",
    "compute_sigma_t",
    "compute_a_b",
    "c_from_C",
]


class NonlinearExponentError(ValueError):
    """Raised when an exponent expression would stop being affine."""


# ---------------------------------------------------------------------------
# integer / rational polynomial helpers (coefficient lists, low degree first)


def _trim(p):
    p = list(p)
    while p and p[-1] == 0:
        p.pop()
    return p


def _pdivmod(a, b):
    a = [Fraction(v) for v in a]
    b = _trim(b)
    q = [Fraction(0)] * max(len(a) - len(b) + 1, 1)
    lead = Fraction(b[-1])
    while len(_trim(a)) >= len(b):
        a = _trim(a)
        shift = len(a) - len(b)
        f = a[-1] / lead
        q[shift] = f
        for i, bv in enumerate(b):
            a[i + shift] -= f * bv
    return _trim(q), _trim(a)


def _pmul(a, b):
    if not a or not b:
        return []
    out = [Fraction(0)] * (len(a) + len(b) - 1)
    for i, av in enumerate(a):
        if av:
            for j, bv in enumerate(b):
                out[i + j] += av * bv
    return _trim(out)


def _psub(a, b):
    n = max(len(a), len(b))
    a = list(a) + [0] * (n - len(a))
    b = list(b) + [0] * (n - len(b))
    return _trim([x - y for x, y in zip(a, b)])


@lru_cache(maxsize=None)
def cyclotomic_poly(ell: int) -> tuple[int, ...]:
    """Integer coefficients of Phi_ell, lowest degree first."""
    if ell < 1:
        raise ValueError("ell must be positive")
    num = [-1] + [0] * (ell - 1) + [1]
    for d in range(1, ell):
        if ell % d == 0:
            num, rem = _pdivmod(num, cyclotomic_poly(d))
            assert not rem
    return tuple(int(v) for v in num)


@lru_cache(maxsize=None)
def _power_table(ell: int) -> tuple[tuple[Fraction, ...], ...]:
    # zeta^j reduced mod Phi_ell for 0 <= j < ell
    phi = cyclotomic_poly(ell)
    deg = len(phi) - 1
    rows = []
    for j in range(ell):
        _, r = _pdivmod([0] * j + [1], phi)
        r = list(r) + [Fraction(0)] * (deg - len(r))
        rows.append(tuple(Fraction(v) for v in r))
    return tuple(rows)


def _reduce_list(ell: int, p) -> tuple[Fraction, ...]:
    table = _power_table(ell)
    deg = len(table[0])
    out = [Fraction(0)] * deg
    for j, v in enumerate(p):
        if v:
            row = table[j % ell]
            for i, w in enumerate(row):
                if w:
                    out[i] += v * w
    return tuple(out)


class CycRat:
    """An element of Q(zeta_ell), stored as its residue modulo Phi_ell."""

    __slots__ = ("ell", "coeffs", "_hash")

    def __init__(self, ell: int, coeffs=(), *, reduced: bool = False):
        self.ell = ell
        if reduced:
            self.coeffs = tuple(coeffs)
        else:
            self.coeffs = _reduce_list(ell, [Fraction(v) for v in coeffs])
        self._hash = None

    @classmethod
    def rational(cls, ell: int, value) -> "CycRat":
        deg = len(cyclotomic_poly(ell)) - 1
        return cls(ell, (Fraction(value),) + (Fraction(0),) * (deg - 1), reduced=True)

    @classmethod
    def zeta_power(cls, ell: int, j: int) -> "CycRat":
        return cls(ell, _power_table(ell)[j % ell], reduced=True)

    def _unify(self, other):
        """Return (self, other) as elements of one common field, or None."""
        if isinstance(other, CycRat):
            if other.ell == self.ell:
                return self, other
            if other.is_rational():
                return self, CycRat.rational(self.ell, other.coeffs[0])
            if self.is_rational():
                return CycRat.rational(other.ell, self.coeffs[0]), other
            raise ValueError(f"cannot mix Q(zeta_{self.ell}) and Q(zeta_{other.ell})")
        if isinstance(other, (int, Rational)):
            return self, CycRat.rational(self.ell, other)
        return None

    def is_zero(self) -> bool:
        return not any(self.coeffs)

    def is_rational(self) -> bool:
        return not any(self.coeffs[1:])

    def to_fraction(self) -> Fraction:
        if not self.is_rational():
            raise ValueError(f"{self!r} is not rational")
        return self.coeffs[0]

    def to_complex(self) -> complex:
        z = cmath.exp(2j * cmath.pi / self.ell)
        return complex(sum(float(c) * z**i for i, c in enumerate(self.coeffs)))

    def __add__(self, other):
        u = self._unify(other)
        if u is None:
            return NotImplemented
        a, b = u
        return CycRat(a.ell, tuple(x + y for x, y in zip(a.coeffs, b.coeffs)), reduced=True)

    __radd__ = __add__

    def __neg__(self):
        return CycRat(self.ell, tuple(-a for a in self.coeffs), reduced=True)

    def __sub__(self, other):
        u = self._unify(other)
        if u is None:
            return NotImplemented
        a, b = u
        return CycRat(a.ell, tuple(x - y for x, y in zip(a.coeffs, b.coeffs)), reduced=True)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        u = self._unify(other)
        if u is None:
            return NotImplemented
        x, y = u
        a, b = x.coeffs, y.coeffs
        ell = x.ell
        if len(a) == 1:
            return CycRat(ell, (a[0] * b[0],), reduced=True)
        if y.is_rational():
            f = b[0]
            return CycRat(ell, tuple(v * f for v in a), reduced=True)
        if x.is_rational():
            f = a[0]
            return CycRat(ell, tuple(v * f for v in b), reduced=True)
        prod = [Fraction(0)] * (len(a) + len(b) - 1)
        for i, av in enumerate(a):
            if av:
                for j, bv in enumerate(b):
                    if bv:
                        prod[i + j] += av * bv
        return CycRat(ell, prod)

    __rmul__ = __mul__

    def inverse(self) -> "CycRat":
        return cyc_invert(self)

    def __truediv__(self, other):
        u = self._unify(other)
        if u is None:
            return NotImplemented
        return u[0] * cyc_invert(u[1])

    def __rtruediv__(self, other):
        return cyc_invert(self) * other

    def __pow__(self, e: int):
        if e < 0:
            return cyc_invert(self) ** (-e)
        out = CycRat.rational(self.ell, 1)
        base = self
        while e:
            if e & 1:
                out = out * base
            base = base * base
            e >>= 1
        return out

    def __eq__(self, other):
        try:
            u = self._unify(other)
        except ValueError:
            return False
        if u is None:
            return NotImplemented
        return u[0].coeffs == u[1].coeffs

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(self.coeffs[0]) if self.is_rational() else hash((self.ell, self.coeffs))
        return self._hash

    def __repr__(self):
        parts = []
        for i, c in enumerate(self.coeffs):
            if not c:
                continue
            mon = "" if i == 0 else ("z" if i == 1 else f"z^{i}")
            if mon and c == 1:
                parts.append(mon)
            elif mon and c == -1:
                parts.append("-" + mon)
            else:
                parts.append(f"{c}{'*' + mon if mon else ''}")
        return " + ".join(parts).replace("+ -", "- ") if parts else "0"


def cyc_reduce(ell: int, p) -> CycRat:
    """Reduce an integer (or rational) polynomial in zeta, given as a
    coefficient list lowest-degree first, modulo Phi_ell."""
    if ell < 1:
        raise ValueError("ell must be positive")
    return CycRat(ell, list(p))


def cyc_invert(a: CycRat) -> CycRat:
    """Inverse in Q(zeta_ell) via the extended Euclidean algorithm against Phi_ell."""
    if a.is_zero():
        raise ZeroDivisionError("inverse of zero in Q(zeta)")
    if a.is_rational():
        return CycRat.rational(a.ell, 1 / a.coeffs[0])
    # s*a + t*phi = g, track s only
    r0, r1 = [Fraction(v) for v in cyclotomic_poly(a.ell)], _trim(a.coeffs)
    s0, s1 = [], [Fraction(1)]
    while len(r1) > 1:
        q, r = _pdivmod(r0, r1)
        r0, r1 = r1, r
        s0, s1 = s1, _psub(s0, _pmul(q, s1))
    # r1 is a nonzero constant because Phi_ell is irreducible
    inv = 1 / r1[0]
    return CycRat(a.ell, [v * inv for v in s1])


def zeta(ell: int, j: int = 1) -> CycRat:
    return CycRat.zeta_power(ell, j)


# ---------------------------------------------------------------------------
# parameter polynomials


def _var_order(name: str):
    # k, c1, c2, ..., r
    if name == "k":
        return (0, 0)
    if name.startswith("c"):
        return (1, int(name[1:]))
    return (2, name)


def _mono_mul(a, b):
    if not a:
        return b
    if not b:
        return a
    d = dict(a)
    for v, e in b:
        d[v] = d.get(v, 0) + e
    return tuple(sorted(d.items(), key=lambda it: _var_order(it[0])))


class ParamPoly:
    """Polynomial over Q(zeta_ell) in named indeterminates (k, c1.., r).

    Monomials are tuples of (name, exponent) pairs in canonical order; the
    empty tuple is the constant monomial.  Zero coefficients are never stored.
    """

    __slots__ = ("ell", "terms", "_hash")

    def __init__(self, ell: int, terms=None):
        self.ell = ell
        self.terms = {}
        self._hash = None
        if terms:
            for m, c in terms.items():
                if not isinstance(c, CycRat) or c.ell != ell:
                    c = _as_cyc(ell, c)
                if not c.is_zero():
                    self.terms[m] = c

    @classmethod
    def const(cls, ell: int, value) -> "ParamPoly":
        return cls(ell, {(): _as_cyc(ell, value)})

    @classmethod
    def var(cls, ell: int, name: str) -> "ParamPoly":
        return cls(ell, {((name, 1),): CycRat.rational(ell, 1)})

    @classmethod
    def zero(cls, ell: int) -> "ParamPoly":
        return cls(ell)

    @classmethod
    def coerce(cls, ell: int, value) -> "ParamPoly":
        if isinstance(value, ParamPoly):
            if value.ell == ell:
                return value
            return cls(ell, {m: _as_cyc(ell, c) for m, c in value.terms.items()})
        if isinstance(value, ExponentExpr):
            return value.to_parampoly(ell)
        return cls.const(ell, value)

    def _raw(self, terms):
        out = ParamPoly.__new__(ParamPoly)
        out.ell = self.ell
        out.terms = terms
        out._hash = None
        return out

    def is_zero(self) -> bool:
        return not self.terms

    def is_constant(self) -> bool:
        return not self.terms or (len(self.terms) == 1 and () in self.terms)

    def constant_value(self) -> CycRat:
        if not self.is_constant():
            raise ValueError(f"{self!r} is not constant")
        return self.terms.get((), CycRat.rational(self.ell, 0))

    def variables(self) -> set[str]:
        return {v for m in self.terms for v, _ in m}

    def __add__(self, other):
        if not isinstance(other, ParamPoly):
            other = ParamPoly.coerce(self.ell, other)
        if not other.terms:
            return self
        if not self.terms:
            return other
        terms = dict(self.terms)
        for m, c in other.terms.items():
            if m in terms:
                s = terms[m] + c
                if s.is_zero():
                    del terms[m]
                else:
                    terms[m] = s
            else:
                terms[m] = c
        return self._raw(terms)

    __radd__ = __add__

    def __neg__(self):
        return self._raw({m: -c for m, c in self.terms.items()})

    def __sub__(self, other):
        if not isinstance(other, ParamPoly):
            other = ParamPoly.coerce(self.ell, other)
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, ParamPoly):
            if isinstance(other, ExponentExpr):
                other = other.to_parampoly(self.ell)
            else:
                try:
                    c = _as_cyc(self.ell, other)
                except TypeError:
                    return NotImplemented
                if c.is_zero():
                    return self._raw({})
                return self._raw({m: v * c for m, v in self.terms.items()})
        if not self.terms or not other.terms:
            return self._raw({})
        terms: dict = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                m = _mono_mul(m1, m2)
                v = c1 * c2
                if m in terms:
                    v = terms[m] + v
                    if v.is_zero():
                        del terms[m]
                        continue
                terms[m] = v
        return self._raw(terms)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, ParamPoly):
            other = other.constant_value()
        inv = cyc_invert(_as_cyc(self.ell, other))
        return self * inv

    def __pow__(self, e: int):
        if e < 0:
            raise ValueError("negative power of a polynomial")
        out = ParamPoly.const(self.ell, 1)
        for _ in range(e):
            out = out * self
        return out

    def __eq__(self, other):
        if not isinstance(other, ParamPoly):
            try:
                other = ParamPoly.coerce(self.ell, other)
            except (TypeError, ValueError):
                return False
        return (self - other).is_zero()

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(frozenset(self.terms.items()))
        return self._hash

    def subs(self, values: dict) -> "ParamPoly":
        """Substitute exact values (numbers, CycRat or ParamPoly) for variables."""
        out = ParamPoly.zero(self.ell)
        for m, c in self.terms.items():
            term = ParamPoly(self.ell, {(): c})
            rest = []
            for v, e in m:
                if v in values:
                    term = term * (ParamPoly.coerce(self.ell, values[v]) ** e)
                else:
                    rest.append((v, e))
            if rest:
                term = term * ParamPoly(self.ell, {tuple(rest): CycRat.rational(self.ell, 1)})
            out = out + term
        return out

    def evaluate(self, values: dict) -> complex:
        """Numeric evaluation with zeta -> exp(2 pi i / ell)."""
        total = 0j
        for m, c in self.terms.items():
            v = c.to_complex()
            for name, e in m:
                v *= complex(values[name]) ** e
            total += v
        return total

    def degree(self, var: str) -> int:
        d = -1
        for m in self.terms:
            d = max(d, dict(m).get(var, 0))
        return d

    def coefficients_in(self, var: str) -> dict[int, "ParamPoly"]:
        """Split as a polynomial in ``var``: {power: coefficient ParamPoly}."""
        out: dict[int, dict] = {}
        for m, c in self.terms.items():
            dm = dict(m)
            e = dm.pop(var, 0)
            rest = tuple(sorted(dm.items(), key=lambda it: _var_order(it[0])))
            out.setdefault(e, {})[rest] = c
        return {e: ParamPoly(self.ell, t) for e, t in out.items()}

    def total_degree(self) -> int:
        return max((sum(e for _, e in m) for m in self.terms), default=-1)

    def sort_key(self):
        return tuple(sorted((m, c.coeffs) for m, c in self.terms.items()))

    def __repr__(self):
        if not self.terms:
            return "0"
        parts = []
        for m, c in sorted(self.terms.items(), key=lambda it: it[0]):
            mon = "*".join(v if e == 1 else f"{v}^{e}" for v, e in m)
            cs = repr(c)
            if not mon:
                parts.append(cs)
            elif cs == "1":
                parts.append(mon)
            elif cs == "-1":
                parts.append("-" + mon)
            else:
                parts.append(f"({cs})*{mon}")
        return " + ".join(parts)


def _as_cyc(ell: int, value) -> CycRat:
    if isinstance(value, CycRat):
        if value.ell == ell:
            return value
        if value.is_rational():
            return CycRat.rational(ell, value.coeffs[0])
        raise ValueError("cyclotomic field mismatch")
    if isinstance(value, ParamPoly):
        return _as_cyc(ell, value.constant_value())
    if isinstance(value, float):
        return CycRat.rational(ell, Fraction(value))
    if isinstance(value, (int, Rational)):
        return CycRat.rational(ell, value)
    raise TypeError(f"cannot use {type(value).__name__} as an exact scalar")


# ---------------------------------------------------------------------------
# affine exponents


class ExponentExpr:
    """Affine expression const + sum_v coeff_v * v used as a symbolic exponent."""

    __slots__ = ("const", "linear", "_hash")

    def __init__(self, const=0, linear=None):
        self.const = Fraction(const)
        lin = {}
        for v, c in (linear or {}).items():
            if not isinstance(c, CycRat):
                c = CycRat.rational(1, c)
            if not c.is_zero():
                lin[v] = c
        self.linear = lin
        self._hash = None

    @classmethod
    def var(cls, name: str) -> "ExponentExpr":
        return cls(0, {name: CycRat.rational(1, 1)})

    @classmethod
    def from_parampoly(cls, p: ParamPoly) -> "ExponentExpr":
        const = Fraction(0)
        lin = {}
        for m, c in p.terms.items():
            if not m:
                const = c.to_fraction()
            elif len(m) == 1 and m[0][1] == 1:
                lin[m[0][0]] = c
            else:
                raise NonlinearExponentError(f"exponent {p!r} is not affine")
        return cls(const, lin)

    @staticmethod
    def coerce(value) -> "ExponentExpr":
        if isinstance(value, ExponentExpr):
            return value
        if isinstance(value, ParamPoly):
            return ExponentExpr.from_parampoly(value)
        return ExponentExpr(value)

    def is_constant(self) -> bool:
        return not self.linear

    def __add__(self, other):
        o = ExponentExpr.coerce(other)
        lin = dict(self.linear)
        for v, c in o.linear.items():
            lin[v] = lin[v] + c if v in lin else c
        return ExponentExpr(self.const + o.const, lin)

    __radd__ = __add__

    def __neg__(self):
        return ExponentExpr(-self.const, {v: -c for v, c in self.linear.items()})

    def __sub__(self, other):
        return self + (-ExponentExpr.coerce(other))

    def __rsub__(self, other):
        return ExponentExpr.coerce(other) - self

    def __mul__(self, other):
        if isinstance(other, ExponentExpr):
            if other.is_constant():
                other = other.const
            elif self.is_constant():
                return other * self.const
            else:
                raise NonlinearExponentError("product of two non-constant exponents")
        if isinstance(other, ParamPoly):
            return self * ExponentExpr.from_parampoly(other)
        f = Fraction(other)
        return ExponentExpr(self.const * f, {v: c * f for v, c in self.linear.items()})

    __rmul__ = __mul__

    def __truediv__(self, other):
        return self * (1 / Fraction(other))

    def __eq__(self, other):
        try:
            o = ExponentExpr.coerce(other)
        except (TypeError, ValueError):
            return False
        d = self - o
        return d.const == 0 and not d.linear

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.const, frozenset((v, c.coeffs) for v, c in self.linear.items())))
        return self._hash

    def to_parampoly(self, ell: int) -> ParamPoly:
        p = ParamPoly.const(ell, self.const)
        for v, c in self.linear.items():
            p = p + ParamPoly.var(ell, v) * _as_cyc(ell, c)
        return p

    def __repr__(self):
        s = [f"{self.const}"] if self.const or not self.linear else []
        for v, c in sorted(self.linear.items()):
            s.append(f"({c!r})*{v}")
        return " + ".join(s)


# ---------------------------------------------------------------------------
# derived constants


def param_symbols(ell: int):
    """Symbolic (k, [c_1, ..., c_{ell-1}]) as ParamPolys."""
    k = ParamPoly.var(ell, "k")
    c = [ParamPoly.var(ell, f"c{m}") for m in range(1, ell)]
    return k, c


def compute_C(c, ell: int | None = None, c_sign: int = 1) -> list[ParamPoly]:
    """C_0..C_{ell-1} from c_1..c_{ell-1} by direct substitution.

    ``c_sign`` = -1 feeds -c instead of c (the calibrated convention).
    """
    if ell is None:
        ell = len(c) + 1
    if len(c) != ell - 1:
        raise ValueError(f"need {ell - 1} values of c, got {len(c)}")
    cs = [ParamPoly.coerce(ell, v) * c_sign for v in c]
    inv_ell = Fraction(1, ell)
    total = ParamPoly.zero(ell)
    for v in cs:
        total = total + v
    C = [ParamPoly.const(ell, Fraction(1 - ell, ell)) - total * inv_ell]
    for i in range(1, ell):
        s = ParamPoly.zero(ell)
        for m, v in enumerate(cs, start=1):
            s = s + v * zeta(ell, m * i)
        C.append(ParamPoly.const(ell, inv_ell) - s * inv_ell)
    return C


def compute_sigma_t(C) -> tuple[ParamPoly, ParamPoly]:
    ell = len(C)
    Cp = [ParamPoly.coerce(ell, v) for v in C]
    t = ParamPoly.zero(ell)
    for s, v in enumerate(Cp):
        t = t + v * s
    return t * Fraction(1, ell), t


def compute_a_b(C) -> tuple[list[ExponentExpr], list[ExponentExpr]]:
    """Kernel exponents a_i = -ell * sum_{s<=i} C_s and b_i = ell*sigma + a_i."""
    ell = len(C)
    Cp = [ParamPoly.coerce(ell, v) for v in C]
    _, t = compute_sigma_t(Cp)
    a = []
    partial = ParamPoly.zero(ell)
    for v in Cp:
        partial = partial + v
        a.append(ExponentExpr.from_parampoly(partial * (-ell)))
    shift = ExponentExpr.from_parampoly(t)
    b = [shift + ai for ai in a]
    return a, b


def c_from_C(C, c_sign: int = 1) -> list[CycRat]:
    """Invert ``compute_C`` for exact numeric C with sum(C) == 0."""
    ell = len(C)
    Cf = [Fraction(v) for v in C]
    if sum(Cf) != 0:
        raise ValueError("C must sum to zero")
    # d_i = sum_m zeta^{m i} c'_m
    d = [Fraction(1 - ell) - ell * Cf[0]] + [1 - ell * Cf[i] for i in range(1, ell)]
    out = []
    for m in range(1, ell):
        s = CycRat.rational(ell, 0)
        for i, di in enumerate(d):
            s = s + zeta(ell, -m * i) * di
        out.append(s * Fraction(c_sign, ell))
    return out
