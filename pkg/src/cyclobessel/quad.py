"""Integral representations of the cyclotomic Bessel function.

n = 1: product trapezoidal rule on the torus [0,1)^l.
n >= 2: Monte Carlo over U(n)^l with Haar samples.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from itertools import product as iproduct

import numpy as np

from .series import eval_n1, series_n1

__all__ = [
    "QuadEstimate",
    "TorusRule",
    "HaarSampler",
    "haar_unitary",
    "torus_integral_n1",
    "torus_bessel_n1",
    "min_occupation",
    "vanishing_order",
    "m_k",
    "permanent",
    "mc_integral",
    "mc_bessel",
    "cross_check",
    "matching_series_n1",
    "RegularityError",
]

CHUNK = 4096


class RegularityError(ValueError):
    pass


@dataclass(frozen=True)
class QuadEstimate:
    value: complex
    stderr: float
    samples_or_nodes: int
    seed: int | None = None

    def as_dict(self) -> dict:
        return {
            "value": [self.value.real, self.value.imag],
            "stderr": self.stderr,
            "nodes_or_samples": self.samples_or_nodes,
            "seed": self.seed,
        }


# ---------------------------------------------------------------------------
# torus rule


@dataclass(frozen=True)
class TorusRule:
    ell: int
    N: int

    def nodes_1d(self):
        return np.arange(self.N) / self.N

    def integrate(self, f, chunk_axis0: bool = True) -> complex:
        """Mean of f over the N^l grid; f takes an array of shape (..., l)."""
        ax = self.nodes_1d()
        if self.ell == 1:
            return complex(np.mean(f(ax[:, None])))
        total = 0j
        rest = np.stack(np.meshgrid(*([ax] * (self.ell - 1)), indexing="ij"), axis=-1).reshape(-1, self.ell - 1)
        for a in ax:
            pts = np.concatenate([np.full((rest.shape[0], 1), a), rest], axis=1)
            total += np.sum(f(pts))
        return total / self.N**self.ell


def _exponent_n1(phi, C, z):
    ell = phi.shape[-1]
    nxt = np.roll(phi, -1, axis=-1)
    lin = 2j * np.pi * (phi @ np.asarray(C, dtype=float))
    return lin + z * np.sum(np.exp(2j * np.pi * (phi - nxt)), axis=-1)


def torus_integral_n1(ell: int, C, z, N: int) -> QuadEstimate:
    """Unnormalized integral of exp(2 pi i C.phi + z sum_j e^{2 pi i (phi_j - phi_{j+1})})."""
    C = [int(v) for v in C]
    if len(C) != ell or sum(C) != 0:
        raise ValueError("C must be an integer vector of length ell summing to 0")
    rule = TorusRule(ell, N)
    val = rule.integrate(lambda phi: np.exp(_exponent_n1(phi, C, complex(z))))
    return QuadEstimate(val, 0.0, N**ell)


def min_occupation(C) -> list[int]:
    """Minimal nonnegative n with n_i - n_{i-1} = -C_i (indices mod l)."""
    ell = len(C)
    n = [0]
    for i in range(1, ell):
        n.append(n[-1] - int(C[i]))
    lo = min(n)
    return [v - lo for v in n]


def _t(C) -> int:
    return sum(s * int(v) for s, v in enumerate(C))


def torus_bessel_n1(ell: int, C, lam, x, N: int, normalization: str = "factorial") -> QuadEstimate:
    """Normalized integral; "factorial" uses t!/(lam x)^t, "multinomial" uses prod u_j!/(lam x)^{sum u}."""
    t = _t(C)
    if t < 0:
        raise ValueError("t = sum s C_s must be >= 0")
    z = complex(lam) * complex(x)
    u = min_occupation(C)
    power = t if normalization == "factorial" else sum(u)
    if z == 0:
        if power > 0:
            raise ValueError("lam*x = 0 with t > 0: use the series value at 0")
        return QuadEstimate(1 + 0j, 0.0, 0)
    raw = torus_integral_n1(ell, C, z, N)
    if normalization == "factorial":
        norm = math.factorial(t)
    elif normalization == "multinomial":
        norm = math.prod(math.factorial(v) for v in u)
    else:
        raise ValueError(f"unknown normalization {normalization!r}")
    return QuadEstimate(raw.value * norm / z**power, 0.0, raw.samples_or_nodes)


def vanishing_order(ell: int, C, lam, N: int = 16, max_order: int = 64) -> int:
    """First t' with nonzero x^{t'} Taylor coefficient of the unnormalized integral.

    The coefficient is lam^{t'}/t'! times the integral of
    e^{2 pi i C.phi} (sum_j e^{2 pi i nu_j.phi})^{t'}, an integer count that the
    torus rule gives exactly once the grid exceeds the trigonometric degree.
    """
    C = [int(v) for v in C]
    if lam == 0:
        raise ValueError("lam must be nonzero")
    cmax = max(abs(v) for v in C)
    for order in range(max_order + 1):
        rule = TorusRule(ell, max(N, order + cmax + 1))

        def f(phi, order=order):
            nxt = np.roll(phi, -1, axis=-1)
            s = np.sum(np.exp(2j * np.pi * (phi - nxt)), axis=-1)
            return np.exp(2j * np.pi * (phi @ np.asarray(C, dtype=float))) * s**order

        count = rule.integrate(f)
        if abs(count) > 0.5:
            return order
    raise ValueError(f"no nonvanishing coefficient up to order {max_order}")


def matching_series_n1(ell: int, C, lam, M: int):
    """Series with the same function as the normalized integral.

    The integral's spectral parameter lam corresponds to the eigenvalue
    parameter l*lam, and its exponent vector C to -C for the series.
    """
    return series_n1(ell, [-v for v in C], ell * lam, M)


# ---------------------------------------------------------------------------
# Haar sampling


class HaarSampler:
    """Haar unitaries; draw i depends only on (seed, i)."""

    def __init__(self, n: int, seed: int, chunk: int = CHUNK):
        self.n = n
        self.seed = int(seed)
        self.chunk = chunk

    def rng(self, chunk_id: int, stream: int = 0):
        return np.random.default_rng(np.random.SeedSequence([self.seed, chunk_id, stream]))

    def batch(self, size: int, rng) -> np.ndarray:
        n = self.n
        z = (rng.standard_normal((size, n, n)) + 1j * rng.standard_normal((size, n, n))) / np.sqrt(2)
        q, r = np.linalg.qr(z)
        d = np.diagonal(r, axis1=-2, axis2=-1)
        ph = d / np.abs(d)
        return q * ph[:, None, :]

    def chunk_draws(self, chunk_id: int, size: int | None = None) -> np.ndarray:
        return self.batch(size or self.chunk, self.rng(chunk_id))

    def draw(self, index: int) -> np.ndarray:
        cid, off = divmod(index, self.chunk)
        return self.chunk_draws(cid)[off]


def haar_unitary(sampler: HaarSampler, index: int = 0) -> np.ndarray:
    return sampler.draw(index)


# ---------------------------------------------------------------------------
# m_k


def permanent(a) -> complex:
    """Ryser's formula."""
    a = np.asarray(a)
    n = a.shape[0]
    total = 0j
    for mask in range(1, 1 << n):
        cols = [j for j in range(n) if mask >> j & 1]
        rows = a[:, cols].sum(axis=1)
        total += (-1) ** len(cols) * np.prod(rows)
    return (-1) ** n * total


@lru_cache(maxsize=None)
def _tables(n: int, k: int):
    """n x n nonnegative integer matrices with all row and column sums k, with weights."""

    def compositions(total, parts):
        if parts == 1:
            yield (total,)
            return
        for first in range(total + 1):
            for rest in compositions(total - first, parts - 1):
                yield (first,) + rest

    out = []
    cols = list(compositions(k, n))

    def rec(j, colsum, acc):
        if j == n:
            if all(v == k for v in colsum):
                out.append(tuple(acc))
            return
        for col in cols:
            new = [a + b for a, b in zip(colsum, col)]
            if max(new) <= k:
                rec(j + 1, new, acc + [col])

    rec(0, [0] * n, [])
    tables = []
    for cols_ in out:
        A = np.array(cols_).T  # A[i, j]: power of g_ij
        w = math.factorial(k) ** n / math.prod(math.factorial(int(v)) for v in A.flat)
        tables.append((A, w))
    return tables


def m_k(g, k: int):
    """Coefficient of (y_1..y_n)^k in prod_j (sum_i g_ij y_i)^k; g may be batched."""
    g = np.asarray(g)
    if k == 0:
        return np.ones(g.shape[:-2], dtype=complex) if g.ndim > 2 else 1 + 0j
    total = 0
    for A, w in _tables(g.shape[-1], k):
        total = total + w * np.prod(g**A, axis=(-2, -1))
    return total


# ---------------------------------------------------------------------------
# Monte Carlo


def _regular(x, ell):
    x = [float(v) for v in x]
    if any(v == 0 for v in x):
        return False
    p = [v**ell for v in x]
    return all(abs(p[i] - p[j]) > 1e-14 for i in range(len(x)) for j in range(i + 1, len(x)))


def _chunk_stats(n, ell, k, C, lam, x, sampler, cid, size):
    rng = sampler.rng(cid)
    gs = [sampler.batch(size, rng) for _ in range(ell)]
    X = np.asarray(x, dtype=complex)
    L = np.asarray(lam, dtype=complex)
    E = 0
    for i in range(ell):
        a = gs[i]
        b = gs[(i + 1) % ell]
        # tr(diag(x) a diag(lam) b^H) = sum_{p,q} x_p a_pq lam_q conj(b_pq)
        E = E + np.einsum("p,spq,q,spq->s", X, a, L, np.conj(b))
    w = np.exp(E) * m_k(gs[0], k)
    for i in range(ell):
        d = np.linalg.det(gs[i])
        Ci = int(C[i])
        w = w * (d**Ci if Ci >= 0 else np.conj(d) ** (-Ci))
    mean = w.mean()
    m2 = float(np.sum(np.abs(w - mean) ** 2))
    return size, mean, m2


def _merge(a, b):
    na, ma, sa = a
    nb, mb, sb = b
    n = na + nb
    delta = mb - ma
    return n, ma + delta * nb / n, sa + sb + abs(delta) ** 2 * na * nb / n


def _pairwise(stats):
    while len(stats) > 1:
        nxt = [_merge(stats[i], stats[i + 1]) for i in range(0, len(stats) - 1, 2)]
        if len(stats) % 2:
            nxt.append(stats[-1])
        stats = nxt
    return stats[0]


def mc_integral(n: int, ell: int, k: int, C, lam, x, samples: int, seed: int, workers: int = 1,
                chunk: int = CHUNK) -> QuadEstimate:
    """Haar average of exp(sum_i tr(diag(x) g_i diag(lam) g_{i+1}^H)) m_k(g_0) prod det(g_i)^{C_i}."""
    if len(C) != ell:
        raise ValueError("C must have length ell")
    sampler = HaarSampler(n, seed, chunk)
    sizes = []
    left = samples
    while left > 0:
        sizes.append(min(chunk, left))
        left -= sizes[-1]

    def job(cid):
        return _chunk_stats(n, ell, k, C, lam, x, sampler, cid, sizes[cid])

    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            stats = list(ex.map(job, range(len(sizes))))
    else:
        stats = [job(c) for c in range(len(sizes))]
    S, mean, m2 = _pairwise(stats)
    var = m2 / (S - 1) if S > 1 else 0.0
    return QuadEstimate(complex(mean), math.sqrt(var / S), S, seed)


def delta_kc(x, ell: int, k: int, C) -> float:
    """delta^{k+1} delta_Gamma^t with delta = prod_{i<j}(x_i^l - x_j^l)."""
    d = 1.0
    for i in range(len(x)):
        for j in range(i + 1, len(x)):
            d *= x[i] ** ell - x[j] ** ell
    return d ** (k + 1) * math.prod(x) ** _t(C)


def mc_bessel(n: int, ell: int, k: int, C, lam, x, samples: int, seed: int, workers: int = 1) -> QuadEstimate:
    """Monte Carlo integral divided by delta_{k,c}(x)."""
    x = [float(v) for v in x]
    if len(x) != n or not _regular(x, ell):
        raise RegularityError(f"x = {x} is not regular")
    lam_c = [complex(v) for v in lam]
    if any(v == 0 for v in lam_c) or any(
        abs(lam_c[i] ** ell - lam_c[j] ** ell) < 1e-14 for i in range(n) for j in range(i + 1, n)
    ):
        raise RegularityError("lam is not regular")
    raw = mc_integral(n, ell, k, C, lam, x, samples, seed, workers)
    d = delta_kc(x, ell, k, C)
    return QuadEstimate(raw.value / d, raw.stderr / abs(d), raw.samples_or_nodes, seed)


# ---------------------------------------------------------------------------
# cross-check


def cross_check(series_value_fn, quad_points, expected=None, tol: float = 1e-8, zmax: float = 3.0) -> dict:
    """Fit quad = K * series over the points.

    quad_points: list of (x, QuadEstimate).  Monte Carlo estimates are judged by
    z-scores; deterministic ones by |K - expected| and residuals within tol.
    """
    xs = [p for p, _ in quad_points]
    q = np.array([e.value for _, e in quad_points], dtype=complex)
    se = np.array([e.stderr for _, e in quad_points], dtype=float)
    s = np.array([complex(series_value_fn(p)) for p in xs], dtype=complex)
    stochastic = bool(np.all(se > 0))
    w = 1 / se**2 if stochastic else np.ones_like(se)
    K = complex(np.sum(w * np.conj(s) * q) / np.sum(w * np.abs(s) ** 2))
    resid = q - K * s
    if len(xs) == 1:
        resid = np.zeros(1, dtype=complex)
    z = np.abs(resid) / se if stochastic else np.zeros(len(xs))
    if stochastic:
        ok = bool(np.all(z < zmax))
    else:
        ok = bool(np.all(np.abs(resid) <= tol))
        if expected is not None:
            ok = ok and abs(K - expected) <= tol
    return {
        "constant": [K.real, K.imag],
        "expected_constant": None if expected is None else [complex(expected).real, complex(expected).imag],
        "points": [
            {
                "x": list(np.atleast_1d(np.asarray(p, dtype=float))),
                "series": [sv.real, sv.imag],
                "quad": [qv.real, qv.imag],
                "stderr": float(sev),
                "residual": [r.real, r.imag],
                "z": float(zv),
            }
            for p, sv, qv, sev, r, zv in zip(xs, s, q, se, resid, z)
        ],
        "mode": "stochastic" if stochastic else "deterministic",
        "status": "PASS" if ok else "FAIL",
    }
