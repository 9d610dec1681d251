import itertools
import math

import numpy as np
import pytest
from scipy import special

from cyclobessel.quad import (
    HaarSampler,
    QuadEstimate,
    RegularityError,
    TorusRule,
    cross_check,
    haar_unitary,
    m_k,
    matching_series_n1,
    mc_bessel,
    mc_integral,
    min_occupation,
    permanent,
    torus_bessel_n1,
    torus_integral_n1,
    vanishing_order,
)
from cyclobessel.series import eval_n1

EPS = np.finfo(float).eps


def brute_permanent(a):
    n = a.shape[0]
    return sum(math.prod(a[i, p[i]] for i in range(n)) for p in itertools.permutations(range(n)))


class TestTorus:
    def test_rule_exact_on_low_modes(self):
        rule = TorusRule(2, 8)
        assert abs(rule.integrate(lambda phi: np.exp(2j * np.pi * (3 * phi[:, 0] - phi[:, 1])))) < 1e-14
        assert rule.integrate(lambda phi: np.ones(len(phi))) == pytest.approx(1)

    def test_ell1(self):
        assert torus_integral_n1(1, [0], 1.0, 8).value == pytest.approx(math.e, rel=1e-14)

    def test_ell2_I0(self):
        v = torus_bessel_n1(2, [0, 0], 1, 1, 32).value
        assert v.real == pytest.approx(special.iv(0, 2.0), rel=1e-14)
        assert v.real == pytest.approx(2.279585302, abs=1e-9)

    def test_ell2_I1(self):
        # t = 1, so the normalization divides by lam x
        v = torus_bessel_n1(2, [-1, 1], 1, 1, 32).value
        assert v.real == pytest.approx(special.iv(1, 2.0), rel=1e-13)
        assert v.real == pytest.approx(1.590636855, abs=1e-9)

    def test_spectral_convergence(self):
        ref = special.iv(0, 2.0)
        errs = {N: abs(torus_bessel_n1(2, [0, 0], 1, 1, N).value - ref) for N in range(4, 65, 2)}
        assert errs[48] < 1e-10
        floor = 16 * EPS * ref
        Ns = [N for N in errs if N >= 16]
        for a, b in zip(Ns, Ns[1:]):
            assert errs[b] <= max(errs[a], floor)

    @pytest.mark.parametrize("C", [[0], [0, 0], [-1, 1], [2, -2], [-1, 0, 1], [1, 1, -2]])
    def test_vanishing_order_is_occupation(self, C):
        assert vanishing_order(len(C), C, 1.0) == sum(min_occupation(C))

    def test_vanishing_order_values(self):
        cases = [[0], [0, 0], [-1, 1], [-1, 0, 1]]
        assert [vanishing_order(len(C), C, 1.0) for C in cases] == [0, 0, 1, 2]

    def test_vanishing_order_small_x(self):
        # the unnormalized integral scales like x^{order} near 0
        C = [-1, 0, 1]
        a = torus_integral_n1(3, C, 1e-3, 16).value
        b = torus_integral_n1(3, C, 2e-3, 16).value
        assert abs(b / a) == pytest.approx(4, rel=1e-2)

    def test_zero_argument(self):
        assert torus_bessel_n1(2, [0, 0], 1, 0, 8).value == 1
        with pytest.raises(ValueError):
            torus_bessel_n1(2, [-1, 1], 1, 0, 8)

    def test_bad_C(self):
        with pytest.raises(ValueError):
            torus_integral_n1(2, [1, 1], 1.0, 8)
        with pytest.raises(ValueError):
            torus_bessel_n1(2, [1, -1], 1.0, 1.0, 8)

    @pytest.mark.parametrize("C", [[0, 0], [-1, 1], [-2, 2]])
    @pytest.mark.parametrize("x", [0.3, 1.0, 1.7])
    def test_ell2_matches_series(self, C, x):
        q = torus_bessel_n1(2, C, 0.8, x, 48).value
        s, _ = eval_n1(matching_series_n1(2, C, 0.8, 60), x)
        assert q == pytest.approx(s, rel=1e-12)

    def test_multinomial_normalization_ell3(self):
        C, x = [-1, 0, 1], 0.9
        q = torus_bessel_n1(3, C, 1.0, x, 32, normalization="multinomial").value
        s, _ = eval_n1(matching_series_n1(3, C, 1.0, 60), x)
        assert q == pytest.approx(s, rel=1e-12)


class TestHaar:
    def test_unitary(self):
        s = HaarSampler(3, seed=1)
        g = s.chunk_draws(0, 64)
        eye = np.eye(3)
        assert np.max(np.abs(g @ np.conj(np.swapaxes(g, -1, -2)) - eye)) < 1e-12

    def test_draw_depends_on_index_only(self):
        a = HaarSampler(2, seed=5, chunk=16)
        assert np.array_equal(haar_unitary(a, 21), a.chunk_draws(1)[5])
        assert np.array_equal(haar_unitary(a, 21), HaarSampler(2, seed=5, chunk=16).draw(21))

    @pytest.mark.parametrize("n", [2, 3])
    def test_moments(self, n):
        g = np.concatenate([HaarSampler(n, seed=3).chunk_draws(c) for c in range(25)])
        v = np.abs(g[:, 0, 0]) ** 2
        assert len(v) >= 100_000
        assert abs(v.mean() - 1 / n) < 3 * v.std() / np.sqrt(len(v))
        v4 = v**2
        assert abs(v4.mean() - 2 / (n * (n + 1))) < 3 * v4.std() / np.sqrt(len(v4))
        # phases of the diagonal are uniform
        assert abs(np.mean(g[:, 1, 1])) < 3 / np.sqrt(len(v))


class TestMk:
    @pytest.mark.parametrize("n", [1, 2, 3, 4])
    def test_m1_is_permanent(self, n):
        rng = np.random.default_rng(n)
        a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        assert m_k(a, 1) == pytest.approx(brute_permanent(a), rel=1e-12)
        assert permanent(a) == pytest.approx(brute_permanent(a), rel=1e-12)

    def test_identity(self):
        for k in range(4):
            assert m_k(np.eye(3), k) == pytest.approx(1)

    def test_n1(self):
        assert m_k(np.array([[2.0]]), 3) == pytest.approx(8)

    def test_k2_n2_brute(self):
        # coefficient of y1^2 y2^2 in (a y1 + c y2)^2 (b y1 + d y2)^2
        a, b, c, d = 1.3, -0.7, 0.4, 2.1
        expected = a**2 * d**2 + 4 * a * b * c * d + b**2 * c**2
        assert m_k(np.array([[a, b], [c, d]]), 2) == pytest.approx(expected)

    def test_batched(self):
        g = HaarSampler(2, 0).chunk_draws(0, 5)
        assert np.allclose(m_k(g, 2), [m_k(h, 2) for h in g])


class TestMonteCarlo:
    @pytest.mark.parametrize("C", [[0, 0], [-1, 1]])
    def test_n1_matches_torus(self, C):
        est = mc_integral(1, 2, 0, C, [0.9], [1.1], 100_000, seed=2)
        ref = torus_integral_n1(2, C, 0.99, 32).value
        assert abs(est.value - ref) < 4 * est.stderr

    def test_reproducible_and_worker_independent(self):
        args = (2, 2, 1, [-1, 1], [1.0, 1.5], [0.6, 0.9], 20_000)
        a = mc_integral(*args, seed=11)
        b = mc_integral(*args, seed=11)
        c = mc_integral(*args, seed=11, workers=4)
        assert a == b == c
        assert mc_integral(*args, seed=12).value != a.value

    def test_permutation_invariance(self):
        a = mc_integral(2, 2, 0, [0, 0], [1.0, 1.5], [0.6, 0.9], 100_000, seed=4)
        b = mc_integral(2, 2, 0, [0, 0], [1.0, 1.5], [0.9, 0.6], 100_000, seed=5)
        assert abs(a.value - b.value) < 4 * math.hypot(a.stderr, b.stderr)

    def test_stderr_scaling(self):
        args = (2, 1, 0, [0], [1.0, 2.0], [0.3, 0.7])
        a = mc_integral(*args, 10_000, seed=1)
        b = mc_integral(*args, 40_000, seed=1)
        assert 0.4 < b.stderr / a.stderr < 0.6

    def test_rank1_hciz(self):
        # k = 0 raw integral is det[e^{x_i lam_j}] / (V(x) V(lam)) for U(2)
        x, lam = [0.3, 0.7], [1.0, 2.0]
        est = mc_integral(2, 1, 0, [0], lam, x, 100_000, seed=8)
        det = np.exp(x[0] * lam[0] + x[1] * lam[1]) - np.exp(x[0] * lam[1] + x[1] * lam[0])
        ref = det / ((x[0] - x[1]) * (lam[0] - lam[1]))
        assert abs(est.value - ref) < 4 * est.stderr

    def test_regularity(self):
        with pytest.raises(RegularityError):
            mc_bessel(2, 2, 1, [0, 0], [1, 2], [0.5, -0.5], 10, seed=0)
        with pytest.raises(RegularityError):
            mc_bessel(2, 2, 1, [0, 0], [1, 2], [0.0, 0.5], 10, seed=0)
        with pytest.raises(RegularityError):
            mc_bessel(2, 2, 1, [0, 0], [1, -1], [0.3, 0.5], 10, seed=0)


class TestCrossCheck:
    def test_single_point(self):
        rep = cross_check(lambda x: 2.0, [(0.5, QuadEstimate(6.0 + 0j, 0.1, 100))])
        assert rep["constant"] == [3.0, 0.0]
        assert rep["points"][0]["z"] == 0
        assert rep["status"] == "PASS"

    def test_deterministic_expected(self):
        pts = [(x, QuadEstimate(complex(math.exp(x)), 0.0, 8)) for x in (0.1, 0.5)]
        assert cross_check(math.exp, pts, expected=1)["status"] == "PASS"
        assert cross_check(math.exp, pts, expected=2)["status"] == "FAIL"

    def test_stochastic_outlier(self):
        pts = [(0.1, QuadEstimate(1.0 + 0j, 0.01, 100)), (0.2, QuadEstimate(2.0 + 0j, 0.01, 100))]
        rep = cross_check(lambda x: 1.0, pts)
        assert rep["mode"] == "stochastic"
        assert rep["status"] == "FAIL"
