from fractions import Fraction

import pytest

from cyclobessel.dunkl import (
    FROZEN_CONVENTION,
    AlgebraWord,
    Convention,
    DunklParams,
    build_dunkl,
    calibrate,
    commutator,
    dprime,
    i_embedding_check,
    j_embedding_check,
    kernel_check,
    reflection_part,
    spherical_power,
    symbol,
    theta,
    verify_relations,
)
from cyclobessel.opalg import Operator, RatFn, apply, monomial
from cyclobessel.scalars import ParamPoly


def mono(n, ell, *e):
    return monomial(n, ell, e)


class TestBuild:
    def test_rank_one_is_plain_derivative(self):
        p = DunklParams(1, 1)
        assert build_dunkl(0, p) == Operator.partial(1, 1, 0)

    def test_ell2_on_x(self):
        p = DunklParams(1, 2)
        c1 = p.c[0]
        # d/dx x = 1 plus the cyclic term c1/(x(z-1)) (alpha - 1) x = c1
        assert apply(build_dunkl(0, p), mono(1, 2, 1)) == {(0,): c1 + 1}

    def test_kills_constants(self):
        for n, ell in [(1, 3), (2, 2), (3, 1)]:
            p = DunklParams(n, ell)
            for i in range(n):
                assert apply(build_dunkl(i, p), mono(n, ell, *([0] * n))) == {}

    def test_index_range(self):
        with pytest.raises(IndexError):
            build_dunkl(2, DunklParams(2, 2))

    def test_c_length_checked(self):
        with pytest.raises(ValueError):
            DunklParams(1, 3, c=[1])

    @pytest.mark.parametrize("n, ell", [(2, 1), (2, 2), (2, 3)])
    def test_dunkl_commute(self, n, ell):
        p = DunklParams(n, ell)
        d0, d1 = build_dunkl(0, p), build_dunkl(1, p)
        for e in [(2, 1), (ell, 0), (3, 3), (1, 2 * ell)]:
            q = mono(n, ell, *e)
            assert apply(d0, apply(d1, q)) == apply(d1, apply(d0, q))

    def test_equivariance(self):
        p = DunklParams(2, 3)
        s = Operator.group(p.s(0, 1))
        assert s * build_dunkl(0, p) == build_dunkl(1, p) * s


class TestTheta:
    def test_empty_word(self):
        p = DunklParams(2, 2)
        assert theta(AlgebraWord.one(), p) == Operator.identity(2, 2)

    def test_x_times_y(self):
        p = DunklParams(2, 2)
        w = AlgebraWord.x(0) * AlgebraWord.y(0)
        assert theta(w, p) == Operator.x(2, 2, 0) * build_dunkl(0, p)

    def test_ys_commute(self):
        p = DunklParams(2, 2)
        assert theta(commutator(AlgebraWord.y(0), AlgebraWord.y(1)), p) == Operator.zero(2, 2)

    def test_group_letter(self):
        p = DunklParams(1, 3)
        g = p.alpha(0)
        assert theta(AlgebraWord.g(g), p) == Operator.group(g)


class TestRelations:
    def test_rank_one_commutator(self):
        p = DunklParams(1, 2)
        c1 = p.c[0]
        op = theta(commutator(AlgebraWord.y(0), AlgebraWord.x(0)), p)
        assert apply(op, mono(1, 2, 0)) == {(0,): c1 + 1}
        assert apply(op, mono(1, 2, 1)) == {(1,): 1 - c1}

    @pytest.mark.parametrize("n, ell", [(1, 2), (2, 1), (2, 2), (1, 3)])
    def test_all_families_pass(self, n, ell):
        rep = verify_relations(DunklParams(n, ell))
        assert rep["status"] == "PASS", rep["families"]
        for rec in rep["records"]:
            assert rec["status"] in ("PASS", "SKIP")

    def test_group_family_skipped_for_trivial_group(self):
        rep = verify_relations(DunklParams(1, 1))
        assert rep["families"]["group"] == "SKIP"
        assert rep["status"] == "PASS"

    def test_variant_label_ell2(self):
        assert verify_relations(DunklParams(2, 2))["yx_off_variant"] == "eps^m"

    def test_wrong_convention_fails(self):
        bad = DunklParams(1, 3, convention=Convention(alpha_sign=-1, c_sign=-1))
        assert kernel_check(bad)["status"] == "FAIL"

    @pytest.mark.slow
    def test_n2_ell3(self):
        rep = verify_relations(DunklParams(2, 3))
        assert rep["status"] == "PASS"
        assert rep["yx_off_variant"] == "eps^-m"


class TestSpherical:
    def test_ell2_restriction(self):
        p = DunklParams(1, 2)
        c1 = p.c[0]
        expected = Operator.partial(1, 2, 0, 2) + Operator.coefficient(RatFn(1, 2, {(-1,): c1})) * Operator.partial(
            1, 2, 0
        )
        assert spherical_power(1, p) == expected

    def test_power_is_square_for_n1(self):
        p = DunklParams(1, 2, c=[Fraction(1, 3)])
        s1, s2 = spherical_power(1, p), spherical_power(2, p)
        for e in (4, 6, 8):
            q = mono(1, 2, e)
            assert apply(s2, q) == apply(s1, apply(s1, q))

    def test_r_positive(self):
        with pytest.raises(ValueError):
            spherical_power(0, DunklParams(1, 2))

    def test_n2_image_is_invariant(self):
        # the internal contract checks run at construction
        spherical_power(1, DunklParams(2, 2, k=Fraction(1, 3), c=[Fraction(1, 5)]))


class TestDPrime:
    def test_ell2_symbol_and_roots(self):
        p = DunklParams(1, 2)
        d = dprime(p)
        assert d.agree
        r, c1 = ParamPoly.var(2, "r"), p.c[0]
        assert d.symbol == c1 * r - r + r * r
        assert d.symbol.subs({"r": 0}).is_zero()
        assert d.symbol.subs({"r": 1 - c1}).is_zero()

    @pytest.mark.parametrize("ell", [1, 2, 3, 4])
    def test_factorized_form(self, ell):
        assert dprime(DunklParams(1, ell)).agree

    def test_shift(self):
        _, shift = symbol(dprime(DunklParams(1, 3)).operator)
        assert shift == -3


class TestCalibration:
    def test_unique_and_frozen(self):
        rep = calibrate()
        assert rep["unique"]
        assert rep["matches_frozen"]
        assert rep["chosen"] == FROZEN_CONVENTION.as_dict()

    @pytest.mark.parametrize("ell", [1, 2, 3, 4])
    def test_kernel(self, ell):
        assert kernel_check(DunklParams(1, ell))["status"] == "PASS"


class TestEmbeddings:
    @pytest.mark.parametrize("n, ell", [(2, 2), (2, 3)])
    def test_j(self, n, ell):
        assert j_embedding_check(DunklParams(n, ell), degree_bound=2 * ell)["status"] == "PASS"

    def test_i_minus_sign_is_theta_0c(self):
        rep = i_embedding_check(DunklParams(2, 2))
        assert rep["passing_sign"] == "-"
        assert rep["variants"]["-"]["images_equal_theta_0c"]
        assert rep["plus_status"] == "FAIL"

    def test_i_ell1_image_is_partial(self):
        p = DunklParams(2, 1)
        minus = build_dunkl(0, p) - reflection_part(0, p) * p.k
        assert minus == Operator.partial(2, 1, 0)

    def test_i_image_commutes_with_other_x(self):
        p = DunklParams(2, 2)
        k0 = DunklParams(2, 2, k=0, c=p.c)
        y = build_dunkl(0, k0)
        assert Operator.x(2, 2, 1) * y == y * Operator.x(2, 2, 1)
