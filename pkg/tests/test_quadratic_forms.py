import numpy as np
import pytest
from fractions import Fraction

from kgresonance.quadratic_forms import (
    NonlinearSystem,
    ParseError,
    V,
    W,
    circle_sample,
    evaluate,
    make_form,
    parse_nonlinearity,
    quadratic_part,
)


def random_form(rng, n_terms=4):
    factors = [V(1), V(2)] + [W(k, a) for k in (1, 2) for a in (0, 1, 2)]
    terms = []
    for _ in range(n_terms):
        f1, f2 = rng.choice(len(factors), size=2)
        coeff = Fraction(int(rng.integers(-8, 9)), int(rng.integers(1, 7)))
        terms.append((factors[f1], factors[f2], coeff))
    return make_form(terms)


def random_args(rng):
    v = rng.normal(size=2)
    w = rng.normal(size=(2, 3))
    return v, w


class TestMakeForm:
    def test_yukawa(self):
        q = make_form([(V(1), V(2), 1.0)])
        assert q.coefficient(V(1), V(2)) == 1
        assert q.coefficient(V(2), V(1)) == 1  # canonical pair

    def test_empty_is_zero(self):
        q = make_form([])
        assert q.is_zero
        assert evaluate(q, [1.0, 2.0], np.ones((2, 3))) == 0.0

    def test_merge(self):
        q = make_form([(V(1), V(1), 1), (V(1), V(1), 2)])
        assert q.terms == ((V(1), V(1), Fraction(3)),)

    def test_swap_invariance(self):
        a = make_form([(V(1), W(2, 0), Fraction(1, 3))])
        b = make_form([(W(2, 0), V(1), Fraction(1, 3))])
        assert a == b

    def test_invalid_index_reports_position(self):
        with pytest.raises(ValueError, match="position 1"):
            make_form([(V(1), V(2), 1), ("v3", V(1), 1)])
        with pytest.raises(ValueError, match="got 3"):
            V(3)
        with pytest.raises(ValueError, match="got 5"):
            W(1, 5)
        with pytest.raises(ValueError):
            V(0)

    def test_nonfinite_coefficient_rejected(self):
        with pytest.raises(ValueError):
            make_form([(V(1), V(1), float("nan"))])


class TestEvaluate:
    def test_product(self):
        q = make_form([(V(1), V(2), 1)])
        assert evaluate(q, [1.0, 2.0], np.zeros((2, 3))) == 2.0

    def test_square(self):
        q = make_form([(V(1), V(1), 1)])
        assert evaluate(q, [3.0, 0.0], np.zeros((2, 3))) == 9.0

    def test_homogeneity(self):
        rng = np.random.default_rng(7)
        lam = 0.37
        for _ in range(25):
            q = random_form(rng)
            v, w = random_args(rng)
            direct = evaluate(q, lam * v, lam * w)
            scaled = lam**2 * evaluate(q, v, w)
            assert direct == pytest.approx(scaled, rel=1e-13, abs=1e-13)


class TestQuadraticPart:
    def test_filters_cubic(self):
        q = quadratic_part([((V(1), V(2)), 1), ((V(1), V(1), V(1)), 1)])
        assert q == make_form([(V(1), V(2), 1)])

    def test_pure_quadratic(self):
        q = quadratic_part([((V(1), V(1)), 1)])
        assert q == make_form([(V(1), V(1), 1)])

    def test_rejects_low_degree(self):
        with pytest.raises(ValueError, match="degree"):
            quadratic_part([((V(1),), 1)])
        with pytest.raises(ValueError, match="degree"):
            quadratic_part([((), 2)])

    def test_scaling_limit(self):
        # quadratic part must match lim lambda^-2 F(lambda .) numerically
        terms = [((V(1), W(2, 0)), 1), ((V(1), V(1), V(2)), 1)]
        q = quadratic_part(terms)
        assert q == make_form([(V(1), W(2, 0), 1)])
        rng = np.random.default_rng(11)
        v, w = random_args(rng)

        def full_poly(v, w):
            total = 0.0
            vals = {V(1): v[0], V(2): v[1], W(2, 0): w[1][0]}
            for factors, c in terms:
                prod = c
                for f in factors:
                    prod *= vals[f]
                total += prod
            return total

        for lam in (1e-4, 1e-5, 1e-6):
            approx = full_poly(lam * v, lam * w) / lam**2
            exact = evaluate(q, v, w)
            assert approx == pytest.approx(exact, rel=10 * lam)


class TestCircleSample:
    def test_theta_zero(self):
        q = make_form([(V(1), V(2), 1)])
        val = circle_sample(q, (1.3, 0.2, -0.1), 0.0, (1.0, 2.0))
        assert val == pytest.approx(1.0, abs=1e-15)

    def test_derivative_product_zero(self):
        q = make_form([(W(1, 0), W(2, 0), 1)])
        val = circle_sample(q, (1.0, 0.0, 0.0), 0.25, (1.0, 2.0))
        # (-sin(pi/2)) * (-2 sin(pi)) = 0
        assert val == pytest.approx(0.0, abs=1e-14)

    def test_matches_direct_evaluation(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            q = random_form(rng)
            rho, th = rng.uniform(0, 2), rng.uniform(0, 2 * np.pi)
            omega = (np.cosh(rho), -np.sinh(rho) * np.cos(th), -np.sinh(rho) * np.sin(th))
            theta = rng.uniform(0, 1)
            m = (1.0, 2.0)
            v = np.array([np.cos(2 * np.pi * k * theta) for k in (1, 2)])
            w = np.array(
                [[-omega[a] * m[k - 1] * np.sin(2 * np.pi * k * theta) for a in range(3)]
                 for k in (1, 2)]
            )
            assert circle_sample(q, omega, theta, m) == pytest.approx(
                evaluate(q, v, w), rel=1e-14, abs=1e-14
            )

    def test_periodic(self):
        rng = np.random.default_rng(5)
        q = random_form(rng)
        omega = (np.cosh(0.7), -np.sinh(0.7), 0.0)
        th = rng.uniform(0, 1, size=16)
        a = circle_sample(q, omega, th, (1.0, 2.0))
        b = circle_sample(q, omega, th + 1.0, (1.0, 2.0))
        np.testing.assert_allclose(a, b, rtol=0, atol=1e-13)


class TestNonlinearSystem:
    def test_resonance_flag_exact(self):
        yuk = make_form([(V(1), V(2), 1)])
        sq = make_form([(V(1), V(1), 1)])
        assert NonlinearSystem(yuk, sq, 1, 2).resonant
        assert NonlinearSystem(yuk, sq, Fraction(1, 2), 1).resonant
        assert not NonlinearSystem(yuk, sq, 1.0, 1.999999).resonant
        # decimal strings parse exactly
        assert NonlinearSystem(yuk, sq, "0.1", "0.2").resonant

    def test_positive_masses(self):
        q = make_form([])
        with pytest.raises(ValueError):
            NonlinearSystem(q, q, 0, 2)


class TestParser:
    def test_yukawa(self):
        q1, q2 = parse_nonlinearity("Q1 = v1*v2; Q2 = v1^2", Fraction(1), Fraction(2))
        assert q1 == make_form([(V(1), V(2), 1)])
        assert q2 == make_form([(V(1), V(1), 1)])

    def test_zero_form(self):
        q1, q2 = parse_nonlinearity("Q1 = 0; Q2 = v1^2", Fraction(1), Fraction(2))
        assert q1.is_zero

    def test_derivative_tokens_and_masses(self):
        text = "Q1 = 0; Q2 = m1^2*v1^2 + w(1,0)^2 - w(1,1)^2 - w(1,2)^2"
        q1, q2 = parse_nonlinearity(text, Fraction(3), Fraction(6))
        assert q2.coefficient(V(1), V(1)) == 9
        assert q2.coefficient(W(1, 0), W(1, 0)) == 1
        assert q2.coefficient(W(1, 1), W(1, 1)) == -1

    def test_fraction_coefficients(self):
        q1, _ = parse_nonlinearity("Q1 = 1/4 * v1 * v2; Q2 = 0", Fraction(1), Fraction(2))
        assert q1.coefficient(V(1), V(2)) == Fraction(1, 4)
        q1, _ = parse_nonlinearity("Q1 = v1*v2/4; Q2 = 0", Fraction(1), Fraction(2))
        assert q1.coefficient(V(1), V(2)) == Fraction(1, 4)

    def test_signs(self):
        q1, _ = parse_nonlinearity("Q1 = -v1*v2 + 2*v2^2; Q2 = 0", Fraction(1), Fraction(2))
        assert q1.coefficient(V(1), V(2)) == -1
        assert q1.coefficient(V(2), V(2)) == 2

    def test_rejects_wrong_degree(self):
        with pytest.raises(ParseError, match="degree"):
            parse_nonlinearity("Q1 = v1; Q2 = 0", Fraction(1), Fraction(2))
        with pytest.raises(ParseError, match="degree"):
            parse_nonlinearity("Q1 = v1^3; Q2 = 0", Fraction(1), Fraction(2))
        with pytest.raises(ParseError, match="degree"):
            parse_nonlinearity("Q1 = 5; Q2 = 0", Fraction(1), Fraction(2))

    def test_rejects_unknown_symbol_with_position(self):
        with pytest.raises(ParseError, match="position"):
            parse_nonlinearity("Q1 = v1*u2; Q2 = 0", Fraction(1), Fraction(2))

    def test_rejects_missing_statement(self):
        with pytest.raises(ParseError, match="missing"):
            parse_nonlinearity("Q1 = v1*v2", Fraction(1), Fraction(2))
