import numpy as np
import pytest
from fractions import Fraction

from kgresonance.quadratic_forms import NonlinearSystem, V, W, make_form
from kgresonance.resonance import (
    ComplexRational,
    ConditionTag,
    PhiPolynomial,
    all_psi_keys,
    classify,
    period_average,
    phi,
    psi_coefficients,
    resonant_selection,
)

YUKAWA = NonlinearSystem(
    make_form([(V(1), V(2), 1)]), make_form([(V(1), V(1), 1)]), 1, 2
)
COUNTEREXAMPLE = NonlinearSystem(
    make_form([]), make_form([(V(1), V(1), 1)]), 1, 2
)
# m1^2 v1^2 + w10^2 - w11^2 - w12^2 reduces to zero on the hyperboloid
NULL_Q2 = make_form(
    [(V(1), V(1), 1), (W(1, 0), W(1, 0), 1), (W(1, 1), W(1, 1), -1), (W(1, 2), W(1, 2), -1)]
)
NULL_SYSTEM = NonlinearSystem(make_form([]), NULL_Q2, 1, 2)


def quadrature_phi(system, j, omega, n=1024):
    """Independent trapezoid oracle for the resonant Fourier coefficient."""
    theta = np.arange(n) / n
    samples = system.circle_sample(j, omega, theta)
    return np.sum(samples * np.exp(-2j * np.pi * j * theta)) / n


def random_omega(rng, rho_max=3.0):
    rho = rng.uniform(0, rho_max)
    th = rng.uniform(0, 2 * np.pi)
    return (np.cosh(rho), -np.sinh(rho) * np.cos(th), -np.sinh(rho) * np.sin(th))


def random_system(rng, n_terms=4):
    factors = [V(1), V(2)] + [W(k, a) for k in (1, 2) for a in (0, 1, 2)]
    def rand_form():
        terms = []
        for _ in range(n_terms):
            i1, i2 = rng.choice(len(factors), size=2)
            c = Fraction(int(rng.integers(-6, 7)), int(rng.integers(1, 5)))
            terms.append((factors[i1], factors[i2], c))
        return make_form(terms)
    return NonlinearSystem(rand_form(), rand_form(), 1, 2)


class TestResonantSelection:
    def test_j1(self):
        assert resonant_selection(1) == ((1, 2, -1, 1),)

    def test_j2(self):
        assert resonant_selection(2) == ((1, 1, 1, 1),)

    def test_equal_components_never_give_one(self):
        freqs = {s1 * 1 + s2 * 1 for s1 in (1, -1) for s2 in (1, -1)}
        assert freqs == {2, 0, -2}
        assert 1 not in freqs

    def test_invalid_j(self):
        with pytest.raises(ValueError):
            resonant_selection(3)


class TestPsiCoefficients:
    def test_yukawa_resonant_entry(self):
        psi = psi_coefficients(YUKAWA, 1)
        p = psi[(1, 2, -1, 1)]
        assert p == PhiPolynomial.constant(ComplexRational(Fraction(1, 4)))
        oracle = quadrature_phi(YUKAWA, 1, (np.cosh(0.9), -np.sinh(0.9), 0.0))
        assert complex(0.25, 0) == pytest.approx(oracle, abs=1e-12)

    def test_zero_form(self):
        psi = psi_coefficients(COUNTEREXAMPLE, 1)
        assert all(p.is_zero for p in psi.values())

    def test_requires_resonant_masses(self):
        bad = NonlinearSystem(YUKAWA.q1, YUKAWA.q2, 1, 3)
        with pytest.raises(ValueError, match="resonant"):
            psi_coefficients(bad, 1)

    def test_pointwise_reconstruction(self):
        # expansion evaluated at alpha = (1, 1) must reproduce the circle samples
        rng = np.random.default_rng(21)
        theta = np.arange(64) / 64.0
        for _ in range(10):
            system = random_system(rng)
            omega = random_omega(rng)
            for j in (1, 2):
                psi = psi_coefficients(system, j)
                recon = np.zeros_like(theta, dtype=complex)
                for (k1, k2, s1, s2), poly in psi.items():
                    freq = s1 * k1 + s2 * k2
                    recon += poly.evaluate(*omega) * np.exp(2j * np.pi * freq * theta)
                direct = system.circle_sample(j, omega, theta)
                np.testing.assert_allclose(recon.imag, 0, atol=1e-12)
                np.testing.assert_allclose(recon.real, direct, atol=1e-12)

    def test_canonical_key_set(self):
        keys = all_psi_keys()
        assert len(keys) == 10
        assert all(k1 <= k2 for k1, k2, _, _ in keys)


class TestPhi:
    def test_yukawa_golden(self):
        quarter = PhiPolynomial.constant(ComplexRational(Fraction(1, 4)))
        assert phi(YUKAWA, 1) == quarter
        assert phi(YUKAWA, 2) == quarter

    def test_yukawa_quadrature_oracle(self):
        rng = np.random.default_rng(2)
        for _ in range(5):
            omega = random_omega(rng)
            for j in (1, 2):
                assert phi(YUKAWA, j).evaluate(*omega) == pytest.approx(
                    quadrature_phi(YUKAWA, j, omega), abs=1e-12
                )

    def test_counterexample_phi1_zero(self):
        assert phi(COUNTEREXAMPLE, 1).is_zero

    def test_derivative_coupling(self):
        # Q1 = w10*w20 with m=(1,2) has Phi1 = w0^2/2, reduced (1+w1^2+w2^2)/2
        system = NonlinearSystem(
            make_form([(W(1, 0), W(2, 0), 1)]), make_form([]), 1, 2
        )
        p = phi(system, 1)
        half = ComplexRational(Fraction(1, 2))
        assert p.coeffs == {
            (0, 0, 0): half, (0, 2, 0): half, (0, 0, 2): half,
        }
        omega = (np.cosh(1.0), -np.sinh(1.0), 0.0)
        assert p.evaluate(*omega) == pytest.approx(np.cosh(1.0) ** 2 / 2, rel=1e-13)
        assert quadrature_phi(system, 1, omega) == pytest.approx(
            np.cosh(1.0) ** 2 / 2, abs=1e-11
        )

    def test_null_combination_reduces_to_zero(self):
        p = phi(NULL_SYSTEM, 2)
        assert p.is_zero
        rng = np.random.default_rng(4)
        for _ in range(5):
            omega = random_omega(rng)
            assert abs(quadrature_phi(NULL_SYSTEM, 2, omega)) <= 1e-12

    def test_phi_equals_selected_psi(self):
        rng = np.random.default_rng(17)
        for _ in range(5):
            system = random_system(rng)
            for j in (1, 2):
                psi = psi_coefficients(system, j)
                (key,) = resonant_selection(j)
                assert phi(system, j) == psi[key].reduced()


class TestReduction:
    def test_reduction_sound_on_hyperboloid(self):
        rng = np.random.default_rng(9)
        for _ in range(10):
            coeffs = {}
            for _ in range(6):
                mono = tuple(int(e) for e in rng.integers(0, 3, size=3))
                if sum(mono) > 4:
                    continue
                coeffs[mono] = ComplexRational(
                    Fraction(int(rng.integers(-5, 6)), 3),
                    Fraction(int(rng.integers(-5, 6)), 2),
                )
            p = PhiPolynomial(coeffs)
            q = p.reduced()
            assert q.is_reduced
            for _ in range(4):
                omega = random_omega(rng)
                assert p.evaluate(*omega) == pytest.approx(
                    q.evaluate(*omega), rel=1e-12, abs=1e-12
                )

    def test_w0_squared(self):
        p = PhiPolynomial({(2, 0, 0): ComplexRational(Fraction(1))})
        expect = {
            (0, 0, 0): ComplexRational(Fraction(1)),
            (0, 2, 0): ComplexRational(Fraction(1)),
            (0, 0, 2): ComplexRational(Fraction(1)),
        }
        assert p.reduced().coeffs == expect


class TestClassify:
    def test_yukawa_positive(self):
        result = classify(phi(YUKAWA, 1), phi(YUKAWA, 2))
        assert result.tag is ConditionTag.POSITIVE_B
        assert result.inf_re == pytest.approx(1 / 16)
        assert result.max_abs_im == 0.0

    def test_counterexample_neither(self):
        result = classify(phi(COUNTEREXAMPLE, 1), phi(COUNTEREXAMPLE, 2))
        assert result.tag is ConditionTag.NEITHER

    def test_null(self):
        result = classify(phi(NULL_SYSTEM, 1), phi(NULL_SYSTEM, 2))
        assert result.tag is ConditionTag.NULL_A

    def test_negative_product_neither(self):
        # Phi1 = w0^2/2, Phi2 = -w0^2/4: Re P = -w0^4/8 < 0
        p1 = PhiPolynomial({(2, 0, 0): ComplexRational(Fraction(1, 2))}).reduced()
        p2 = PhiPolynomial({(2, 0, 0): ComplexRational(Fraction(-1, 4))}).reduced()
        result = classify(p1, p2)
        assert result.tag is ConditionTag.NEITHER
        assert result.inf_re < -1e-3

    def test_imaginary_product_neither(self):
        p1 = PhiPolynomial.constant(ComplexRational(Fraction(0), Fraction(1, 4)))
        p2 = PhiPolynomial.constant(ComplexRational(Fraction(1, 4)))
        assert classify(p1, p2).tag is ConditionTag.NEITHER

    def test_unbounded_sign_change_neither(self):
        # P = w0*w1 is unbounded below along asymptotic directions
        p1 = PhiPolynomial({(1, 0, 0): ComplexRational(Fraction(1))})
        p2 = PhiPolynomial({(0, 1, 0): ComplexRational(Fraction(1))})
        assert classify(p1, p2).tag is ConditionTag.NEITHER

    def test_requires_reduced(self):
        raw = PhiPolynomial({(2, 0, 0): ComplexRational(Fraction(1))})
        with pytest.raises(ValueError, match="reduced"):
            classify(raw, raw.reduced())

    def test_stable_under_tolerance_scaling(self):
        cases = [
            (phi(YUKAWA, 1), phi(YUKAWA, 2), ConditionTag.POSITIVE_B),
            (phi(COUNTEREXAMPLE, 1), phi(COUNTEREXAMPLE, 2), ConditionTag.NEITHER),
            (phi(NULL_SYSTEM, 1), phi(NULL_SYSTEM, 2), ConditionTag.NULL_A),
        ]
        for scale in (0.5, 1.0, 2.0):
            for p1, p2, expect in cases:
                result = classify(
                    p1, p2, zero_tol=1e-12 * scale, pos_tol=1e-9 * scale
                )
                assert result.tag is expect


class TestPeriodAverage:
    def quadrature_average(self, system, j, alpha, omega, n=4096):
        m1 = float(system.m1)
        masses = system.masses
        tau = np.arange(n) * (2 * np.pi / m1) / n
        v = [np.real(alpha[k] * np.exp(1j * masses[k] * tau)) for k in (0, 1)]
        dv = [
            np.real(1j * masses[k] * alpha[k] * np.exp(1j * masses[k] * tau))
            for k in (0, 1)
        ]
        w0, w1, w2 = omega
        total = np.zeros_like(tau)
        from kgresonance.quadratic_forms import evaluate

        vals = np.empty(n, dtype=float)
        for i in range(n):
            vv = (v[0][i], v[1][i])
            ww = [[w0 * dv[k][i], w1 * dv[k][i], w2 * dv[k][i]] for k in (0, 1)]
            vals[i] = evaluate(system.q(j), vv, ww)
        return np.sum(vals * np.exp(-1j * j * m1 * tau)) / n

    def test_yukawa_unit_alpha(self):
        val = period_average(YUKAWA, 1, (1.0, 1.0), (np.cosh(0.4), -np.sinh(0.4), 0.0))
        assert val == pytest.approx(0.25, abs=1e-14)

    def test_alpha1_zero(self):
        val = period_average(YUKAWA, 2, (0.0, 3.0 + 1.0j), (1.0, 0.0, 0.0))
        assert val == 0

    def test_matches_quadrature(self):
        rng = np.random.default_rng(33)
        for _ in range(4):
            system = random_system(rng, n_terms=3)
            alpha = tuple(rng.normal(size=2) + 1j * rng.normal(size=2))
            omega = random_omega(rng, rho_max=1.5)
            for j in (1, 2):
                exact = period_average(system, j, alpha, omega)
                oracle = self.quadrature_average(system, j, alpha, omega)
                assert exact == pytest.approx(oracle, abs=1e-12)

    def test_matches_phi_times_amplitudes(self):
        rng = np.random.default_rng(8)
        alpha = (0.3 - 0.2j, -0.7 + 0.1j)
        omega = random_omega(rng)
        p1 = phi(YUKAWA, 1).evaluate(*omega) * np.conj(alpha[0]) * alpha[1]
        p2 = phi(YUKAWA, 2).evaluate(*omega) * alpha[0] ** 2
        assert period_average(YUKAWA, 1, alpha, omega) == pytest.approx(p1, abs=1e-14)
        assert period_average(YUKAWA, 2, alpha, omega) == pytest.approx(p2, abs=1e-14)
