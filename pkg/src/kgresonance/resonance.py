"""Exact resonance coefficients of quadratic Klein-Gordon nonlinearities.

Along the free oscillation the nonlinearity is a trigonometric polynomial in
the base frequency; expanding every ``cos``/``sin`` factor into complex
exponentials and collecting frequencies yields its coefficients exactly, as
polynomials of degree at most 2 in the asymptotic direction
``omega = (w0, w1, w2)`` with Gaussian-rational coefficients.  The resonant
coefficient of component ``j`` is the one multiplying ``exp(i j m1 tau)``.

Numerical quadrature of the same coefficients is deliberately *not*
implemented here; it lives in the test suite as an independent oracle.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction

import numpy as np

from .quadratic_forms import NonlinearSystem, QuadraticForm

__all__ = [
    "ComplexRational",
    "PhiPolynomial",
    "ConditionTag",
    "ConditionClass",
    "psi_coefficients",
    "resonant_selection",
    "phi",
    "classify",
    "period_average",
]


@dataclass(frozen=True)
class ComplexRational:
    """Complex number with exact rational real and imaginary parts."""

    re: Fraction = Fraction(0)
    im: Fraction = Fraction(0)

    def __add__(self, other: "ComplexRational") -> "ComplexRational":
        return ComplexRational(self.re + other.re, self.im + other.im)

    def __sub__(self, other: "ComplexRational") -> "ComplexRational":
        return ComplexRational(self.re - other.re, self.im - other.im)

    def __mul__(self, other: "ComplexRational") -> "ComplexRational":
        return ComplexRational(
            self.re * other.re - self.im * other.im,
            self.re * other.im + self.im * other.re,
        )

    def __neg__(self) -> "ComplexRational":
        return ComplexRational(-self.re, -self.im)

    def conjugate(self) -> "ComplexRational":
        return ComplexRational(self.re, -self.im)

    @property
    def is_zero(self) -> bool:
        return self.re == 0 and self.im == 0

    def __complex__(self) -> complex:
        return complex(float(self.re), float(self.im))

    def __str__(self) -> str:
        return f"{self.re}{'+' if self.im >= 0 else ''}{self.im}i"


_ZERO = ComplexRational()

Monomial = tuple[int, int, int]  # exponents of (w0, w1, w2)


class PhiPolynomial:
    """Polynomial in (w0, w1, w2) with exact complex-rational coefficients.

    ``reduced()`` substitutes ``w0**2 = 1 + w1**2 + w2**2`` until the
    w0-degree is at most 1, i.e. it gives the canonical representative of the
    polynomial restricted to the unit hyperboloid.
    """

    __slots__ = ("_coeffs",)

    def __init__(self, coeffs: dict[Monomial, ComplexRational] | None = None):
        self._coeffs = {m: c for m, c in (coeffs or {}).items() if not c.is_zero}

    @classmethod
    def constant(cls, value: ComplexRational | Fraction | int) -> "PhiPolynomial":
        if not isinstance(value, ComplexRational):
            value = ComplexRational(Fraction(value))
        return cls({(0, 0, 0): value})

    @classmethod
    def direction(cls, a: int, scale: ComplexRational) -> "PhiPolynomial":
        """The monomial ``scale * w_a``."""
        mono = tuple(1 if i == a else 0 for i in range(3))
        return cls({mono: scale})

    @property
    def coeffs(self) -> dict[Monomial, ComplexRational]:
        return dict(self._coeffs)

    @property
    def is_zero(self) -> bool:
        return not self._coeffs

    @property
    def degree(self) -> int:
        if not self._coeffs:
            return 0
        return max(sum(m) for m in self._coeffs)

    @property
    def is_reduced(self) -> bool:
        return all(m[0] <= 1 for m in self._coeffs)

    def __add__(self, other: "PhiPolynomial") -> "PhiPolynomial":
        out = dict(self._coeffs)
        for m, c in other._coeffs.items():
            out[m] = out.get(m, _ZERO) + c
        return PhiPolynomial(out)

    def __sub__(self, other: "PhiPolynomial") -> "PhiPolynomial":
        return self + (-other)

    def __neg__(self) -> "PhiPolynomial":
        return PhiPolynomial({m: -c for m, c in self._coeffs.items()})

    def __mul__(self, other) -> "PhiPolynomial":
        if isinstance(other, (ComplexRational, Fraction, int)):
            if not isinstance(other, ComplexRational):
                other = ComplexRational(Fraction(other))
            return PhiPolynomial({m: c * other for m, c in self._coeffs.items()})
        out: dict[Monomial, ComplexRational] = {}
        for m1, c1 in self._coeffs.items():
            for m2, c2 in other._coeffs.items():
                m = (m1[0] + m2[0], m1[1] + m2[1], m1[2] + m2[2])
                out[m] = out.get(m, _ZERO) + c1 * c2
        return PhiPolynomial(out)

    def conjugate(self) -> "PhiPolynomial":
        return PhiPolynomial({m: c.conjugate() for m, c in self._coeffs.items()})

    def real_part(self) -> "PhiPolynomial":
        return PhiPolynomial(
            {m: ComplexRational(c.re) for m, c in self._coeffs.items()}
        )

    def imag_part(self) -> "PhiPolynomial":
        return PhiPolynomial(
            {m: ComplexRational(c.im) for m, c in self._coeffs.items()}
        )

    def homogeneous_part(self, total_degree: int) -> "PhiPolynomial":
        return PhiPolynomial(
            {m: c for m, c in self._coeffs.items() if sum(m) == total_degree}
        )

    def reduced(self) -> "PhiPolynomial":
        """Canonical form modulo w0**2 = 1 + w1**2 + w2**2 (w0-degree <= 1)."""
        coeffs = dict(self._coeffs)
        while True:
            high = [m for m in coeffs if m[0] >= 2]
            if not high:
                break
            out: dict[Monomial, ComplexRational] = {}

            def add(mono, c):
                out[mono] = out.get(mono, _ZERO) + c

            for m, c in coeffs.items():
                if m[0] >= 2:
                    e0, e1, e2 = m
                    add((e0 - 2, e1, e2), c)
                    add((e0 - 2, e1 + 2, e2), c)
                    add((e0 - 2, e1, e2 + 2), c)
                else:
                    add(m, c)
            coeffs = {m: c for m, c in out.items() if not c.is_zero}
        return PhiPolynomial(coeffs)

    def evaluate(self, w0, w1, w2):
        """Float/complex evaluation; accepts scalars or ndarrays."""
        w0 = np.asarray(w0, dtype=float)
        w1 = np.asarray(w1, dtype=float)
        w2 = np.asarray(w2, dtype=float)
        total = np.zeros(np.broadcast(w0, w1, w2).shape, dtype=complex)
        for (e0, e1, e2), c in self._coeffs.items():
            total = total + complex(c) * w0**e0 * w1**e1 * w2**e2
        return total if total.ndim else complex(total)

    def evaluate_exact(self, w0: Fraction, w1: Fraction, w2: Fraction) -> ComplexRational:
        total = _ZERO
        for (e0, e1, e2), c in self._coeffs.items():
            total = total + c * ComplexRational(w0**e0 * w1**e1 * w2**e2)
        return total

    def max_coeff_abs(self) -> float:
        if not self._coeffs:
            return 0.0
        return max(abs(complex(c)) for c in self._coeffs.values())

    def to_jsonable(self) -> list[dict]:
        out = []
        for m in sorted(self._coeffs):
            c = self._coeffs[m]
            out.append({"monomial": list(m), "re": str(c.re), "im": str(c.im)})
        return out

    def __eq__(self, other) -> bool:
        if not isinstance(other, PhiPolynomial):
            return NotImplemented
        return self._coeffs == other._coeffs

    def __hash__(self):
        return hash(frozenset(self._coeffs.items()))

    def __repr__(self) -> str:
        if self.is_zero:
            return "PhiPolynomial(0)"
        parts = []
        for m in sorted(self._coeffs):
            c = self._coeffs[m]
            mono = "".join(f"w{i}^{e}" for i, e in enumerate(m) if e)
            parts.append(f"({c}){mono or ''}")
        return "PhiPolynomial(" + " + ".join(parts) + ")"


PsiKey = tuple[int, int, int, int]  # (k1, k2, sigma1, sigma2) with sigma in {+1, -1}


def _canonical_key(k1: int, s1: int, k2: int, s2: int) -> PsiKey:
    # order the (component, sign) pairs jointly; "+" sorts before "-"
    a, b = (k1, 0 if s1 > 0 else 1), (k2, 0 if s2 > 0 else 1)
    if a <= b:
        return (k1, k2, s1, s2)
    return (k2, k1, s2, s1)


def all_psi_keys() -> tuple[PsiKey, ...]:
    """Canonical index tuples (k1, k2, s1, s2), k1 <= k2, unordered in (k, s)."""
    keys = set()
    for k1 in (1, 2):
        for k2 in (1, 2):
            for s1 in (1, -1):
                for s2 in (1, -1):
                    keys.add(_canonical_key(k1, s1, k2, s2))
    return tuple(sorted(keys, key=lambda t: (t[0], t[1], -t[2], -t[3])))


def _factor_exponential_coeff(f, s: int, masses: tuple[Fraction, Fraction]) -> PhiPolynomial:
    """Coefficient polynomial of alpha_k^(s) e^{i s k m1 tau} inside one factor.

    v_k = (alpha_k e^{i m_k tau} + conj) / 2 contributes 1/2;
    w_{k,a} = -w_a m_k Im(alpha_k e^{i m_k tau}) contributes s*i*w_a*m_k/2.
    """
    if f.kind == "v":
        return PhiPolynomial.constant(ComplexRational(Fraction(1, 2)))
    scale = ComplexRational(Fraction(0), Fraction(s) * masses[f.k - 1] / 2)
    return PhiPolynomial.direction(f.a, scale)


def psi_coefficients(system: NonlinearSystem, j: int) -> dict[PsiKey, PhiPolynomial]:
    """Exact expansion coefficients of Q_j along the free oscillation.

    Returns the full canonical index map ``(k1, k2, s1, s2) -> polynomial``;
    the term indexed by a key oscillates at frequency ``(s1*k1 + s2*k2) * m1``
    and multiplies ``alpha_{k1}^{(s1)} * alpha_{k2}^{(s2)}``.  Requires the
    resonant mass ratio: the expansion needs every ``m_k`` to be ``k * m1``.
    """
    if j not in (1, 2):
        raise ValueError(f"component index must be 1 or 2, got {j!r}")
    if not system.resonant:
        raise ValueError(
            "psi/phi extraction requires resonant masses m2 = 2*m1 "
            f"(got m1={system.m1}, m2={system.m2})"
        )
    masses = (system.m1, system.m2)
    out: dict[PsiKey, PhiPolynomial] = {k: PhiPolynomial() for k in all_psi_keys()}
    for f1, f2, coeff in system.q(j).terms:
        for s1 in (1, -1):
            p1 = _factor_exponential_coeff(f1, s1, masses)
            for s2 in (1, -1):
                p2 = _factor_exponential_coeff(f2, s2, masses)
                key = _canonical_key(f1.k, s1, f2.k, s2)
                out[key] = out[key] + (p1 * p2) * coeff
    return out


def resonant_selection(j: int) -> tuple[PsiKey, ...]:
    """Canonical index tuples with s1*k1 + s2*k2 == j."""
    if j not in (1, 2):
        raise ValueError(f"component index must be 1 or 2, got {j!r}")
    return tuple(k for k in all_psi_keys() if k[2] * k[0] + k[3] * k[1] == j)


def phi(system: NonlinearSystem, j: int) -> PhiPolynomial:
    """Resonance coefficient of component j, reduced on the hyperboloid."""
    psi = psi_coefficients(system, j)
    total = PhiPolynomial()
    for key in resonant_selection(j):
        total = total + psi[key]
    return total.reduced()


class ConditionTag(str, Enum):
    NULL_A = "NullA"
    POSITIVE_B = "PositiveB"
    NEITHER = "Neither"
    UNCERTAIN = "Uncertain"


@dataclass(frozen=True)
class ConditionClass:
    """Classification outcome with the sampling diagnostics that produced it."""

    tag: ConditionTag
    inf_re: float
    argmin_omega: tuple[float, float, float]
    max_abs_im: float
    top_degree_min: float
    domain: dict = field(default_factory=dict)

    def to_jsonable(self) -> dict:
        return {
            "tag": self.tag.value,
            "inf_re": self.inf_re,
            "argmin_omega": list(self.argmin_omega),
            "max_abs_im": self.max_abs_im,
            "top_degree_min": self.top_degree_min,
            "domain": dict(self.domain),
        }


def _hyperboloid_grid(rho_max: float, n_rho: int, n_theta: int):
    rho = np.linspace(0.0, rho_max, n_rho)
    theta = np.linspace(0.0, 2.0 * np.pi, n_theta, endpoint=False)
    R, T = np.meshgrid(rho, theta, indexing="ij")
    w0 = np.cosh(R)
    w1 = -np.sinh(R) * np.cos(T)
    w2 = -np.sinh(R) * np.sin(T)
    return w0, w1, w2


def classify(
    phi1: PhiPolynomial,
    phi2: PhiPolynomial,
    zero_tol: float = 1e-12,
    pos_tol: float = 1e-9,
    rho_max: float = 10.0,
    n_rho: int = 200,
    n_theta: int = 128,
) -> ConditionClass:
    """Classify a pair of reduced resonance coefficients.

    The null condition (all coefficients zero) is decided exactly, as is
    the vanishing of the imaginary part of the product.  Uniform positivity
    of the real part over the non-compact hyperboloid cannot be decided by
    sampling alone, so it is tested in three parts: an exact check that the
    product is real, a sampled interior infimum over ``omega(rho, theta)``,
    and a sign sweep of the top-degree homogeneous part along asymptotic
    directions ``(1, cos t, sin t)``.  Sampled values inside
    ``[-pos_tol, pos_tol]`` yield ``Uncertain`` rather than a guess.

    Coefficients of magnitude at most ``zero_tol`` count as zero, so that
    polynomials assembled from inexact input are handled consistently; the
    exact extraction path always produces exact zeros.
    """
    if not phi1.is_reduced or not phi2.is_reduced:
        raise ValueError("classify requires reduced polynomials (w0-degree <= 1)")
    domain = {
        "rho_max": rho_max,
        "n_rho": n_rho,
        "n_theta": n_theta,
        "zero_tol": zero_tol,
        "pos_tol": pos_tol,
    }

    def is_zero_poly(p: PhiPolynomial) -> bool:
        return p.max_coeff_abs() <= zero_tol

    if is_zero_poly(phi1) and is_zero_poly(phi2):
        return ConditionClass(
            ConditionTag.NULL_A, 0.0, (1.0, 0.0, 0.0), 0.0, 0.0, domain
        )

    product = (phi1 * phi2).reduced()
    w0, w1, w2 = _hyperboloid_grid(rho_max, n_rho, n_theta)
    values = product.evaluate(w0, w1, w2)
    re_values = values.real
    idx = np.unravel_index(np.argmin(re_values), re_values.shape)
    inf_re = float(re_values[idx])
    argmin = (float(w0[idx]), float(w1[idx]), float(w2[idx]))
    max_abs_im = float(np.max(np.abs(values.imag)))

    im_exact_zero = is_zero_poly(product.imag_part())

    top = product.homogeneous_part(product.degree)
    sweep = np.linspace(0.0, 2.0 * np.pi, 4 * n_theta, endpoint=False)
    top_vals = top.evaluate(np.ones_like(sweep), np.cos(sweep), np.sin(sweep)).real
    top_min = float(np.min(top_vals))

    if is_zero_poly(product):
        # one coefficient vanishes identically while the other does not
        tag = ConditionTag.NEITHER
    elif not im_exact_zero:
        tag = ConditionTag.NEITHER
    elif inf_re < -pos_tol:
        tag = ConditionTag.NEITHER
    elif inf_re <= pos_tol:
        # sampling cannot certify uniform positivity this close to zero
        tag = ConditionTag.UNCERTAIN
    elif top_min < -pos_tol:
        # leading asymptotic part turns negative beyond the sampled region
        tag = ConditionTag.NEITHER
    else:
        tag = ConditionTag.POSITIVE_B

    return ConditionClass(tag, inf_re, argmin, max_abs_im, top_min, domain)


def period_average(system: NonlinearSystem, j: int, alpha: tuple[complex, complex], omega) -> complex:
    """Average of ``exp(-i j m1 tau) * Q_j(v, omega * dv/dtau)`` over one period.

    Here ``v_k = Re(alpha_k exp(i m_k tau))`` with the amplitudes frozen.
    All non-resonant exponentials average to zero exactly over the common
    period, so the result is the resonant coefficient times the matching
    amplitude product (``conj(a1)*a2`` for j=1, ``a1**2`` for j=2).
    """
    psi = psi_coefficients(system, j)
    if hasattr(omega, "w0"):
        w = (omega.w0, omega.w1, omega.w2)
    else:
        w = tuple(float(c) for c in omega)
    a = (complex(alpha[0]), complex(alpha[1]))
    total = 0.0 + 0.0j
    for k1, k2, s1, s2 in resonant_selection(j):
        a1 = a[k1 - 1] if s1 > 0 else np.conj(a[k1 - 1])
        a2 = a[k2 - 1] if s2 > 0 else np.conj(a[k2 - 1])
        total += psi[(k1, k2, s1, s2)].evaluate(*w) * a1 * a2
    return complex(total)
