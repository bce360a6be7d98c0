"""Symbolic quadratic nonlinearities of a two-component Klein-Gordon system.

A nonlinearity is a homogeneous degree-2 form in the field values
``v = (v1, v2)`` and their first derivatives ``w[k, a]`` (component
``k in {1, 2}``, derivative index ``a in {0, 1, 2}`` with ``a = 0`` the
time derivative).  Coefficients are kept as exact :class:`~fractions.Fraction`
values so that the Fourier coefficient extraction downstream is exact.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "Factor",
    "V",
    "W",
    "QuadraticForm",
    "NonlinearSystem",
    "make_form",
    "evaluate",
    "quadratic_part",
    "circle_sample",
    "parse_nonlinearity",
    "ParseError",
]


def _as_fraction(value) -> Fraction:
    """Exact coefficient conversion; floats map to their binary value."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        if not np.isfinite(value):
            raise ValueError(f"coefficient {value!r} is not finite")
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value)
    raise TypeError(f"unsupported coefficient type {type(value).__name__}")


@dataclass(frozen=True)
class Factor:
    """One monomial letter: a field value ``v_k`` or a derivative ``w_{k,a}``."""

    kind: str  # "v" or "w"
    k: int  # component, 1 or 2
    a: int | None = None  # derivative index 0..2, only for kind "w"

    def __post_init__(self):
        if self.kind not in ("v", "w"):
            raise ValueError(f"factor kind must be 'v' or 'w', got {self.kind!r}")
        if self.k not in (1, 2):
            raise ValueError(f"component index must be 1 or 2, got {self.k!r}")
        if self.kind == "v":
            if self.a is not None:
                raise ValueError("v factors carry no derivative index")
        elif self.a not in (0, 1, 2):
            raise ValueError(f"derivative index must be 0, 1 or 2, got {self.a!r}")

    @property
    def sort_key(self) -> tuple:
        return (self.kind, self.k, -1 if self.a is None else self.a)

    def __str__(self) -> str:
        if self.kind == "v":
            return f"v{self.k}"
        return f"w({self.k},{self.a})"


def V(k: int) -> Factor:
    """Field-value factor ``v_k``."""
    return Factor("v", k)


def W(k: int, a: int) -> Factor:
    """Derivative factor ``w_{k,a}`` standing for the a-th derivative of u_k."""
    return Factor("w", k, a)


def _canonical_pair(f1: Factor, f2: Factor) -> tuple[Factor, Factor]:
    return (f1, f2) if f1.sort_key <= f2.sort_key else (f2, f1)


class QuadraticForm:
    """Finite sum of coefficient * factor * factor terms.

    Immutable after construction; build instances with :func:`make_form`.
    Term keys are canonically ordered factor pairs, so forms that differ
    only by swapping the two factors of a term compare equal.
    """

    __slots__ = ("_terms",)

    def __init__(self, terms: dict[tuple[Factor, Factor], Fraction]):
        self._terms = {k: v for k, v in terms.items() if v != 0}

    @property
    def terms(self) -> tuple[tuple[Factor, Factor, Fraction], ...]:
        """Canonical term list as (factor, factor, coefficient) triples."""
        return tuple(
            (f1, f2, c)
            for (f1, f2), c in sorted(
                self._terms.items(), key=lambda it: (it[0][0].sort_key, it[0][1].sort_key)
            )
        )

    @property
    def is_zero(self) -> bool:
        return not self._terms

    def coefficient(self, f1: Factor, f2: Factor) -> Fraction:
        return self._terms.get(_canonical_pair(f1, f2), Fraction(0))

    def factors_used(self) -> frozenset[Factor]:
        """All distinct factors appearing with nonzero coefficient."""
        out = set()
        for f1, f2 in self._terms:
            out.add(f1)
            out.add(f2)
        return frozenset(out)

    def __eq__(self, other) -> bool:
        if not isinstance(other, QuadraticForm):
            return NotImplemented
        return self._terms == other._terms

    def __hash__(self):
        return hash(frozenset(self._terms.items()))

    def __repr__(self) -> str:
        if self.is_zero:
            return "QuadraticForm(0)"
        parts = [f"{c}*{f1}*{f2}" for f1, f2, c in self.terms]
        return "QuadraticForm(" + " + ".join(parts) + ")"


def make_form(terms: Iterable[tuple[Factor, Factor, object]]) -> QuadraticForm:
    """Build a canonical quadratic form from (factor, factor, coefficient) triples.

    Swapped duplicate pairs are merged additively.  Invalid factor indices are
    rejected with the position of the offending term.
    """
    acc: dict[tuple[Factor, Factor], Fraction] = {}
    for pos, term in enumerate(terms):
        try:
            f1, f2, coeff = term
            if not isinstance(f1, Factor) or not isinstance(f2, Factor):
                raise TypeError("term factors must be Factor instances")
            c = _as_fraction(coeff)
        except (ValueError, TypeError) as exc:
            raise ValueError(f"invalid term at position {pos}: {exc}") from exc
        key = _canonical_pair(f1, f2)
        acc[key] = acc.get(key, Fraction(0)) + c
    return QuadraticForm(acc)


def _factor_value(f: Factor, v, w):
    if f.kind == "v":
        return v[f.k - 1]
    return w[f.k - 1][f.a]


def evaluate(form: QuadraticForm, v: Sequence[float], w) -> float:
    """Evaluate the form at field values v (length 2) and derivatives w (2 x 3)."""
    total = 0.0
    for f1, f2, c in form.terms:
        total += float(c) * _factor_value(f1, v, w) * _factor_value(f2, v, w)
    return total


def quadratic_part(terms: Iterable[tuple[Sequence[Factor], object]]) -> QuadraticForm:
    """Extract the total-degree-2 part of a polynomial in (v, w).

    ``terms`` lists (factor tuple, coefficient) monomials of arbitrary degree.
    Degree-0 and degree-1 monomials with nonzero coefficient are rejected:
    the system requires nonlinearities vanishing at quadratic order at the
    origin.  Higher-degree monomials are dropped.
    """
    quad: list[tuple[Factor, Factor, object]] = []
    for pos, (factors, coeff) in enumerate(terms):
        factors = tuple(factors)
        c = _as_fraction(coeff)
        if len(factors) < 2 and c != 0:
            raise ValueError(
                f"term at position {pos} has degree {len(factors)} < 2; "
                "nonlinearities must vanish at quadratic order at the origin"
            )
        if len(factors) == 2:
            quad.append((factors[0], factors[1], c))
    return make_form(quad)


def _omega_components(omega) -> tuple[float, float, float]:
    if hasattr(omega, "w0"):
        return (omega.w0, omega.w1, omega.w2)
    w0, w1, w2 = omega
    return (float(w0), float(w1), float(w2))


def circle_sample(form: QuadraticForm, omega, theta, masses: tuple[float, float]):
    """Sample the form along the free oscillation circle.

    The factors are evaluated at ``v_k = cos(2 pi k theta)`` and
    ``w_{k,a} = -omega_a * m_k * sin(2 pi k theta)``; ``theta`` may be a
    scalar or an ndarray (vectorized evaluation).
    """
    th = np.asarray(theta, dtype=float)
    wc = _omega_components(omega)
    m = (float(masses[0]), float(masses[1]))

    def value(f: Factor):
        if f.kind == "v":
            return np.cos(2.0 * np.pi * f.k * th)
        return -wc[f.a] * m[f.k - 1] * np.sin(2.0 * np.pi * f.k * th)

    total = np.zeros_like(th)
    for f1, f2, c in form.terms:
        total = total + float(c) * value(f1) * value(f2)
    return total if total.ndim else float(total)


@dataclass(frozen=True)
class NonlinearSystem:
    """Pair of quadratic nonlinearities with the two masses.

    Masses are stored as exact fractions; the resonance flag is derived,
    never stored: the system is resonant iff ``m2 == 2 * m1`` exactly in
    the configured representation (decimal strings parse exactly, floats
    keep their binary value).
    """

    q1: QuadraticForm
    q2: QuadraticForm
    m1: Fraction
    m2: Fraction

    def __post_init__(self):
        object.__setattr__(self, "m1", _as_fraction(self.m1))
        object.__setattr__(self, "m2", _as_fraction(self.m2))
        if self.m1 <= 0 or self.m2 <= 0:
            raise ValueError("masses must be positive")

    @property
    def resonant(self) -> bool:
        return self.m2 == 2 * self.m1

    @property
    def masses(self) -> tuple[float, float]:
        return (float(self.m1), float(self.m2))

    def q(self, j: int) -> QuadraticForm:
        if j == 1:
            return self.q1
        if j == 2:
            return self.q2
        raise ValueError(f"component index must be 1 or 2, got {j!r}")

    def circle_sample(self, j: int, omega, theta):
        return circle_sample(self.q(j), omega, theta, self.masses)

    @classmethod
    def from_text(cls, text: str, m1, m2) -> "NonlinearSystem":
        m1f, m2f = _as_fraction(m1), _as_fraction(m2)
        q1, q2 = parse_nonlinearity(text, m1f, m2f)
        return cls(q1=q1, q2=q2, m1=m1f, m2=m2f)


class ParseError(ValueError):
    """Nonlinearity text rejected; carries the source position."""

    def __init__(self, message: str, pos: int):
        super().__init__(f"at position {pos}: {message}")
        self.pos = pos


_TOKEN_RE = re.compile(
    r"""\s*(?:
        (?P<num>\d+(?:\.\d*)?(?:[eE][+-]?\d+)?)
      | (?P<w>[wW]\(\s*(?P<wk>\d)\s*,\s*(?P<wa>\d)\s*\))
      | (?P<name>[a-zA-Z]\w*)
      | (?P<op>[-+*/^=;])
    )""",
    re.VERBOSE,
)


def _tokenize(text: str):
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None or m.end() == m.start():
            if text[pos:].strip() == "":
                break
            raise ParseError(f"unexpected character {text[pos]!r}", pos)
        for group in ("num", "w", "name", "op"):
            if m.group(group):
                tokens.append((group, m, m.start(group)))
                break
        pos = m.end()
    return tokens


def parse_nonlinearity(
    text: str, m1: Fraction, m2: Fraction
) -> tuple[QuadraticForm, QuadraticForm]:
    """Parse a nonlinearity description like ``"Q1 = v1*v2; Q2 = v1^2"``.

    Grammar: two statements ``Qj = expr`` separated by ``;``, where an
    expression is a signed sum of monomials.  A monomial multiplies numeric
    literals (also mass symbols ``m1``/``m2`` and rational division such as
    ``1/4``) with exactly two field factors among ``v1, v2, w(k,a)``;
    exponents like ``v1^2`` count multiplicity.  Pure-number monomials are
    accepted only with value zero.  Anything of field degree other than 2
    is rejected, with the source position of the offending monomial.
    """
    statements: dict[int, QuadraticForm] = {}
    cursor = 0
    for raw in text.split(";"):
        base = cursor
        cursor += len(raw) + 1
        if raw.strip() == "":
            continue
        if "=" not in raw:
            raise ParseError("statement must have the form 'Qj = expression'", base)
        lhs, rhs = raw.split("=", 1)
        lhs = lhs.strip().lower()
        if lhs not in ("q1", "q2"):
            raise ParseError(f"left-hand side must be Q1 or Q2, got {lhs!r}", base)
        j = int(lhs[1])
        if j in statements:
            raise ParseError(f"duplicate definition of Q{j}", base)
        statements[j] = _parse_expression(rhs, base + raw.index("=") + 1, m1, m2)
    for j in (1, 2):
        if j not in statements:
            raise ParseError(f"missing definition of Q{j}", len(text))
    return statements[1], statements[2]


def _parse_expression(expr: str, offset: int, m1: Fraction, m2: Fraction) -> QuadraticForm:
    tokens = _tokenize(expr)
    terms: list[tuple[Factor, Factor, Fraction]] = []
    i = 0
    n = len(tokens)

    def tok_pos(idx):
        return offset + tokens[idx][2] if idx < n else offset + len(expr)

    while i < n:
        sign = Fraction(1)
        while i < n and tokens[i][0] == "op" and tokens[i][1].group("op") in "+-":
            if tokens[i][1].group("op") == "-":
                sign = -sign
            i += 1
        if i >= n:
            raise ParseError("dangling sign", tok_pos(i))
        coeff = sign
        factors: list[Factor] = []
        start = tok_pos(i)
        expect_factor = True
        divide = False
        while i < n:
            kind, m, pos = tokens[i]
            if kind == "op":
                op = m.group("op")
                if op in "+-" and not expect_factor:
                    break
                if op == "*" and not expect_factor:
                    expect_factor = True
                    i += 1
                    continue
                if op == "/" and not expect_factor:
                    expect_factor = True
                    divide = True
                    i += 1
                    continue
                raise ParseError(f"unexpected operator {op!r}", offset + pos)
            if not expect_factor:
                raise ParseError("missing operator between factors", offset + pos)
            # one atomic factor, with optional ^exponent
            if kind == "num":
                base_val: Fraction | Factor = Fraction(m.group("num"))
            elif kind == "w":
                base_val = W(int(m.group("wk")), int(m.group("wa")))
            else:
                name = m.group("name").lower()
                if name == "m1":
                    base_val = m1
                elif name == "m2":
                    base_val = m2
                elif name in ("v1", "v2"):
                    base_val = V(int(name[1]))
                else:
                    raise ParseError(f"unknown symbol {name!r}", offset + pos)
            i += 1
            power = 1
            if i < n and tokens[i][0] == "op" and tokens[i][1].group("op") == "^":
                i += 1
                if i >= n or tokens[i][0] != "num" or "." in tokens[i][1].group("num"):
                    raise ParseError("exponent must be a positive integer", tok_pos(i))
                power = int(tokens[i][1].group("num"))
                if power < 1:
                    raise ParseError("exponent must be a positive integer", tok_pos(i))
                i += 1
            if isinstance(base_val, Factor):
                if divide:
                    raise ParseError("cannot divide by a field factor", offset + pos)
                factors.extend([base_val] * power)
            else:
                if divide:
                    if base_val == 0:
                        raise ParseError("division by zero", offset + pos)
                    coeff = coeff / base_val**power
                else:
                    coeff = coeff * base_val**power
            divide = False
            expect_factor = False
        if expect_factor:
            raise ParseError("dangling operator", tok_pos(i))
        if len(factors) != 2:
            if len(factors) == 0 and coeff == 0:
                continue  # literal zero term
            raise ParseError(
                f"monomial of field degree {len(factors)} (must be exactly 2)", start
            )
        terms.append((factors[0], factors[1], coeff))
    return make_form(terms)
