"""
Exact arithmetic in the localized Grothendieck ring Z[L, L^-1, (1 - L^n)^-1].

Every class is stored as a reduced rational function in L with integer
coefficients; the polynomial layer is sympy's dense univariate `Poly` over ZZ.
"""
import logging
from fractions import Fraction
from functools import lru_cache
from math import gcd
from typing import Dict, Mapping, Union

import sympy
from sympy import Poly, ZZ
from sympy.parsing.sympy_parser import convert_xor, parse_expr, standard_transformations
from sympy.polys.polyerrors import CoercionFailed, PolynomialError

from app.exceptions import MotiveArithmeticError, NonPolynomialResultError, PoleError
from app.models import ExtDimVector, HNType

logger = logging.getLogger(__name__)

L = sympy.Symbol("L")


def format_terms(coefficients: Mapping[int, int]) -> str:
    """Serialize {exponent: coefficient} as "c*L^k" terms in descending order."""
    if not coefficients:
        return "0"
    parts = []
    for k in sorted(coefficients, reverse=True):
        c = coefficients[k]
        magnitude = abs(c)
        if k == 0:
            body = str(magnitude)
        else:
            power = "L" if k == 1 else f"L^{k}"
            body = power if magnitude == 1 else f"{magnitude}*{power}"
        if not parts:
            parts.append(body if c > 0 else f"-{body}")
        else:
            parts.append(f"{'+' if c > 0 else '-'} {body}")
    return " ".join(parts)


def _to_poly(value) -> Poly:
    if isinstance(value, LPolynomial):
        return value._poly
    try:
        if isinstance(value, Poly):
            return Poly(value.as_expr(), L, domain=ZZ)
        if isinstance(value, Mapping):
            if any(k < 0 for k in value):
                raise MotiveArithmeticError("negative exponents belong in a MotiveExpr denominator")
            return Poly.from_dict({(k,): c for k, c in value.items() if c}, L, domain=ZZ)
        return Poly(value, L, domain=ZZ)
    except (CoercionFailed, PolynomialError) as e:
        raise MotiveArithmeticError(f"not an integer polynomial in L: {value!r} ({e})")


class LPolynomial:
    """
    An immutable polynomial in L with integer coefficients.
    """
    __slots__ = ("_poly",)

    def __init__(self, value: Union["LPolynomial", Poly, Mapping[int, int], int] = 0):
        self._poly = _to_poly(value)

    @classmethod
    def power(cls, k: int) -> "LPolynomial":
        return cls({k: 1})

    @property
    def coefficients(self) -> Dict[int, int]:
        return {monom[0]: int(c) for monom, c in self._poly.terms() if c != 0}

    @property
    def is_zero(self) -> bool:
        return self._poly.is_zero

    @property
    def degree(self) -> int:
        return -1 if self.is_zero else int(self._poly.degree())

    @property
    def leading_coefficient(self) -> int:
        return int(self._poly.LC())

    def eval(self, q: int) -> int:
        return int(self._poly.eval(q))

    def exquo(self, other: "LPolynomial") -> "LPolynomial":
        """Exact division; raises when other does not divide self."""
        quotient, remainder = self._poly.div(_to_poly(other))
        if not remainder.is_zero:
            raise NonPolynomialResultError(f"{other} does not divide {self}")
        return LPolynomial(quotient)

    def __add__(self, other):
        return LPolynomial(self._poly + _to_poly(other))

    __radd__ = __add__

    def __sub__(self, other):
        return LPolynomial(self._poly - _to_poly(other))

    def __rsub__(self, other):
        return LPolynomial(_to_poly(other) - self._poly)

    def __mul__(self, other):
        return LPolynomial(self._poly * _to_poly(other))

    __rmul__ = __mul__

    def __neg__(self):
        return LPolynomial(-self._poly)

    def __pow__(self, exponent: int):
        if exponent < 0:
            raise MotiveArithmeticError("negative powers of a polynomial are MotiveExprs")
        return LPolynomial(self._poly ** exponent)

    def __eq__(self, other):
        if isinstance(other, (LPolynomial, int)):
            return self._poly == _to_poly(other)
        return NotImplemented

    def __hash__(self):
        return hash(tuple(sorted(self.coefficients.items())))

    def __str__(self):
        return format_terms(self.coefficients)

    def __repr__(self):
        return f"LPolynomial('{self}')"


ONE = LPolynomial(1)


class MotiveExpr:
    """
    A reduced fraction numerator/denominator of integer polynomials in L.
    Normal form: gcd 1 over Q, coprime integer contents, positive leading
    coefficient of the denominator. Two MotiveExprs are equal iff their
    cross products agree.
    """
    __slots__ = ("_num", "_den")

    def __init__(self, numerator=0, denominator=1):
        num, den = _to_poly(numerator), _to_poly(denominator)
        if den.is_zero:
            raise MotiveArithmeticError("division by the zero motive")
        if num.is_zero:
            num, den = _to_poly(0), _to_poly(1)
        else:
            common = num.gcd(den)
            num, den = num.exquo(common), den.exquo(common)
            content = gcd(int(num.content()), int(den.content()))
            if content > 1:
                num, den = num.exquo_ground(content), den.exquo_ground(content)
            if den.LC() < 0:
                num, den = -num, -den
        self._num = num
        self._den = den

    @classmethod
    def lefschetz(cls, k: int = 1) -> "MotiveExpr":
        """L^k for any integer k; negative powers live in the denominator."""
        return cls({k: 1}) if k >= 0 else cls(1, {-k: 1})

    @classmethod
    def parse(cls, text: str) -> "MotiveExpr":
        """Parse an expression such as "(L^3-1)*(L^3-L)/(L-1)^4"."""
        try:
            expr = parse_expr(text.replace("−", "-"), local_dict={"L": L},
                              transformations=standard_transformations + (convert_xor,))
        except (SyntaxError, TypeError, sympy.SympifyError) as e:
            raise MotiveArithmeticError(f"cannot parse motive '{text}': {e}")
        if not expr.free_symbols <= {L}:
            raise MotiveArithmeticError(f"motive '{text}' uses symbols other than L")
        num, den = sympy.fraction(sympy.cancel(sympy.together(expr)))
        c_num, p_num = Poly(num, L, domain="QQ").clear_denoms(convert=True)
        c_den, p_den = Poly(den, L, domain="QQ").clear_denoms(convert=True)
        return cls(p_num * int(c_den), p_den * int(c_num))

    @property
    def numerator(self) -> LPolynomial:
        return LPolynomial(self._num)

    @property
    def denominator(self) -> LPolynomial:
        return LPolynomial(self._den)

    @property
    def is_zero(self) -> bool:
        return self._num.is_zero

    @property
    def is_polynomial(self) -> bool:
        return self._den == _to_poly(1)

    @property
    def degree(self) -> int:
        """deg(numerator) - deg(denominator); the dimension for classes of varieties."""
        if self.is_zero:
            raise MotiveArithmeticError("the zero motive has no degree")
        return int(self._num.degree()) - int(self._den.degree())

    def to_lpolynomial(self) -> LPolynomial:
        if not self.is_polynomial:
            raise NonPolynomialResultError(f"{self} is not a polynomial in L")
        return LPolynomial(self._num)

    def eval_at(self, q: int) -> Fraction:
        den = int(self._den.eval(q))
        if den == 0:
            raise PoleError(f"{self} has a pole at L={q}")
        return Fraction(int(self._num.eval(q)), den)

    def _coerce(self, other) -> "MotiveExpr":
        if isinstance(other, MotiveExpr):
            return other
        return MotiveExpr(other)

    def __add__(self, other):
        other = self._coerce(other)
        return MotiveExpr(self._num * other._den + other._num * self._den, self._den * other._den)

    __radd__ = __add__

    def __sub__(self, other):
        other = self._coerce(other)
        return MotiveExpr(self._num * other._den - other._num * self._den, self._den * other._den)

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        other = self._coerce(other)
        return MotiveExpr(self._num * other._num, self._den * other._den)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = self._coerce(other)
        if other.is_zero:
            raise MotiveArithmeticError("division by the zero motive")
        return MotiveExpr(self._num * other._den, self._den * other._num)

    def __rtruediv__(self, other):
        return self._coerce(other) / self

    def __neg__(self):
        return MotiveExpr(-self._num, self._den)

    def __pow__(self, exponent: int):
        if exponent >= 0:
            return MotiveExpr(self._num ** exponent, self._den ** exponent)
        return MotiveExpr(1) / MotiveExpr(self._num ** -exponent, self._den ** -exponent)

    def __eq__(self, other):
        if isinstance(other, (MotiveExpr, LPolynomial, int)):
            other = self._coerce(other)
            return self._num * other._den == other._num * self._den
        return NotImplemented

    def __hash__(self):
        return hash((self.numerator, self.denominator))

    def to_json(self) -> Dict[str, Dict[str, int]]:
        """Coefficient maps keyed by exponent, as emitted by the CLI's JSON mode."""
        return {
            "numerator": {str(k): c for k, c in sorted(self.numerator.coefficients.items(), reverse=True)},
            "denominator": {str(k): c for k, c in sorted(self.denominator.coefficients.items(), reverse=True)},
        }

    def __str__(self):
        if self.is_polynomial:
            return str(self.numerator)
        return f"({self.numerator})/({self.denominator})"

    def __repr__(self):
        return f"MotiveExpr('{self}')"


@lru_cache(maxsize=None)
def gaussian_binomial(n: int, k: int) -> LPolynomial:
    """Number of k-dimensional subspaces of an n-dimensional F_L-space."""
    if k < 0 or k > n:
        return LPolynomial(0)
    num, den = ONE, ONE
    for i in range(k):
        num = num * (LPolynomial.power(n - i) - 1)
        den = den * (LPolynomial.power(i + 1) - 1)
    return num.exquo(den)


@lru_cache(maxsize=None)
def count_matrices_of_rank(m: int, n: int, r: int) -> LPolynomial:
    """Number of m x n matrices of rank r over F_L."""
    if r < 0 or r > min(m, n):
        return LPolynomial(0)
    num, den = ONE, ONE
    for k in range(r):
        num = num * (LPolynomial.power(m) - LPolynomial.power(k)) * (LPolynomial.power(n) - LPolynomial.power(k))
        den = den * (LPolynomial.power(r) - LPolynomial.power(k))
    return num.exquo(den)


@lru_cache(maxsize=None)
def gl_polynomial(n: int) -> LPolynomial:
    result = ONE
    for k in range(n):
        result = result * (LPolynomial.power(n) - LPolynomial.power(k))
    return result


def class_gl(n: int) -> MotiveExpr:
    """[GL_n] = prod_{k<n} (L^n - L^k)."""
    return MotiveExpr(gl_polynomial(n))


def class_group(v: ExtDimVector) -> MotiveExpr:
    """[G_(s,d)] = [GL_s] * prod_i [GL_{d_i}]."""
    result = gl_polynomial(v.s)
    for d_i in v.d.dims:
        result = result * gl_polynomial(d_i)
    return MotiveExpr(result)


def class_pg(v: ExtDimVector) -> MotiveExpr:
    return class_group(v) / MotiveExpr(LPolynomial.power(1) - 1)


def class_parabolic(hn: HNType) -> MotiveExpr:
    """
    Stabilizer of the flag of subquotient sizes, block by block:
    L^{sum_{k<l} n_k n_l} * prod_k [GL_{n_k}] for the inf block and each vertex.
    """
    blocks = [[step.s for step in hn.steps]]
    for index in range(len(hn.weight.d.dims)):
        blocks.append([step.d.dims[index] for step in hn.steps])
    exponent = 0
    result = ONE
    for sizes in blocks:
        for k, n_k in enumerate(sizes):
            exponent += n_k * sum(sizes[k + 1:])
            result = result * gl_polynomial(n_k)
    return MotiveExpr(result * LPolynomial.power(exponent))
