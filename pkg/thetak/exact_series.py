"""
Exact series layer.

Bernoulli numbers and polynomials, truncated power series of the analytic
germs the expansions are built from, differential-operator series obtained
from them, and Abel-summed power sums at roots of unity.
"""

import cmath
import logging
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import comb, factorial
from typing import Dict, Optional, Sequence, Tuple, Union

from .config import settings
from .errors import (
    UnknownGermError,
    UnsupportedOrderError,
    ZeroConstantTermError,
    DomainError,
)
from .polynomial import Polynomial

logger = logging.getLogger("thetak.exact_series")

Rational = Fraction


# ─── Bernoulli ───────────────────────────────────────────────────────────────

@lru_cache(maxsize=None)
def bernoulli_number(n: int) -> Fraction:
    """B_n for the generating function t/(e^t - 1), so B_1 = -1/2."""
    if n < 0:
        raise ValueError("Bernoulli index must be non-negative")
    if n == 0:
        return Fraction(1)
    # sum_{j<=n} C(n+1, j) B_j = 0
    acc = sum(comb(n + 1, j) * bernoulli_number(j) for j in range(n))
    return Fraction(-acc, n + 1)


def bernoulli_polynomial(n: int, x) -> Fraction:
    x = Fraction(x)
    return sum((comb(n, j) * bernoulli_number(j) * x ** (n - j) for j in range(n + 1)), Fraction(0))


# ─── Power series ────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class PowerSeries:
    """Truncated power series: every stored monomial has degree <= order."""

    poly: Polynomial
    order: int

    def __post_init__(self):
        if self.poly.degree > self.order:
            object.__setattr__(self, "poly", _truncate(self.poly, self.order))

    @classmethod
    def from_coefficients(cls, nvars: int, coeffs: Dict[Tuple[int, ...], Fraction], order: int):
        return cls(Polynomial.from_dict(nvars, coeffs), order)

    @classmethod
    def univariate(cls, coefficients: Sequence, order: int) -> "PowerSeries":
        return cls(Polynomial.univariate([Fraction(c) for c in coefficients[: order + 1]]), order)

    @classmethod
    def one(cls, nvars: int, order: int) -> "PowerSeries":
        return cls(Polynomial.constant(nvars, Fraction(1)), order)

    @property
    def nvars(self) -> int:
        return self.poly.nvars

    @property
    def coeffs(self) -> Dict[Tuple[int, ...], Fraction]:
        return self.poly.coeffs

    def coefficient(self, *exps: int) -> Fraction:
        return self.poly.coefficient(tuple(exps))

    @property
    def constant_term(self) -> Fraction:
        return self.poly.coefficient((0,) * self.nvars)

    def homogeneous_part(self, n: int) -> Polynomial:
        if n > self.order:
            raise UnsupportedOrderError(f"degree {n} exceeds series truncation {self.order}")
        return self.poly.homogeneous_part(n)

    def truncate(self, order: int) -> "PowerSeries":
        return PowerSeries(self.poly, min(order, self.order))

    def __add__(self, other: "PowerSeries") -> "PowerSeries":
        return PowerSeries(self.poly + other.poly, min(self.order, other.order))

    def __sub__(self, other: "PowerSeries") -> "PowerSeries":
        return PowerSeries(self.poly - other.poly, min(self.order, other.order))

    def __mul__(self, other) -> "PowerSeries":
        if isinstance(other, PowerSeries):
            order = min(self.order, other.order)
            return PowerSeries(_truncate(_truncate(self.poly, order) * _truncate(other.poly, order), order),
                               order)
        return PowerSeries(self.poly * other, self.order)

    __rmul__ = __mul__

    def __eq__(self, other) -> bool:
        if not isinstance(other, PowerSeries):
            return NotImplemented
        order = min(self.order, other.order)
        return _truncate(self.poly, order) == _truncate(other.poly, order)

    def __hash__(self):
        return hash((self.poly, self.order))

    def reciprocal(self) -> "PowerSeries":
        c0 = self.constant_term
        if c0 == 0:
            raise ZeroConstantTermError("reciprocal needs a non-zero constant term")
        u = PowerSeries(self.poly * (Fraction(1) / c0) - Fraction(1), self.order)
        result = PowerSeries.one(self.nvars, self.order)
        power = PowerSeries.one(self.nvars, self.order)
        # u has no constant term, so u^j only reaches degree >= j
        for _ in range(self.order):
            power = power * (u * Fraction(-1))
            result = result + power
        return result * (Fraction(1) / c0)

    def square_root(self) -> "PowerSeries":
        if self.constant_term != 1:
            raise ZeroConstantTermError("square root needs constant term 1")
        y = PowerSeries.one(self.nvars, self.order)
        half = Fraction(1, 2)
        # Newton: y <- (y + a/y)/2, doubling the number of correct degrees
        for _ in range(self.order.bit_length() + 2):
            nxt = (y + self * y.reciprocal()) * half
            if nxt == y:
                break
            y = nxt
        return y

    def compose_linear(self, form: Sequence) -> "PowerSeries":
        """For a univariate series f, return f(<form, X>) in len(form) variables."""
        if self.nvars != 1:
            raise DomainError("only univariate series can be composed with a linear form")
        lin = Polynomial.linear(Fraction(0), [Fraction(c) for c in form])
        out = Polynomial.zero(len(form))
        power = Polynomial.constant(len(form), Fraction(1))
        for n in range(self.order + 1):
            c = self.poly.coefficient((n,))
            if c:
                out = out + power * c
            power = power * lin
        return PowerSeries(out, self.order)

    def __repr__(self) -> str:
        return f"PowerSeries({self.poly!r}, order={self.order})"


def _truncate(poly: Polynomial, order: int) -> Polynomial:
    return Polynomial.from_dict(poly.nvars, {e: c for e, c in poly.items if sum(e) <= order})


def sinc_series(order: int) -> PowerSeries:
    """sin(u)/u"""
    coeffs = [Fraction(0)] * (order + 1)
    for n in range(0, order // 2 + 1):
        coeffs[2 * n] = Fraction((-1) ** n, factorial(2 * n + 1))
    return PowerSeries.univariate(coeffs, order)


def series_ops(a: PowerSeries, b: Optional[PowerSeries], op: str) -> PowerSeries:
    if op == "multiply":
        return a * b
    if op == "reciprocal":
        return a.reciprocal()
    if op == "square_root":
        return a.square_root()
    raise ValueError(f"unknown series operation: {op}")


# ─── Germ catalog ────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class Germ:
    """A catalog germ: `one`, `x_over_sin(...)`, `jhalf_su2`, `jhalf_torus`, `jhalf_quotient_su2_t`."""

    name: str
    weights: Tuple[Tuple[Fraction, ...], ...] = ()
    rank: int = 1

    @classmethod
    def parse(cls, text: str) -> "Germ":
        from .spec_parser import parse_call

        call = parse_call(text)
        if call.name not in GERM_NAMES:
            raise UnknownGermError(f"unknown germ: {call.name}")
        args = call.flat_args()
        if call.name == "x_over_sin":
            if not args:
                raise UnknownGermError("x_over_sin needs at least one weight")
            return cls.x_over_sin(args)
        rank = int(args[0]) if args and call.name in ("one", "jhalf_torus") else 1
        return cls(call.name, (), rank)

    @classmethod
    def x_over_sin(cls, weights) -> "Germ":
        vecs = []
        for w in weights:
            vec = tuple(Fraction(c) for c in w) if isinstance(w, (tuple, list)) else (Fraction(w),)
            vecs.append(vec)
        ranks = {len(v) for v in vecs}
        if len(ranks) != 1:
            raise UnknownGermError("x_over_sin weights must share one rank")
        return cls("x_over_sin", tuple(vecs), ranks.pop())

    def __str__(self) -> str:
        if self.name != "x_over_sin":
            return self.name if self.rank == 1 else f"{self.name}({self.rank})"
        if self.rank == 1:
            return "x_over_sin(" + ",".join(str(w[0]) for w in self.weights) + ")"
        vecs = ["(" + ",".join(str(c) for c in w) + ")" for w in self.weights]
        return "x_over_sin(" + ",".join(vecs) + ")"


GERM_NAMES = ("one", "x_over_sin", "jhalf_su2", "jhalf_torus", "jhalf_quotient_su2_t")


def germ_taylor(germ: Union[Germ, str], order: int) -> PowerSeries:
    if isinstance(germ, str):
        germ = Germ.parse(germ)
    if order < 0 or order > settings.SERIES_MAX_ORDER:
        raise UnsupportedOrderError(f"series order {order} outside [0, {settings.SERIES_MAX_ORDER}]")
    return _germ_taylor_cached(germ, order)


@lru_cache(maxsize=256)
def _germ_taylor_cached(germ: Germ, order: int) -> PowerSeries:
    if germ.name in ("one", "jhalf_torus"):
        return PowerSeries.one(germ.rank, order)
    if germ.name == "jhalf_su2":
        j = sinc_series(order) * sinc_series(order)
        return j.square_root()
    if germ.name == "jhalf_quotient_su2_t":
        return sinc_series(order)
    if germ.name == "x_over_sin":
        u_over_sin = sinc_series(order).reciprocal()
        result = PowerSeries.one(germ.rank, order)
        for w in germ.weights:
            result = result * u_over_sin.compose_linear([c / 2 for c in w])
        logger.debug("x_over_sin%s to order %d", germ.weights, order)
        return result
    raise UnknownGermError(f"unknown germ: {germ.name}")


# ─── Differential-operator series ────────────────────────────────────────────

@dataclass(frozen=True)
class DiffOpSeries:
    """
    sum_n k^{-n} p_n(i d).

    Symbols are stored with the coefficients of the germ; the factor i^{|beta|}
    of each monomial d^beta is applied when the operator acts.
    """

    nvars: int
    symbols: Tuple[Polynomial, ...]

    @property
    def order(self) -> int:
        return len(self.symbols) - 1

    @classmethod
    def identity(cls, nvars: int, order: Optional[int] = None) -> "DiffOpSeries":
        order = settings.SERIES_MAX_ORDER if order is None else order
        one = Polynomial.constant(nvars, Fraction(1))
        return cls(nvars, (one,) + tuple(Polynomial.zero(nvars) for _ in range(order)))

    def symbol(self, n: int) -> Polynomial:
        if n > self.order:
            raise UnsupportedOrderError(f"operator order {n} exceeds truncation {self.order}")
        return self.symbols[n]

    def complex_symbol(self, n: int) -> Polynomial:
        """p_n with i^{|beta|} folded into each coefficient."""
        out = {}
        for e, c in self.symbol(n).items:
            out[e] = c * (1j ** sum(e))
        return Polynomial.from_dict(self.nvars, out)

    def compose(self, other: "DiffOpSeries") -> "DiffOpSeries":
        if other.nvars != self.nvars:
            raise DomainError("operator variable counts differ")
        order = min(self.order, other.order)
        out = []
        for n in range(order + 1):
            acc = Polynomial.zero(self.nvars)
            for l in range(n + 1):
                acc = acc + self.symbols[l] * other.symbols[n - l]
            out.append(acc)
        return DiffOpSeries(self.nvars, tuple(out))

    def is_identity(self) -> bool:
        return self.symbols[0] == Polynomial.constant(self.nvars, Fraction(1)) and all(
            s.is_zero() for s in self.symbols[1:])


def to_diff_op(s: PowerSeries) -> DiffOpSeries:
    return DiffOpSeries(s.nvars, tuple(s.poly.homogeneous_part(n) for n in range(s.order + 1)))


# ─── Roots of unity ──────────────────────────────────────────────────────────

@dataclass(frozen=True)
class GaussianRational:
    re: Fraction
    im: Fraction = Fraction(0)

    @classmethod
    def of(cls, value) -> "GaussianRational":
        if isinstance(value, GaussianRational):
            return value
        return cls(Fraction(value), Fraction(0))

    def __add__(self, other):
        other = GaussianRational.of(other)
        return GaussianRational(self.re + other.re, self.im + other.im)

    __radd__ = __add__

    def __sub__(self, other):
        other = GaussianRational.of(other)
        return GaussianRational(self.re - other.re, self.im - other.im)

    def __rsub__(self, other):
        return GaussianRational.of(other) - self

    def __neg__(self):
        return GaussianRational(-self.re, -self.im)

    def __mul__(self, other):
        other = GaussianRational.of(other)
        return GaussianRational(self.re * other.re - self.im * other.im,
                                self.re * other.im + self.im * other.re)

    __rmul__ = __mul__

    def conjugate(self):
        return GaussianRational(self.re, -self.im)

    def norm(self) -> Fraction:
        return self.re * self.re + self.im * self.im

    def __truediv__(self, other):
        other = GaussianRational.of(other)
        n = other.norm()
        if n == 0:
            raise ZeroDivisionError("division by zero Gaussian rational")
        num = self * other.conjugate()
        return GaussianRational(num.re / n, num.im / n)

    def __rtruediv__(self, other):
        return GaussianRational.of(other) / self

    def __pow__(self, n: int):
        result = GaussianRational(Fraction(1))
        base = self if n >= 0 else GaussianRational(Fraction(1)) / self
        for _ in range(abs(n)):
            result = result * base
        return result

    def __complex__(self) -> complex:
        return complex(float(self.re), float(self.im))

    def __eq__(self, other) -> bool:
        if isinstance(other, (int, Fraction)):
            return self.im == 0 and self.re == other
        if isinstance(other, GaussianRational):
            return self.re == other.re and self.im == other.im
        if isinstance(other, complex):
            return complex(self) == other
        return NotImplemented

    def __hash__(self):
        return hash((self.re, self.im))

    def to_number(self):
        return self.re if self.im == 0 else complex(self)

    def __repr__(self) -> str:
        return f"({self.re} + {self.im}i)"


_EXACT_POWERS = {
    0: GaussianRational(Fraction(1)),
    1: GaussianRational(Fraction(0), Fraction(1)),
    2: GaussianRational(Fraction(-1)),
    3: GaussianRational(Fraction(0), Fraction(-1)),
}


@dataclass(frozen=True)
class RootOfUnity:
    """exp(2 pi i * turn), turn a rational rotation number kept in [0, 1)."""

    turn: Fraction

    def __post_init__(self):
        object.__setattr__(self, "turn", Fraction(self.turn) % 1)

    @classmethod
    def from_rotation(cls, text: Union[str, Fraction, int]) -> "RootOfUnity":
        if isinstance(text, str):
            from .spec_parser import parse_rotation
            return cls(parse_rotation(text))
        return cls(Fraction(text))

    @property
    def order(self) -> int:
        return self.turn.denominator

    def is_one(self) -> bool:
        return self.turn == 0

    def power(self, n) -> "RootOfUnity":
        return RootOfUnity(self.turn * Fraction(n))

    def exact(self) -> Optional[GaussianRational]:
        quarter = self.turn * 4
        if quarter.denominator != 1:
            return None
        return _EXACT_POWERS[int(quarter) % 4]

    def value(self):
        """GaussianRational when exact, complex otherwise."""
        ex = self.exact()
        return ex if ex is not None else complex(self)

    def __complex__(self) -> complex:
        ex = self.exact()
        if ex is not None:
            return complex(ex)
        return cmath.exp(2j * cmath.pi * float(self.turn))

    def __str__(self) -> str:
        return f"exp(2πi·{self.turn})"


@lru_cache(maxsize=None)
def abel_numerator(m: int) -> Tuple[int, ...]:
    """
    Integer coefficients of P_m with sum_j j^m z^j = P_m(z) / (1 - z)^{m+1}.

    P_0 = 1 and P_{m+1} = z [(1 - z) P_m' + (m + 1) P_m].
    """
    if m == 0:
        return (1,)
    prev = abel_numerator(m - 1)
    deriv = [i * c for i, c in enumerate(prev)][1:]
    # (1 - z) P' + m P
    inner = [0] * (len(prev) + 1)
    for i, c in enumerate(deriv):
        inner[i] += c
        inner[i + 1] -= c
    for i, c in enumerate(prev):
        inner[i] += m * c
    while len(inner) > 1 and inner[-1] == 0:
        inner.pop()
    return tuple([0] + inner)


def _as_root(zeta) -> Union[RootOfUnity, complex]:
    if isinstance(zeta, RootOfUnity):
        return zeta
    if isinstance(zeta, (Fraction, str)):
        return RootOfUnity.from_rotation(zeta)
    return complex(zeta)


def lerch_s(zeta, m: int):
    """
    Abel sum S_m(zeta) of sum_{j>=0} j^m zeta^j.

    Exact (GaussianRational) for zeta of order 2 or 4, complex otherwise.
    """
    z = _as_root(zeta)
    if isinstance(z, RootOfUnity):
        if z.is_one():
            raise DomainError("lerch_s is undefined at zeta = 1; use the Bernoulli path")
        value = z.exact()
        if value is None:
            value = complex(z)
    else:
        if abs(z - 1) < 1e-15:
            raise DomainError("lerch_s is undefined at zeta = 1; use the Bernoulli path")
        value = z
    num = 0
    power = GaussianRational(Fraction(1)) if isinstance(value, GaussianRational) else 1 + 0j
    for c in abel_numerator(m):
        num = num + power * c
        power = power * value
    return num / ((1 - value) ** (m + 1))


def shifted_lerch_s(zeta, m: int, shift=Fraction(1, 2)):
    """Abel sum of sum_j zeta^j (j + shift)^m."""
    shift = Fraction(shift)
    total = 0
    for i in range(m + 1):
        total = total + lerch_s(zeta, i) * (comb(m, i) * shift ** (m - i))
    return total


def as_number(value):
    """Collapse GaussianRational into Fraction (real) or complex."""
    if isinstance(value, GaussianRational):
        return value.to_number()
    return value
