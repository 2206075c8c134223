"""
Sparse multivariate polynomials with exact coefficients.

Coefficients are Fractions (or ints) in every kernel that claims exactness;
complex coefficients are tolerated so that weights like i^n can ride along.
Evaluation on numpy arrays is vectorised; exact evaluation stays rational.
"""

from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Dict, Mapping, Sequence, Tuple

import numpy as np

Exponent = Tuple[int, ...]


def _is_zero(c) -> bool:
    return c == 0


@dataclass(frozen=True)
class Polynomial:
    nvars: int
    items: Tuple[Tuple[Exponent, object], ...] = ()

    # ─── Construction ────────────────────────────────────────────────────

    @classmethod
    def from_dict(cls, nvars: int, coeffs: Mapping[Exponent, object]) -> "Polynomial":
        clean = []
        for exps, c in coeffs.items():
            exps = tuple(int(e) for e in exps)
            if len(exps) != nvars:
                raise ValueError(f"exponent {exps} does not match {nvars} variables")
            if any(e < 0 for e in exps):
                raise ValueError(f"negative exponent {exps}")
            if not _is_zero(c):
                clean.append((exps, c))
        clean.sort(key=lambda item: item[0])
        return cls(nvars, tuple(clean))

    @classmethod
    def zero(cls, nvars: int) -> "Polynomial":
        return cls(nvars, ())

    @classmethod
    def constant(cls, nvars: int, value=1) -> "Polynomial":
        return cls.from_dict(nvars, {(0,) * nvars: value})

    @classmethod
    def variable(cls, nvars: int, index: int) -> "Polynomial":
        exps = [0] * nvars
        exps[index] = 1
        return cls.from_dict(nvars, {tuple(exps): Fraction(1)})

    @classmethod
    def linear(cls, constant, coefficients: Sequence) -> "Polynomial":
        """constant + sum_j coefficients[j] * x_j"""
        n = len(coefficients)
        coeffs: Dict[Exponent, object] = {(0,) * n: constant}
        for j, c in enumerate(coefficients):
            exps = [0] * n
            exps[j] = 1
            coeffs[tuple(exps)] = c
        return cls.from_dict(n, coeffs)

    @classmethod
    def univariate(cls, coefficients: Sequence) -> "Polynomial":
        return cls.from_dict(1, {(i,): c for i, c in enumerate(coefficients)})

    # ─── Views ───────────────────────────────────────────────────────────

    @cached_property
    def coeffs(self) -> Dict[Exponent, object]:
        return dict(self.items)

    def coefficient(self, exps: Exponent):
        return self.coeffs.get(tuple(exps), 0)

    def is_zero(self) -> bool:
        return not self.items

    @property
    def degree(self) -> int:
        return max((sum(e) for e, _ in self.items), default=-1)

    def is_complex(self) -> bool:
        return any(isinstance(c, complex) for _, c in self.items)

    def homogeneous_part(self, n: int) -> "Polynomial":
        return Polynomial.from_dict(self.nvars, {e: c for e, c in self.items if sum(e) == n})

    def __iter__(self):
        return iter(self.items)

    # ─── Arithmetic ──────────────────────────────────────────────────────

    def __add__(self, other) -> "Polynomial":
        if not isinstance(other, Polynomial):
            other = Polynomial.constant(self.nvars, other)
        self._check(other)
        out = dict(self.coeffs)
        for e, c in other.items:
            out[e] = out.get(e, 0) + c
        return Polynomial.from_dict(self.nvars, out)

    __radd__ = __add__

    def __neg__(self) -> "Polynomial":
        return Polynomial(self.nvars, tuple((e, -c) for e, c in self.items))

    def __sub__(self, other) -> "Polynomial":
        if not isinstance(other, Polynomial):
            other = Polynomial.constant(self.nvars, other)
        return self + (-other)

    def __rsub__(self, other) -> "Polynomial":
        return (-self) + other

    def __mul__(self, other) -> "Polynomial":
        if not isinstance(other, Polynomial):
            if _is_zero(other):
                return Polynomial.zero(self.nvars)
            return Polynomial(self.nvars, tuple((e, c * other) for e, c in self.items))
        self._check(other)
        out: Dict[Exponent, object] = {}
        for e1, c1 in self.items:
            for e2, c2 in other.items:
                e = tuple(a + b for a, b in zip(e1, e2))
                out[e] = out.get(e, 0) + c1 * c2
        return Polynomial.from_dict(self.nvars, out)

    __rmul__ = __mul__

    def __pow__(self, n: int) -> "Polynomial":
        result = Polynomial.constant(self.nvars, Fraction(1))
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def _check(self, other: "Polynomial"):
        if other.nvars != self.nvars:
            raise ValueError(f"variable count mismatch: {self.nvars} vs {other.nvars}")

    # ─── Calculus ────────────────────────────────────────────────────────

    def derivative(self, index: int, times: int = 1) -> "Polynomial":
        out: Dict[Exponent, object] = {}
        for e, c in self.items:
            if e[index] < times:
                continue
            factor = 1
            for j in range(times):
                factor *= e[index] - j
            ne = list(e)
            ne[index] -= times
            out[tuple(ne)] = out.get(tuple(ne), 0) + c * factor
        return Polynomial.from_dict(self.nvars, out)

    def derivative_multi(self, alpha: Sequence[int]) -> "Polynomial":
        p = self
        for i, a in enumerate(alpha):
            if a:
                p = p.derivative(i, a)
        return p

    def antiderivative(self, index: int) -> "Polynomial":
        out: Dict[Exponent, object] = {}
        for e, c in self.items:
            ne = list(e)
            ne[index] += 1
            out[tuple(ne)] = c / Fraction(ne[index]) if not isinstance(c, complex) else c / ne[index]
        return Polynomial.from_dict(self.nvars, out)

    def substitute(self, index: int, value: "Polynomial") -> "Polynomial":
        """Replace x_index by a polynomial in the same variables (x_index may still appear in it)."""
        self._check(value)
        result = Polynomial.zero(self.nvars)
        powers = {0: Polynomial.constant(self.nvars, Fraction(1))}
        for e, c in self.items:
            n = e[index]
            if n not in powers:
                powers[n] = value ** n
            rest = list(e)
            rest[index] = 0
            mono = Polynomial.from_dict(self.nvars, {tuple(rest): c})
            result = result + mono * powers[n]
        return result

    def drop_variable(self, index: int) -> "Polynomial":
        """Remove a variable that no longer occurs."""
        out = {}
        for e, c in self.items:
            if e[index]:
                raise ValueError(f"variable {index} still occurs in {e}")
            out[e[:index] + e[index + 1:]] = c
        return Polynomial.from_dict(self.nvars - 1, out)

    def integrate_variable(self, index: int, lower: "Polynomial", upper: "Polynomial") -> "Polynomial":
        """Exact integral over x_index between two polynomial bounds free of x_index."""
        anti = self.antiderivative(index)
        return (anti.substitute(index, upper) - anti.substitute(index, lower)).drop_variable(index)

    def compose_affine(self, origin: Sequence, matrix: Sequence[Sequence]) -> "Polynomial":
        """p(origin + M y) as a polynomial in y, with M given as rows (nvars x m)."""
        if len(origin) != self.nvars or len(matrix) != self.nvars:
            raise ValueError("affine map does not match polynomial variables")
        m = len(matrix[0]) if self.nvars else 0
        forms = [Polynomial.linear(origin[i], list(matrix[i])) for i in range(self.nvars)]
        cache: Dict[Tuple[int, int], Polynomial] = {}
        result = Polynomial.zero(m)
        for e, c in self.items:
            term = Polynomial.constant(m, c)
            for i, n in enumerate(e):
                if n:
                    if (i, n) not in cache:
                        cache[(i, n)] = forms[i] ** n
                    term = term * cache[(i, n)]
            result = result + term
        return result

    def scale_variables(self, factors: Sequence) -> "Polynomial":
        out = {}
        for e, c in self.items:
            for f, n in zip(factors, e):
                c = c * Fraction(f) ** n
            out[e] = c
        return Polynomial.from_dict(self.nvars, out)

    # ─── Evaluation ──────────────────────────────────────────────────────

    def evaluate_exact(self, point: Sequence):
        total = 0
        for e, c in self.items:
            term = c
            for x, n in zip(point, e):
                if n:
                    term = term * Fraction(x) ** n if not isinstance(x, complex) else term * x ** n
            total += term
        return total

    def evaluate(self, points) -> np.ndarray:
        """Vectorised evaluation; points has shape (..., nvars)."""
        pts = np.asarray(points, dtype=float)
        if self.nvars == 0:
            shape = pts.shape[:-1] if pts.ndim else ()
            return np.full(shape, complex(self.coefficient(())) if self.is_complex()
                           else float(self.coefficient(())))
        shape = pts.shape[:-1]
        dtype = complex if self.is_complex() else float
        out = np.zeros(shape, dtype=dtype)
        if not self.items:
            return out
        max_deg = [max(e[i] for e, _ in self.items) for i in range(self.nvars)]
        powers = []
        for i in range(self.nvars):
            col = pts[..., i]
            table = [np.ones(shape)]
            for _ in range(max_deg[i]):
                table.append(table[-1] * col)
            powers.append(table)
        for e, c in self.items:
            term = np.full(shape, complex(c) if dtype is complex else float(c), dtype=dtype)
            for i, n in enumerate(e):
                if n:
                    term = term * powers[i][n]
            out = out + term
        return out

    def abs_bound(self, radius: float) -> float:
        """Upper bound for |p(x)| on the ball |x| <= radius."""
        return sum(abs(complex(c)) * radius ** sum(e) for e, c in self.items)

    def __repr__(self) -> str:
        if not self.items:
            return "Polynomial(0)"
        parts = []
        for e, c in self.items:
            mono = "*".join(f"x{i}^{n}" if n > 1 else f"x{i}" for i, n in enumerate(e) if n)
            parts.append(f"{c}" + (f"*{mono}" if mono else ""))
        return "Polynomial(" + " + ".join(parts) + ")"


def linear_form_power(coefficients: Sequence, n: int) -> Polynomial:
    """(sum_j c_j y_j)^n, expanded exactly."""
    return Polynomial.linear(Fraction(0), list(coefficients)) ** n

