"""
Quasi-polynomials on cones over rational polyhedra.

Everything here is exact: lattice points and k are ints, membership and
evaluation are Fraction arithmetic. Linear programs (scipy) are only used to
find bounding boxes and properness functionals, which are then re-checked
exactly.
"""

import itertools
import logging
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import ceil, floor
from typing import Callable, Iterator, List, Mapping, Optional, Protocol, Sequence, Tuple

import numpy as np
from scipy.optimize import linprog

from .config import settings
from .errors import EnumerationBoundError, PropernessError, SpinConditionError, UnboundedSupportError
from .polynomial import Polynomial

logger = logging.getLogger("thetak.quasipoly")

Lattice = Tuple[int, ...]


def as_lattice(lam) -> Lattice:
    if isinstance(lam, (tuple, list)):
        return tuple(int(x) for x in lam)
    return (int(lam),)


# ─── Polyhedra ───────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class Polyhedron:
    """{xi : <a_i, xi> >= b_i for every half-space}; may be empty or unbounded."""

    rank: int
    halfspaces: Tuple[Tuple[Tuple[Fraction, ...], Fraction], ...] = ()

    @classmethod
    def of(cls, rank: int, halfspaces: Sequence[Tuple[Sequence, object]]) -> "Polyhedron":
        hs = tuple((tuple(Fraction(x) for x in a), Fraction(b)) for a, b in halfspaces)
        for a, _ in hs:
            if len(a) != rank:
                raise ValueError(f"half-space normal {a} does not have rank {rank}")
        return cls(rank, hs)

    @classmethod
    def box(cls, lower: Sequence, upper: Sequence) -> "Polyhedron":
        """Axis box; None leaves a side open."""
        r = len(lower)
        hs = []
        for i in range(r):
            e = [Fraction(int(i == j)) for j in range(r)]
            if lower[i] is not None:
                hs.append((e, lower[i]))
            if upper[i] is not None:
                hs.append(([-x for x in e], -Fraction(upper[i])))
        return cls.of(r, hs)

    @classmethod
    def interval(cls, lo, hi) -> "Polyhedron":
        return cls.box([lo], [hi])

    @classmethod
    def whole(cls, rank: int) -> "Polyhedron":
        return cls(rank, ())

    def contains(self, xi: Sequence) -> bool:
        xi = [Fraction(x) for x in xi]
        return all(sum((a_j * x_j for a_j, x_j in zip(a, xi)), Fraction(0)) >= b for a, b in self.halfspaces)

    def intersect(self, other: "Polyhedron") -> "Polyhedron":
        return Polyhedron(self.rank, self.halfspaces + other.halfspaces)

    def split(self, normal: Sequence, offset) -> Tuple["Polyhedron", "Polyhedron"]:
        """The two closed halves along <normal, xi> = offset."""
        normal = tuple(Fraction(x) for x in normal)
        offset = Fraction(offset)
        return (Polyhedron(self.rank, self.halfspaces + ((normal, offset),)),
                Polyhedron(self.rank, self.halfspaces + ((tuple(-x for x in normal), -offset),)))

    def bounding_box(self) -> Optional[Tuple[Tuple[float, ...], Tuple[float, ...]]]:
        """Per-coordinate [min, max] by linear programming; None when empty. Infinite sides are inf."""
        if not self.halfspaces:
            return tuple([-np.inf] * self.rank), tuple([np.inf] * self.rank)
        a_ub = -np.array([[float(x) for x in a] for a, _ in self.halfspaces])
        b_ub = -np.array([float(b) for _, b in self.halfspaces])
        lows, highs = [], []
        for i in range(self.rank):
            c = np.zeros(self.rank)
            for sign, store in ((1.0, lows), (-1.0, highs)):
                c[i] = sign
                res = linprog(c, A_ub=a_ub, b_ub=b_ub, bounds=[(None, None)] * self.rank, method="highs")
                if res.status == 2:
                    return None
                if res.status == 3:
                    store.append(-sign * np.inf)
                else:
                    store.append(sign * res.fun)
        return tuple(lows), tuple(highs)

    def is_bounded(self) -> bool:
        box = self.bounding_box()
        return box is not None and all(np.isfinite(box[0])) and all(np.isfinite(box[1]))

    def lattice_points(self, k: int) -> Iterator[Lattice]:
        """lambda in Z^r with lambda / k in the polyhedron (bounded polyhedra only)."""
        box = self.bounding_box()
        if box is None:
            return
        lo, hi = box
        if not (all(np.isfinite(lo)) and all(np.isfinite(hi))):
            raise UnboundedSupportError("lattice enumeration needs a bounded window")
        ranges = [range(floor(l * k - 1e-9), ceil(h * k + 1e-9) + 1) for l, h in zip(lo, hi)]
        for lam in itertools.product(*ranges):
            if self.contains([Fraction(x, k) for x in lam]):
                yield tuple(lam)


# ─── Quasi-polynomials ───────────────────────────────────────────────────────

@dataclass(frozen=True)
class QuasiPolynomial:
    """
    Polynomial in (lambda_1..lambda_r, k) chosen by the residue of (lambda, k) mod period.

    Residue classes absent from the table evaluate to 0.
    """

    rank: int
    period: int
    table: Tuple[Tuple[Tuple[int, ...], Polynomial], ...]
    degree: int = 0

    @classmethod
    def build(cls, rank: int, period: int, table: Mapping[Tuple[int, ...], Polynomial]) -> "QuasiPolynomial":
        clean = []
        for residue, poly in table.items():
            residue = tuple(int(x) % period for x in residue)
            if len(residue) != rank + 1 or poly.nvars != rank + 1:
                raise ValueError("residue and polynomial must cover (lambda, k)")
            if not poly.is_zero():
                clean.append((residue, poly))
        clean.sort(key=lambda item: item[0])
        degree = max((p.degree for _, p in clean), default=0)
        return cls(rank, period, tuple(clean), degree)

    @classmethod
    def constant(cls, rank: int, value=1) -> "QuasiPolynomial":
        return cls.build(rank, 1, {(0,) * (rank + 1): Polynomial.constant(rank + 1, Fraction(value))})

    @classmethod
    def periodic(cls, rank: int, period: int, values: Mapping[Tuple[int, ...], object]) -> "QuasiPolynomial":
        """Degree-0 quasi-polynomial from a residue -> value table."""
        return cls.build(rank, period, {r: Polynomial.constant(rank + 1, Fraction(v)) for r, v in values.items()})

    def evaluate(self, lam, k: int) -> Fraction:
        lam = as_lattice(lam)
        residue = tuple(x % self.period for x in lam + (k,))
        for key, poly in self.table:
            if key == residue:
                return poly.evaluate_exact(lam + (k,))
        return Fraction(0)


# ─── Multiplicity functions ──────────────────────────────────────────────────

class MultiplicityFunction(Protocol):
    rank: int

    def evaluate(self, lam, k: int) -> Fraction:
        ...


@dataclass(frozen=True)
class Piece:
    polyhedron: Polyhedron
    coefficient: int
    qp: QuasiPolynomial


@dataclass(frozen=True)
class PiecewiseQP:
    """sum_P alpha_P m_P [C_P], closed-cone membership, plus optional point corrections."""

    rank: int
    pieces: Tuple[Piece, ...]
    defects: Tuple[Tuple[Tuple[Lattice, int], Fraction], ...] = ()

    @property
    def degree(self) -> int:
        return max((p.qp.degree for p in self.pieces), default=0)

    def evaluate(self, lam, k: int) -> Fraction:
        lam = as_lattice(lam)
        xi = [Fraction(x, k) for x in lam]
        total = Fraction(0)
        for piece in self.pieces:
            if piece.polyhedron.contains(xi):
                total += piece.coefficient * piece.qp.evaluate(lam, k)
        for key, delta in self.defects:
            if key == (lam, k):
                total += delta
        return total

    def with_defect(self, lam, k: int, delta=1) -> "PiecewiseQP":
        return PiecewiseQP(self.rank, self.pieces, self.defects + (((as_lattice(lam), int(k)), Fraction(delta)),))

    def refined(self, index: int, normal: Sequence, offset) -> "PiecewiseQP":
        """
        Split piece `index` along a hyperplane; the shared face is subtracted
        once so that every value is unchanged.
        """
        piece = self.pieces[index]
        left, right = piece.polyhedron.split(normal, offset)
        normal = tuple(Fraction(x) for x in normal)
        face = Polyhedron(self.rank, left.halfspaces + ((tuple(-x for x in normal), -Fraction(offset)),))
        new = (Piece(left, piece.coefficient, piece.qp),
               Piece(right, piece.coefficient, piece.qp),
               Piece(face, -piece.coefficient, piece.qp))
        return PiecewiseQP(self.rank, self.pieces[:index] + new + self.pieces[index + 1:], self.defects)

    def support_box(self) -> Optional[Tuple[Tuple[float, ...], Tuple[float, ...]]]:
        boxes = [p.polyhedron.bounding_box() for p in self.pieces]
        boxes = [b for b in boxes if b is not None]
        if not boxes:
            return None
        lo = tuple(min(b[0][i] for b in boxes) for i in range(self.rank))
        hi = tuple(max(b[1][i] for b in boxes) for i in range(self.rank))
        return lo, hi


def pqp_eval(m: PiecewiseQP, lam, k: int) -> Fraction:
    if k < 1:
        raise ValueError("k must be a positive integer")
    return m.evaluate(lam, k)


@dataclass(frozen=True)
class OracleMultiplicity:
    """A closed-form or derived multiplicity (lambda, k) -> integer."""

    rank: int
    oracle: Callable[[Lattice, int], int]
    name: str = "oracle"

    def evaluate(self, lam, k: int) -> Fraction:
        return Fraction(self.oracle(as_lattice(lam), k))


@dataclass(frozen=True)
class CorrectedMultiplicity:
    """A multiplicity function with point corrections added on top."""

    base: MultiplicityFunction
    defects: Tuple[Tuple[Tuple[Lattice, int], Fraction], ...] = ()

    @property
    def rank(self) -> int:
        return self.base.rank

    def evaluate(self, lam, k: int) -> Fraction:
        lam = as_lattice(lam)
        value = Fraction(self.base.evaluate(lam, k))
        for key, delta in self.defects:
            if key == (lam, k):
                value += delta
        return value

    def with_defect(self, lam, k: int, delta=1) -> "CorrectedMultiplicity":
        return CorrectedMultiplicity(self.base, self.defects + (((as_lattice(lam), int(k)), Fraction(delta)),))


def with_defect(m: MultiplicityFunction, lam, k: int, delta=1) -> MultiplicityFunction:
    if isinstance(m, (PiecewiseQP, CorrectedMultiplicity)):
        return m.with_defect(lam, k, delta)
    return CorrectedMultiplicity(m).with_defect(lam, k, delta)


@dataclass(frozen=True)
class PointwiseDifference:
    first: MultiplicityFunction
    second: MultiplicityFunction

    @property
    def rank(self) -> int:
        return self.first.rank

    def evaluate(self, lam, k: int) -> Fraction:
        return Fraction(self.first.evaluate(lam, k)) - Fraction(self.second.evaluate(lam, k))


# ─── Window comparisons ──────────────────────────────────────────────────────

@dataclass(frozen=True)
class Counterexample:
    lam: Lattice
    k: int
    first: Fraction
    second: Fraction


@dataclass(frozen=True)
class WindowComparison:
    equal: bool
    counterexample: Optional[Counterexample]
    checked: int

    def __bool__(self) -> bool:
        return self.equal


def pqp_diff_zero_on_window(m1: MultiplicityFunction, m2: MultiplicityFunction, window: Polyhedron,
                            k_max: int) -> WindowComparison:
    checked = 0
    for k in range(1, k_max + 1):
        for lam in window.lattice_points(k):
            checked += 1
            v1, v2 = m1.evaluate(lam, k), m2.evaluate(lam, k)
            if v1 != v2:
                logger.info("window mismatch at lambda=%s k=%d: %s != %s", lam, k, v1, v2)
                return WindowComparison(False, Counterexample(lam, k, v1, v2), checked)
    return WindowComparison(True, None, checked)


@dataclass(frozen=True)
class Chamber:
    polyhedron: Polyhedron
    qp: QuasiPolynomial


def chamber_conflicts(chambers: Sequence[Chamber], window: Polyhedron, k_max: int) -> List[Counterexample]:
    """
    Points of the window where two closed chambers both apply but their
    quasi-polynomials disagree.
    """
    conflicts = []
    for k in range(1, k_max + 1):
        for lam in window.lattice_points(k):
            xi = [Fraction(x, k) for x in lam]
            values = [c.qp.evaluate(lam, k) for c in chambers if c.polyhedron.contains(xi)]
            if len(set(values)) > 1:
                conflicts.append(Counterexample(lam, k, values[0], next(v for v in values if v != values[0])))
    return conflicts


# ─── Vector partitions ───────────────────────────────────────────────────────

def properness_functional(weights: Sequence[Sequence[int]]) -> Tuple[Fraction, ...]:
    """An exact c with <c, w> > 0 for every weight, or PropernessError."""
    return _properness_functional(tuple(as_lattice(w) for w in weights))


@lru_cache(maxsize=128)
def _properness_functional(weights: Tuple[Lattice, ...]) -> Tuple[Fraction, ...]:
    r = len(weights[0])
    w = np.array([[float(x) for x in v] for v in weights])
    res = linprog(np.zeros(r), A_ub=-w, b_ub=-np.ones(len(weights)), bounds=[(None, None)] * r, method="highs")
    if res.status != 0:
        raise PropernessError("weights do not lie in an open half-space")
    c = tuple(Fraction(float(x)).limit_denominator(10 ** 6) for x in res.x)
    if any(sum((ci * Fraction(wi) for ci, wi in zip(c, v)), Fraction(0)) <= 0 for v in weights):
        raise PropernessError("could not certify a separating functional for the weights")
    return c


def vector_partition(weights: Sequence[Sequence[int]], a, mu, k: int) -> int:
    """#{j in N^n : mu = k a + sum_i (j_i + 1/2) w_i}."""
    weights = [as_lattice(w) for w in weights]
    if any(x % 2 for w in weights for x in w):
        raise SpinConditionError("vector partitions are only defined for even weights")
    a, mu = as_lattice(a), as_lattice(mu)
    r = len(mu)
    target = [mu[i] - k * a[i] - sum(w[i] for w in weights) // 2 for i in range(r)]
    c = properness_functional(weights)
    scores = [sum((ci * wi for ci, wi in zip(c, w)), Fraction(0)) for w in weights]
    budget = sum((ci * ti for ci, ti in zip(c, target)), Fraction(0))
    if budget < 0:
        return 0
    bounds = [floor(budget / s) for s in scores]
    box = 1
    for b in bounds[:-1]:
        box *= b + 1
    if box > settings.ENUMERATION_CAP:
        raise EnumerationBoundError(f"vector partition scan of {box} points exceeds the cap")
    return _count_partitions(weights, target, bounds)


def _count_partitions(weights: List[Lattice], target: List[int], bounds: List[int]) -> int:
    last = weights[-1]
    count = 0
    for head in itertools.product(*[range(b + 1) for b in bounds[:-1]]):
        rest = [target[i] - sum(j * w[i] for j, w in zip(head, weights[:-1])) for i in range(len(target))]
        # solve rest = j_last * last
        j = None
        for x, y in zip(rest, last):
            if y == 0:
                if x != 0:
                    break
                continue
            if x % y:
                break
            cand = x // y
            if cand < 0 or (j is not None and cand != j):
                break
            j = cand
        else:
            if j is not None or not any(rest):
                count += 1
    return count


# ─── Dilation quasi-polynomials ──────────────────────────────────────────────

@dataclass(frozen=True)
class DilationFit:
    """k -> m(k lambda0, k) as one polynomial in k per residue class mod period."""

    period: int
    polynomials: Tuple[Polynomial, ...]
    verified: bool
    counterexample: Optional[Tuple[int, Fraction, Fraction]] = None

    def evaluate(self, k: int) -> Fraction:
        return self.polynomials[k % self.period].evaluate_exact((k,))


def _interpolate(xs: Sequence[int], ys: Sequence[Fraction]) -> Polynomial:
    result = Polynomial.zero(1)
    x = Polynomial.variable(1, 0)
    for i, (xi, yi) in enumerate(zip(xs, ys)):
        basis = Polynomial.constant(1, Fraction(1))
        for j, xj in enumerate(xs):
            if j != i:
                basis = basis * (x - xj) * Fraction(1, xi - xj)
        result = result + basis * yi
    return result


def dilation_quasi_polynomial(m: MultiplicityFunction, lam0: Sequence[int], period: int, degree: int,
                              k_min: int = 1, checks: int = 3) -> DilationFit:
    """Fit per residue class from degree + 1 samples, then test `checks` further samples."""
    lam0 = as_lattice(lam0)
    polys = []
    for residue in range(period):
        ks = [k for k in range(k_min, k_min + period * (degree + 1 + checks) + period) if k % period == residue]
        fit_ks, test_ks = ks[: degree + 1], ks[degree + 1: degree + 1 + checks]
        ys = [Fraction(m.evaluate(tuple(k * x for x in lam0), k)) for k in fit_ks]
        poly = _interpolate(fit_ks, ys)
        polys.append(poly)
        for k in test_ks:
            actual = Fraction(m.evaluate(tuple(k * x for x in lam0), k))
            predicted = poly.evaluate_exact((k,))
            if actual != predicted:
                return DilationFit(period, tuple(polys), False, (k, actual, predicted))
    return DilationFit(period, tuple(polys), True)
