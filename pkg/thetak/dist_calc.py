"""
Distribution calculus.

Test functions are finite sums p(xi) exp(-Q(xi)) with rational polynomial p
and quadratic Q. Distributions are finite sums of

    DeltaTerm    weighted point masses
    DensityTerm  polynomial densities pushed forward from a box or simplex
                 in parameter space: xi = origin + W s
    SphereTerm   uniform measure on a centred sphere of R^3
    RadialTerm   rotation-invariant measure int h(s) sphere(s, 1) ds on R^3

each carrying a derivative multi-index resolved on the test-function side
with <d^a T, phi> = (-1)^|a| <T, d^a phi>.
"""

import logging
import math
from dataclasses import dataclass, replace
from fractions import Fraction
from functools import lru_cache
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from .config import settings
from .errors import (
    InvalidTestFunctionError,
    OperatorOrderError,
    UnboundedSupportError,
    UnsupportedOrderError,
    UnsupportedTermError,
)
from .exact_series import DiffOpSeries
from .polynomial import Polynomial, linear_form_power
from .quadrature import integrate_box, integrate_interval, integrate_simplex, sphere_average

logger = logging.getLogger("thetak.dist_calc")

Number = Union[int, Fraction, complex]
Point = Tuple[Fraction, ...]


def _frac_vec(values: Iterable) -> Point:
    return tuple(Fraction(v) for v in values)


def _exact_sqrt(q: Fraction) -> Optional[Fraction]:
    num, den = math.isqrt(q.numerator), math.isqrt(q.denominator)
    if num * num == q.numerator and den * den == q.denominator:
        return Fraction(num, den)
    return None


# ─── Test functions ──────────────────────────────────────────────────────────

@dataclass(frozen=True)
class GaussianTerm:
    poly: Polynomial
    exponent: Polynomial

    def quadratic_matrix(self) -> np.ndarray:
        n = self.exponent.nvars
        a = np.zeros((n, n))
        for e, c in self.exponent.items:
            if sum(e) != 2:
                continue
            idx = [i for i, m in enumerate(e) for _ in range(m)]
            if idx[0] == idx[1]:
                a[idx[0], idx[0]] = float(c)
            else:
                a[idx[0], idx[1]] = a[idx[1], idx[0]] = float(c) / 2
        return a

    def linear_vector(self) -> np.ndarray:
        n = self.exponent.nvars
        b = np.zeros(n)
        for e, c in self.exponent.items:
            if sum(e) == 1:
                b[e.index(1)] = float(c)
        return b


@dataclass(frozen=True)
class DecayBall:
    """Outside this ball the probe is below the eps it was computed for."""

    center: Tuple[float, ...]
    radius: float


@dataclass(frozen=True)
class TestFunction:
    """sum_t p_t(xi) exp(-Q_t(xi)) on R^rank."""

    __test__ = False

    rank: int
    terms: Tuple[GaussianTerm, ...]

    @classmethod
    def gaussian(cls, center: Sequence, form: Optional[Sequence[Sequence]] = None,
                 poly: Optional[Polynomial] = None) -> "TestFunction":
        """p(xi) exp(-(xi - c)^T A (xi - c)); A defaults to the identity."""
        center = _frac_vec(center)
        r = len(center)
        if form is None:
            form = [[Fraction(int(i == j)) for j in range(r)] for i in range(r)]
        form = [[Fraction(v) for v in row] for row in form]
        mat = np.array([[float(v) for v in row] for row in form])
        if mat.shape != (r, r) or not np.allclose(mat, mat.T) or np.linalg.eigvalsh(mat).min() <= 0:
            raise InvalidTestFunctionError("the quadratic form of a test function must be positive definite")
        shifted = [Polynomial.linear(-center[i], [Fraction(int(i == j)) for j in range(r)]) for i in range(r)]
        q = Polynomial.zero(r)
        for i in range(r):
            for j in range(r):
                if form[i][j]:
                    q = q + shifted[i] * shifted[j] * form[i][j]
        poly = Polynomial.constant(r, Fraction(1)) if poly is None else poly
        return cls(r, (GaussianTerm(poly, q),))

    def __add__(self, other: "TestFunction") -> "TestFunction":
        return TestFunction(self.rank, self.terms + other.terms)._merged()

    def scale(self, c) -> "TestFunction":
        return TestFunction(self.rank, tuple(GaussianTerm(t.poly * c, t.exponent) for t in self.terms))

    def times_polynomial(self, p: Polynomial) -> "TestFunction":
        return TestFunction(self.rank, tuple(GaussianTerm(t.poly * p, t.exponent) for t in self.terms))

    def _merged(self) -> "TestFunction":
        groups: Dict[Polynomial, Polynomial] = {}
        for t in self.terms:
            groups[t.exponent] = groups.get(t.exponent, Polynomial.zero(self.rank)) + t.poly
        return TestFunction(self.rank, tuple(GaussianTerm(p, q) for q, p in groups.items() if not p.is_zero()))

    # ─── Evaluation ──────────────────────────────────────────────────────

    def __call__(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        if pts.ndim == 0 or pts.shape[-1] != self.rank:
            pts = pts[..., None] if self.rank == 1 else pts
        out = 0
        for t in self.terms:
            out = out + t.poly.evaluate(pts) * np.exp(-t.exponent.evaluate(pts))
        if isinstance(out, int):
            return np.zeros(pts.shape[:-1])
        return out

    def at(self, point: Sequence) -> complex:
        return complex(self(np.asarray([float(x) for x in point]))[()])

    def derivative(self, alpha: Sequence[int]) -> "TestFunction":
        return _derivative(self, tuple(alpha))

    def apply_operator(self, p: Polynomial) -> "TestFunction":
        """p(d) phi = sum_beta c_beta d^beta phi."""
        out = TestFunction(self.rank, ())
        for e, c in p.items:
            out = out + self.derivative(e).scale(c)
        return out

    def pullback(self, origin: Sequence, matrix: Sequence[Sequence]) -> "TestFunction":
        """x -> phi(origin + M x), M given as rows (rank x m)."""
        terms = tuple(GaussianTerm(t.poly.compose_affine(origin, matrix),
                                   t.exponent.compose_affine(origin, matrix)) for t in self.terms)
        m = len(matrix[0])
        return TestFunction(m, terms)

    def scaled(self, k) -> "TestFunction":
        """xi -> phi(xi / k)"""
        r = self.rank
        inv = Fraction(1) / Fraction(k)
        return self.pullback([Fraction(0)] * r, [[inv if i == j else Fraction(0) for j in range(r)]
                                                 for i in range(r)])

    # ─── Decay ───────────────────────────────────────────────────────────

    def depends_only_on(self, axis: int) -> bool:
        for t in self.terms:
            for poly in (t.poly, t.exponent):
                if any(n for e, _ in poly.items for i, n in enumerate(e) if i != axis):
                    return False
        return True

    def panel_scale(self) -> float:
        lam = [np.linalg.eigvalsh(t.quadratic_matrix()).max() for t in self.terms if self.rank]
        return math.sqrt(max(lam + [1e-6]))

    def decay_ball(self, eps: float, extra_degree: int = 0) -> DecayBall:
        """
        Ball outside of which sum_t |term_t(xi)| (1 + |xi - c|)^extra_degree <= eps.
        """
        return _decay_ball(self, float(eps), int(extra_degree))


@lru_cache(maxsize=1024)
def _decay_ball(phi: "TestFunction", eps: float, extra_degree: int) -> DecayBall:
    if not phi.terms:
        return DecayBall((0.0,) * phi.rank, 0.0)
    data = []
    for t in phi.terms:
        a = t.quadratic_matrix()
        lam = np.linalg.eigvalsh(a).min()
        if lam <= 0:
            raise UnboundedSupportError("test function does not decay in every direction")
        cstar = np.linalg.solve(2 * a, -t.linear_vector())
        qmin = float(t.exponent.evaluate(cstar[None, :])[0])
        data.append((cstar, lam, qmin, t.poly))
    center = np.mean([d[0] for d in data], axis=0)
    cnorm = float(np.linalg.norm(center))

    def bound(r: np.ndarray) -> np.ndarray:
        total = np.zeros_like(r)
        for cstar, lam, qmin, poly in data:
            dist = float(np.linalg.norm(cstar - center))
            rho = np.clip(r - dist, 0.0, None)
            pmax = np.array([poly.abs_bound(cnorm + x) for x in r])
            total += pmax * np.exp(-qmin - lam * rho ** 2)
        return total * (1.0 + r) ** extra_degree

    step = 0.05
    rmax = 8.0
    while True:
        grid = np.arange(0.0, rmax, step)
        vals = bound(grid)
        if vals[-1] < eps * 1e-6:
            break
        rmax *= 2
        if rmax > 1e6:
            raise UnboundedSupportError("could not bound the test function envelope")
    tail = np.maximum.accumulate(vals[::-1])[::-1]
    idx = int(np.argmax(tail <= eps))
    return DecayBall(tuple(float(c) for c in center), float(grid[idx]))


@lru_cache(maxsize=4096)
def _derivative(phi: TestFunction, alpha: Tuple[int, ...]) -> TestFunction:
    if not any(alpha):
        return phi
    i = next(j for j, a in enumerate(alpha) if a)
    rest = list(alpha)
    rest[i] -= 1
    base = _derivative(phi, tuple(rest))
    terms = []
    for t in base.terms:
        dp = t.poly.derivative(i) - t.poly * t.exponent.derivative(i)
        terms.append(GaussianTerm(dp, t.exponent))
    return TestFunction(phi.rank, tuple(terms))._merged()


@dataclass(frozen=True)
class PlaneWave:
    """factor * exp(i <xi, X>), the probe behind Fourier pairings."""

    frequency: Tuple[float, ...]
    factor: complex = 1 + 0j

    @property
    def rank(self) -> int:
        return len(self.frequency)

    def __call__(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        return self.factor * np.exp(1j * (pts @ np.asarray(self.frequency)))

    def derivative(self, alpha: Sequence[int]) -> "PlaneWave":
        f = self.factor
        for x, a in zip(self.frequency, alpha):
            f *= (1j * x) ** a
        return PlaneWave(self.frequency, f)

    def depends_only_on(self, axis: int) -> bool:
        return all(x == 0 for i, x in enumerate(self.frequency) if i != axis)

    def panel_scale(self) -> float:
        return float(np.linalg.norm(self.frequency)) / math.pi + 1.0

    def decay_ball(self, eps: float, extra_degree: int = 0) -> DecayBall:
        raise UnboundedSupportError("a plane wave does not decay; the distribution must be compact")


Probe = Union[TestFunction, PlaneWave]


# ─── Distribution terms ──────────────────────────────────────────────────────

@dataclass(frozen=True)
class DeltaTerm:
    point: Point
    derivative: Tuple[int, ...]
    weight: Number = Fraction(1)

    @property
    def rank(self) -> int:
        return len(self.point)


@dataclass(frozen=True)
class DensityTerm:
    """
    weight * int_{s in domain} g(s) phi(origin + sum_j s_j generators[j]) ds

    The domain is the box lower <= s <= upper (None is infinite) or, when
    simplex is set, the standard simplex in s.
    """

    origin: Point
    generators: Tuple[Point, ...]
    lower: Tuple[Optional[Fraction], ...]
    upper: Tuple[Optional[Fraction], ...]
    density: Polynomial
    weight: Number = Fraction(1)
    derivative: Tuple[int, ...] = ()
    simplex: bool = False

    @property
    def rank(self) -> int:
        return len(self.origin)

    @property
    def dimension(self) -> int:
        return len(self.generators)

    def is_bounded(self) -> bool:
        return self.simplex or all(v is not None for v in self.lower + self.upper)

    def is_unit_interval_form(self) -> bool:
        return (self.rank == 1 and self.dimension == 1 and not self.simplex
                and self.origin == (0,) and self.generators == ((1,),))

    def matrix(self) -> np.ndarray:
        return np.array([[float(g[i]) for g in self.generators] for i in range(self.rank)])


@dataclass(frozen=True)
class SphereTerm:
    radius: Fraction
    mass: Number
    derivative: Tuple[int, ...] = (0, 0, 0)

    rank = 3


@dataclass(frozen=True)
class RadialTerm:
    """weight * int_inner^outer h(s) sphere(s, mass 1) ds"""

    inner: Fraction
    outer: Fraction
    profile: Polynomial
    weight: Number = Fraction(1)
    derivative: Tuple[int, ...] = (0, 0, 0)

    rank = 3


Term = Union[DeltaTerm, DensityTerm, SphereTerm, RadialTerm]


def _term_weight(term: Term) -> Number:
    return term.mass if isinstance(term, SphereTerm) else term.weight


def _with_weight(term: Term, w: Number) -> Term:
    if isinstance(term, SphereTerm):
        return replace(term, mass=w)
    return replace(term, weight=w)


def _add_derivative(term: Term, beta: Sequence[int]) -> Term:
    return replace(term, derivative=tuple(a + b for a, b in zip(term.derivative, beta)))


def make_density(origin: Sequence, generators: Sequence[Sequence], lower: Sequence, upper: Sequence,
                 density: Polynomial, weight: Number = Fraction(1),
                 derivative: Optional[Sequence[int]] = None, simplex: bool = False) -> List[Term]:
    """Canonical DensityTerm (or the delta it collapses to)."""
    origin = _frac_vec(origin)
    gens = [_frac_vec(g) for g in generators]
    lower = [None if v is None else Fraction(v) for v in lower]
    upper = [None if v is None else Fraction(v) for v in upper]
    derivative = tuple(derivative) if derivative is not None else (0,) * len(origin)
    g = density
    if simplex and len(gens) == 1:
        simplex, lower, upper = False, [Fraction(0)], [Fraction(1)]
    # integrate out directions the generators no longer see
    j = 0
    while j < len(gens):
        if any(gens[j]):
            j += 1
            continue
        if simplex:
            # n = 2 simplex: the remaining coordinate runs over [0, 1]
            other = 1 - j
            hi = Polynomial.linear(Fraction(1), [Fraction(-1) if i == other else Fraction(0) for i in range(2)])
            g = g.integrate_variable(j, Polynomial.zero(2), hi)
            simplex, lower, upper = False, [Fraction(0)], [Fraction(1)]
        else:
            if lower[j] is None or upper[j] is None:
                raise UnboundedSupportError("pushforward has an infinite fiber")
            n = g.nvars
            g = g.integrate_variable(j, Polynomial.constant(n, lower[j]), Polynomial.constant(n, upper[j]))
            lower.pop(j)
            upper.pop(j)
        gens.pop(j)
    if g.is_zero() or weight == 0:
        return []
    if not gens:
        return [DeltaTerm(origin, derivative, weight * g.coefficient(()))]
    if len(origin) == 1 and len(gens) == 1:
        w = gens[0][0]
        a = origin[0]
        if w > 0:
            lo = None if lower[0] is None else a + w * lower[0]
            hi = None if upper[0] is None else a + w * upper[0]
        else:
            lo = None if upper[0] is None else a + w * upper[0]
            hi = None if lower[0] is None else a + w * lower[0]
        g = g.compose_affine([-a / w], [[1 / w]]) * (1 / abs(w))
        origin, gens, lower, upper = (Fraction(0),), [(Fraction(1),)], [lo], [hi]
    return [DensityTerm(origin, tuple(gens), tuple(lower), tuple(upper), g, weight, derivative, simplex)]


# ─── Distribution ────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class Distribution:
    rank: int
    terms: Tuple[Term, ...] = ()

    def __post_init__(self):
        for t in self.terms:
            if t.rank != self.rank:
                raise ValueError(f"term of rank {t.rank} in a rank-{self.rank} distribution")

    # ─── Constructors ────────────────────────────────────────────────────

    @classmethod
    def zero(cls, rank: int) -> "Distribution":
        return cls(rank, ())

    @classmethod
    def delta(cls, point: Union[Sequence, Fraction, int], weight: Number = Fraction(1),
              derivative: Optional[Sequence[int]] = None) -> "Distribution":
        if not isinstance(point, (tuple, list)):
            point = (point,)
        point = _frac_vec(point)
        derivative = tuple(derivative) if derivative is not None else (0,) * len(point)
        return cls(len(point), (DeltaTerm(point, derivative, weight),)).simplified()

    @classmethod
    def interval(cls, lo, hi, density: Optional[Polynomial] = None, weight: Number = Fraction(1)):
        """density(xi) on [lo, hi]; either end may be None for an infinite side."""
        density = Polynomial.constant(1, Fraction(1)) if density is None else density
        return cls(1, tuple(make_density((0,), [(1,)], [lo], [hi], density, weight)))

    @classmethod
    def half_line(cls, a, scale: Number = Fraction(1)) -> "Distribution":
        return cls.interval(a, None, weight=scale)

    @classmethod
    def lebesgue(cls) -> "Distribution":
        return cls.interval(None, None)

    @classmethod
    def parametric(cls, origin: Sequence, generators: Sequence[Sequence], lower: Sequence, upper: Sequence,
                   density: Optional[Polynomial] = None, weight: Number = Fraction(1),
                   simplex: bool = False) -> "Distribution":
        density = Polynomial.constant(len(generators), Fraction(1)) if density is None else density
        return cls(len(origin), tuple(make_density(origin, generators, lower, upper, density, weight,
                                                   simplex=simplex)))

    @classmethod
    def box(cls, lower: Sequence, upper: Sequence, density: Optional[Polynomial] = None) -> "Distribution":
        n = len(lower)
        ident = [[Fraction(int(i == j)) for i in range(n)] for j in range(n)]
        return cls.parametric([0] * n, ident, lower, upper, density)

    @classmethod
    def simplex(cls, origin: Sequence, edges: Sequence[Sequence], density: Optional[Polynomial] = None):
        n = len(edges)
        return cls.parametric(origin, edges, [0] * n, [1] * n, density, simplex=True)

    @classmethod
    def sphere(cls, radius, mass: Number) -> "Distribution":
        return cls(3, (SphereTerm(Fraction(radius), mass),))

    @classmethod
    def radial(cls, inner, outer, profile: Polynomial, weight: Number = Fraction(1)) -> "Distribution":
        return cls(3, (RadialTerm(Fraction(inner), Fraction(outer), profile, weight),))

    # ─── Algebra ─────────────────────────────────────────────────────────

    def __add__(self, other: "Distribution") -> "Distribution":
        if other.rank != self.rank:
            raise ValueError("cannot add distributions of different rank")
        return Distribution(self.rank, self.terms + other.terms).simplified()

    def __mul__(self, c: Number) -> "Distribution":
        return Distribution(self.rank, tuple(_with_weight(t, _term_weight(t) * c) for t in self.terms)).simplified()

    __rmul__ = __mul__

    def __neg__(self) -> "Distribution":
        return self * -1

    def __sub__(self, other: "Distribution") -> "Distribution":
        return self + (-other)

    def simplified(self) -> "Distribution":
        """Merge deltas with equal point and derivative, drop zero weights."""
        deltas: Dict[Tuple[Point, Tuple[int, ...]], Number] = {}
        order: List[Tuple[Point, Tuple[int, ...]]] = []
        others = []
        for t in self.terms:
            if isinstance(t, DeltaTerm):
                key = (t.point, t.derivative)
                if key not in deltas:
                    order.append(key)
                    deltas[key] = 0
                deltas[key] = deltas[key] + t.weight
            elif _term_weight(t) != 0:
                others.append(t)
        merged = [DeltaTerm(p, d, deltas[(p, d)]) for p, d in order if deltas[(p, d)] != 0]
        return Distribution(self.rank, tuple(merged + others))

    def is_zero(self) -> bool:
        return not self.simplified().terms

    def is_bounded(self) -> bool:
        return all(not isinstance(t, DensityTerm) or t.is_bounded() for t in self.terms)

    def __len__(self) -> int:
        return len(self.terms)


# ─── Pairing ─────────────────────────────────────────────────────────────────

def _sign(alpha: Sequence[int]) -> int:
    return -1 if sum(alpha) % 2 else 1


def i_power(n: int) -> Number:
    return (Fraction(1), 1j, Fraction(-1), -1j)[n % 4]


def _truncated_box(term: DensityTerm, probe: Probe, eps: float):
    lower = [None if v is None else float(v) for v in term.lower]
    upper = [None if v is None else float(v) for v in term.upper]
    if all(v is not None for v in lower + upper):
        return lower, upper
    ball = probe.decay_ball(eps, extra_degree=term.density.degree + term.dimension)
    w = term.matrix()
    sv = np.linalg.svd(w, compute_uv=False)
    sigma = sv[-1] if term.dimension <= term.rank else 0.0
    if sigma <= 1e-14:
        raise UnboundedSupportError("density generators are dependent along an infinite direction")
    offset = float(np.linalg.norm(np.array([float(x) for x in term.origin]) - np.array(ball.center)))
    s_max = (ball.radius + offset) / sigma
    lower = [-s_max if v is None else max(v, -s_max) for v in lower]
    upper = [s_max if v is None else min(v, s_max) for v in upper]
    logger.debug("density truncated to |s| <= %.3f (radius %.3f)", s_max, ball.radius)
    return lower, upper


def _pair_density(term: DensityTerm, probe: Probe) -> complex:
    n = term.dimension
    if n > 2:
        raise UnsupportedTermError("densities of parameter dimension > 2 cannot be paired")
    origin = np.array([float(x) for x in term.origin])
    w = term.matrix()
    scale = probe.panel_scale()
    col = np.linalg.norm(w, axis=0)
    if term.simplex:
        def f(s0, s1):
            pts = origin + s0[..., None] * w[:, 0] + s1[..., None] * w[:, 1]
            s = np.stack(np.broadcast_arrays(s0, s1), axis=-1)
            return term.density.evaluate(s) * probe(pts)

        panels = int(math.ceil(scale * float(col.max()))) + 1
        return integrate_simplex(f, panels)
    eps = settings.QUADRATURE_TOL * settings.TRUNCATION_FACTOR
    lower, upper = _truncated_box(term, probe, eps)
    if any(lo >= hi for lo, hi in zip(lower, upper)):
        return 0.0
    panels = [int(math.ceil((hi - lo) * c * scale / 2.0)) + 1 for lo, hi, c in zip(lower, upper, col)]
    if n == 1:
        def f1(s):
            pts = origin + s[:, None] * w[:, 0]
            return term.density.evaluate(s[:, None]) * probe(pts)

        return integrate_interval(f1, lower[0], upper[0], panels[0])

    def f2(s0, s1):
        pts = origin + s0[..., None] * w[:, 0] + s1[..., None] * w[:, 1]
        s = np.stack(np.broadcast_arrays(s0, s1), axis=-1)
        return term.density.evaluate(s) * probe(pts)

    return integrate_box(f2, lower, upper, panels)


def _sphere_mean(probe: Probe, radius: float) -> complex:
    def f(x, y, z):
        pts = np.stack(np.broadcast_arrays(x, y, z), axis=-1)
        return probe(pts)

    if isinstance(probe, PlaneWave):
        # the sphere average of a plane wave only sees |X|
        norm = float(np.linalg.norm(probe.frequency))
        probe = PlaneWave((0.0, 0.0, norm), probe.factor)
    axis_only = probe.depends_only_on(2)
    panels = int(math.ceil(probe.panel_scale() * radius)) + 1
    return sphere_average(f, radius, axis_only=axis_only, panels=panels)


def _pair_radial(term: RadialTerm, probe: Probe) -> complex:
    def f(s):
        means = np.array([_sphere_mean(probe, float(r)) if r > 0 else complex(probe(np.zeros(3)))
                          for r in s])
        return term.profile.evaluate(s[:, None]) * means

    panels = int(math.ceil(probe.panel_scale() * float(term.outer - term.inner))) + 1
    return integrate_interval(f, float(term.inner), float(term.outer), panels)


def _pair_term(term: Term, probe: Probe) -> complex:
    psi = probe.derivative(term.derivative)
    sign = _sign(term.derivative)
    if isinstance(term, DeltaTerm):
        base = complex(np.asarray(psi(np.array([float(x) for x in term.point])))[()])
    elif isinstance(term, DensityTerm):
        base = _pair_density(term, psi)
    elif isinstance(term, SphereTerm):
        base = _sphere_mean(psi, float(term.radius))
    elif isinstance(term, RadialTerm):
        base = _pair_radial(term, psi)
    else:
        raise UnsupportedTermError(f"unknown term {type(term).__name__}")
    return sign * complex(_term_weight(term)) * complex(base)


def pair(D: Distribution, phi: Probe) -> complex:
    if phi.rank != D.rank:
        raise ValueError(f"rank-{D.rank} distribution paired with rank-{phi.rank} test function")
    parts = [_pair_term(t, phi) for t in D.terms]
    return complex(math.fsum(p.real for p in parts), math.fsum(p.imag for p in parts))


def fourier_pair(D: Distribution, X) -> complex:
    """<D, exp(i <xi, X>)>; D must have compact support."""
    if not D.is_bounded():
        raise UnboundedSupportError("Fourier pairing needs a compactly supported distribution")
    X = tuple(float(x) for x in np.atleast_1d(np.asarray(X, dtype=float)))
    return pair(D, PlaneWave(X))


def total_mass(D: Distribution) -> Number:
    """Exact <D, 1>."""
    total: Number = Fraction(0)
    for t in D.terms:
        if any(t.derivative):
            continue
        if isinstance(t, DeltaTerm):
            total += t.weight
        elif isinstance(t, SphereTerm):
            total += t.mass
        elif isinstance(t, RadialTerm):
            total += t.weight * t.profile.integrate_variable(
                0, Polynomial.constant(1, t.inner), Polynomial.constant(1, t.outer)).coefficient(())
        else:
            if not t.is_bounded():
                raise UnboundedSupportError("mass of an unbounded density")
            g = t.density
            if t.simplex:
                hi = Polynomial.linear(Fraction(1), [Fraction(-1), Fraction(0)])
                g = g.integrate_variable(1, Polynomial.zero(2), hi)
                g = g.integrate_variable(0, Polynomial.zero(1), Polynomial.constant(1, Fraction(1)))
            else:
                for j in reversed(range(t.dimension)):
                    n = g.nvars
                    g = g.integrate_variable(j, Polynomial.constant(n, t.lower[j]),
                                             Polynomial.constant(n, t.upper[j]))
            total += t.weight * g.coefficient(())
    return total


# ─── Rescaling ───────────────────────────────────────────────────────────────

def rescale_k(D: Distribution, k: int) -> Distribution:
    """<rescale_k D, phi> = <D, phi(. / k)>"""
    k = Fraction(k)
    out: List[Term] = []
    for t in D.terms:
        factor = k ** -sum(t.derivative)
        if isinstance(t, DeltaTerm):
            out.append(DeltaTerm(tuple(x / k for x in t.point), t.derivative, t.weight * factor))
        elif isinstance(t, DensityTerm):
            out.extend(make_density([x / k for x in t.origin], [[x / k for x in g] for g in t.generators],
                                    t.lower, t.upper, t.density, t.weight * factor, t.derivative, t.simplex))
        elif isinstance(t, SphereTerm):
            out.append(SphereTerm(t.radius / k, t.mass * factor, t.derivative))
        else:
            profile = t.profile.scale_variables([k]) * k
            out.append(RadialTerm(t.inner / k, t.outer / k, profile, t.weight * factor, t.derivative))
    return Distribution(D.rank, tuple(out))


# ─── Pushforward ─────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class LinearMap:
    """Rows of a (target x source) rational matrix."""

    rows: Tuple[Point, ...]

    @classmethod
    def of(cls, rows: Sequence[Sequence]) -> "LinearMap":
        return cls(tuple(_frac_vec(r) for r in rows))

    @classmethod
    def coordinate(cls, rank: int, index: int) -> "LinearMap":
        return cls.of([[int(i == index) for i in range(rank)]])

    @classmethod
    def axis(cls) -> "LinearMap":
        """Projection of su(2)* = R^3 onto its distinguished axis, t*."""
        return cls.coordinate(3, 2)

    @property
    def source(self) -> int:
        return len(self.rows[0])

    @property
    def target(self) -> int:
        return len(self.rows)

    def apply(self, x: Sequence) -> Point:
        return tuple(sum((r[j] * x[j] for j in range(self.source)), Fraction(0)) for r in self.rows)

    def chain_rule(self, alpha: Sequence[int]) -> Polynomial:
        """prod_i (sum_j r_ji y_j)^alpha_i in target variables y."""
        p = Polynomial.constant(self.target, Fraction(1))
        for i, a in enumerate(alpha):
            if a:
                p = p * linear_form_power([self.rows[j][i] for j in range(self.target)], a)
        return p


def _sphere_axis_pieces(radius: Fraction, mass: Number) -> List[Term]:
    return make_density((0,), [(1,)], [-radius], [radius], Polynomial.constant(1, Fraction(1)),
                        mass / (2 * radius))


def _radial_axis_pieces(t: RadialTerm) -> List[Term]:
    h = t.profile
    if h.coefficient((0,)) != 0:
        raise UnsupportedTermError("axis projection needs a radial profile vanishing at 0")
    # q(s) = h(s) / (2 s) and H its antiderivative
    q = Polynomial.from_dict(1, {(e[0] - 1,): c / 2 for e, c in h.items})
    H = q.antiderivative(0)
    top = H.evaluate_exact((t.outer,))
    bottom = H.evaluate_exact((t.inner,))
    x = Polynomial.variable(1, 0)
    pieces: List[Term] = []
    inside = Polynomial.constant(1, top - bottom)
    if t.inner > 0:
        pieces += make_density((0,), [(1,)], [-t.inner], [t.inner], inside, t.weight)
    right = Polynomial.constant(1, top) - H
    left = Polynomial.constant(1, top) - H.substitute(0, -x)
    pieces += make_density((0,), [(1,)], [t.inner], [t.outer], right, t.weight)
    pieces += make_density((0,), [(1,)], [-t.outer], [-t.inner], left, t.weight)
    return pieces


def _scale_line(pieces: List[Term], nu: Fraction) -> List[Term]:
    out: List[Term] = []
    for p in pieces:
        if isinstance(p, DeltaTerm):
            out.append(DeltaTerm((p.point[0] * nu,), p.derivative, p.weight))
        else:
            out.extend(make_density((p.origin[0] * nu,), [(p.generators[0][0] * nu,)], p.lower, p.upper,
                                    p.density, p.weight, p.derivative))
    return out


def _push_base(t: Term, r: LinearMap) -> List[Term]:
    if isinstance(t, DeltaTerm):
        return [DeltaTerm(r.apply(t.point), (0,) * r.target, t.weight)]
    if isinstance(t, DensityTerm):
        return make_density(r.apply(t.origin), [r.apply(g) for g in t.generators], t.lower, t.upper,
                            t.density, t.weight, None, t.simplex)
    if r.target != 1 or r.source != 3:
        raise UnsupportedTermError("spherical terms only project to a line")
    nu = _exact_sqrt(sum((c * c for c in r.rows[0]), Fraction(0)))
    if nu is None or nu == 0:
        raise UnsupportedTermError("projection row must have a non-zero rational length")
    if isinstance(t, SphereTerm):
        return _scale_line(_sphere_axis_pieces(t.radius, t.mass), nu)
    return _scale_line(_radial_axis_pieces(t), nu)


def pushforward(D: Distribution, r: LinearMap) -> Distribution:
    """<r_* D, phi> = <D, phi o r>"""
    if r.source != D.rank:
        raise ValueError(f"map from R^{r.source} applied to a rank-{D.rank} distribution")
    out: List[Term] = []
    for t in D.terms:
        base = _push_base(t, r)
        if not any(t.derivative):
            out.extend(base)
            continue
        for beta, c in r.chain_rule(t.derivative).items:
            for b in base:
                out.append(_add_derivative(_with_weight(b, _term_weight(b) * c), beta))
    return Distribution(r.target, tuple(out)).simplified()


# ─── Convolution ─────────────────────────────────────────────────────────────

def _convolve_terms(a: Term, b: Term) -> List[Term]:
    deriv = tuple(x + y for x, y in zip(a.derivative, b.derivative))
    w = _term_weight(a) * _term_weight(b)
    if isinstance(b, DeltaTerm) and not isinstance(a, DeltaTerm):
        a, b = b, a
    if isinstance(a, DeltaTerm):
        if isinstance(b, DeltaTerm):
            return [DeltaTerm(tuple(x + y for x, y in zip(a.point, b.point)), deriv, w)]
        if isinstance(b, DensityTerm):
            return make_density([x + y for x, y in zip(a.point, b.origin)], b.generators, b.lower, b.upper,
                                b.density, w, deriv, b.simplex)
        if any(a.point):
            raise UnsupportedTermError("spherical terms can only be convolved with a delta at the origin")
        return [_with_weight(replace(b, derivative=deriv), w)]
    if isinstance(a, DensityTerm) and isinstance(b, DensityTerm):
        if a.simplex or b.simplex:
            raise UnsupportedTermError("convolution of simplex densities is not supported")
        na, nb = a.dimension, b.dimension
        ga = a.density.compose_affine([0] * na, [[int(i == j) for j in range(na + nb)] for i in range(na)])
        gb = b.density.compose_affine([0] * nb, [[int(i == na + j) for j in range(na + nb)]
                                                 for i in range(nb)])
        return make_density([x + y for x, y in zip(a.origin, b.origin)], a.generators + b.generators,
                            a.lower + b.lower, a.upper + b.upper, ga * gb, w, deriv)
    raise UnsupportedTermError(f"cannot convolve {type(a).__name__} with {type(b).__name__}")


def convolve(D: Distribution, B: Distribution) -> Distribution:
    """D * B for a compactly supported B; D may be unbounded."""
    if D.rank != B.rank:
        raise ValueError("convolution of distributions of different rank")
    if not B.is_bounded():
        raise UnboundedSupportError("the second convolution operand must have compact support")
    out: List[Term] = []
    for a in D.terms:
        for b in B.terms:
            out.extend(_convolve_terms(a, b))
    return Distribution(D.rank, tuple(out)).simplified()


# ─── Differential operators ──────────────────────────────────────────────────

def _realize_interval_derivative(t: DensityTerm) -> List[Term]:
    """d^m (g 1_[lo,hi]) as densities plus boundary deltas."""
    m = t.derivative[0]
    pending: List[Term] = [replace(t, derivative=(0,))]
    for _ in range(m):
        nxt: List[Term] = []
        for p in pending:
            if isinstance(p, DeltaTerm):
                nxt.append(DeltaTerm(p.point, (p.derivative[0] + 1,), p.weight))
                continue
            g = p.density
            if p.lower[0] is not None:
                nxt.append(DeltaTerm((p.lower[0],), (0,), p.weight * g.evaluate_exact((p.lower[0],))))
            if p.upper[0] is not None:
                nxt.append(DeltaTerm((p.upper[0],), (0,), -p.weight * g.evaluate_exact((p.upper[0],))))
            dg = g.derivative(0)
            if not dg.is_zero():
                nxt.append(replace(p, density=dg))
        pending = nxt
    return pending


def differentiate(D: Distribution, beta: Sequence[int]) -> Distribution:
    out: List[Term] = []
    for t in D.terms:
        t = _add_derivative(t, beta)
        if isinstance(t, DensityTerm) and t.is_unit_interval_form() and t.derivative[0]:
            out.extend(_realize_interval_derivative(t))
        else:
            out.append(t)
    return Distribution(D.rank, tuple(out)).simplified()


def apply_operator(D: Distribution, p: Polynomial) -> Distribution:
    """p(d) D = sum_beta c_beta d^beta D."""
    if p.nvars != D.rank:
        raise ValueError(f"{p.nvars}-variable operator on a rank-{D.rank} distribution")
    total = Distribution.zero(D.rank)
    for beta, c in p.items:
        total = total + differentiate(D, beta) * c
    return total


def apply_symbol(D: Distribution, p: Polynomial) -> Distribution:
    """p(i d) D."""
    return apply_operator(D, Polynomial.from_dict(p.nvars, {e: c * i_power(sum(e)) for e, c in p.items}))


# ─── Laurent series of distributions ─────────────────────────────────────────

@dataclass(frozen=True)
class LaurentDistSeries:
    """
    k^leading * sum_{n <= truncation} k^{-n} theta_n(k)

    theta_n depends on k only through k mod period.
    """

    rank: int
    leading: int
    period: int
    coefficients: Tuple[Tuple[Tuple[int, int], Distribution], ...]
    truncation: int

    @classmethod
    def build(cls, rank: int, leading: int, layers: Dict[Tuple[int, int], Distribution],
              truncation: int, period: int = 1) -> "LaurentDistSeries":
        items = tuple(sorted(((key, d.simplified()) for key, d in layers.items() if not d.is_zero()),
                             key=lambda kv: kv[0]))
        return cls(rank, leading, period, items, truncation)

    @classmethod
    def single(cls, D: Distribution, leading: int = 0, truncation: int = 0) -> "LaurentDistSeries":
        return cls.build(D.rank, leading, {(0, 0): D}, truncation)

    def coefficient(self, n: int, k: int) -> Distribution:
        residue = k % self.period
        for key, d in self.coefficients:
            if key == (n, residue):
                return d
        return Distribution.zero(self.rank)

    def residue_layer(self, n: int, residue: int) -> Distribution:
        return self.coefficient(n, residue)

    def power(self, n: int) -> int:
        return self.leading - n

    def is_layer_zero(self, n: int) -> bool:
        return all(key[0] != n for key, _ in self.coefficients)

    def first_nonzero_below(self, lowest_power: int) -> Optional[int]:
        """The largest power < lowest_power with a non-zero coefficient, if stored."""
        for n in range(max(0, self.leading - lowest_power + 1), self.truncation + 1):
            if not self.is_layer_zero(n):
                return self.power(n)
        return None

    def relative_order(self, lowest_power: int) -> int:
        return self.leading - lowest_power


def series_pair(S: LaurentDistSeries, phi: Probe, N: int, k: int) -> complex:
    """k^leading sum_{n <= N} k^{-n} <theta_n(k), phi>"""
    if N > S.truncation:
        raise UnsupportedOrderError(f"series truncated at order {S.truncation}, {N} requested")
    parts = []
    for n in range(N + 1):
        theta = S.coefficient(n, k)
        if theta.is_zero():
            continue
        parts.append(float(k) ** (S.leading - n) * pair(theta, phi))
    return complex(math.fsum(p.real for p in parts), math.fsum(p.imag for p in parts))


def truncated_pair(S: LaurentDistSeries, phi: Probe, k: int, lowest_power: int) -> complex:
    """Pairing with every power k^p, p >= lowest_power, retained."""
    n = S.relative_order(lowest_power)
    if n < 0:
        return 0j
    return series_pair(S, phi, n, k)


def apply_diff_op(op: DiffOpSeries, S: LaurentDistSeries, N: int) -> LaurentDistSeries:
    """s_n = sum_{l + m = n} p_l(i d) theta_m for n <= N."""
    if op.nvars != S.rank:
        raise ValueError(f"{op.nvars}-variable operator applied to a rank-{S.rank} series")
    if N > op.order or N > S.truncation:
        raise OperatorOrderError(
            f"order {N} needs operator order {op.order} and series truncation {S.truncation}")
    layers: Dict[Tuple[int, int], Distribution] = {}
    for residue in range(S.period):
        for n in range(N + 1):
            acc = Distribution.zero(S.rank)
            for m in range(n + 1):
                theta = S.coefficient(m, residue)
                symbol = op.symbol(n - m)
                if theta.is_zero() or symbol.is_zero():
                    continue
                acc = acc + apply_symbol(theta, symbol)
            layers[(n, residue)] = acc
    return LaurentDistSeries.build(S.rank, S.leading, layers, N, S.period)
