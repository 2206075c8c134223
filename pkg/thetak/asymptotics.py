"""
Asymptotic expansions of Theta_k and the order-fit harness.

Orders are absolute: an expansion requested at order N keeps every power
k^p with p >= -N. The harness compares exact pairings against the truncated
series along a ladder of k and fits the decay rate of the error on a log-log
scale; it passes when the rate reaches (first omitted power) - 1/2.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from math import factorial
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from .config import settings
from .dist_calc import (
    DeltaTerm,
    Distribution,
    LaurentDistSeries,
    Probe,
    apply_diff_op,
    convolve,
    pair,
    rescale_k,
    truncated_pair,
)
from .errors import SpinConditionError, UnsupportedOrderError, UsageError
from .exact_series import (
    Germ,
    GaussianRational,
    RootOfUnity,
    as_number,
    bernoulli_number,
    bernoulli_polynomial,
    germ_taylor,
    lerch_s,
    shifted_lerch_s,
    to_diff_op,
)
from .group_orbits import GroupData, b_measure, rg_distribution
from .models import (
    Model,
    TruncationCertificate,
    complex_line,
    rg_theta_pair,
    theta_distribution,
    theta_pair_certified,
    twist_character,
)

logger = logging.getLogger("thetak.asymptotics")

Number = Union[Fraction, complex]


def _value_at(derivative: int, point, coefficient: Number) -> DeltaTerm:
    """The functional phi -> coefficient * phi^(derivative)(point)."""
    sign = -1 if derivative % 2 else 1
    return DeltaTerm((Fraction(point),), (derivative,), coefficient * sign)


def _times(a, b) -> Number:
    if isinstance(a, GaussianRational) and isinstance(b, GaussianRational):
        return as_number(a * b)
    a, b = as_number(a), as_number(b)
    if isinstance(a, complex) or isinstance(b, complex):
        return complex(a) * complex(b)
    return Fraction(a) * Fraction(b)


def _check_order(N: int):
    if N > settings.SERIES_DEFAULT_ORDER:
        raise UnsupportedOrderError(f"expansions are provided up to order {settings.SERIES_DEFAULT_ORDER}")


# ─── Germ expansion ──────────────────────────────────────────────────────────

def build_expansion(model: Model, N: int) -> LaurentDistSeries:
    """j^{1/2}(i d / k) (k^d sum_n k^{-n} DH(A_n)), every power k^p with p >= -N."""
    return _expansion(model, N)


def _expansion(model: Model, N: int, extra: Optional[Germ] = None) -> LaurentDistSeries:
    _check_order(N)
    n_rel = model.d + N
    if n_rel < 0:
        raise UnsupportedOrderError(f"{model.name}: order {N} lies above the leading power k^{model.d}")
    if model.dh.is_zero():
        raise UnsupportedOrderError(f"{model.name} declares no Duistermaat-Heckman data")
    base = LaurentDistSeries.build(model.dual_rank, model.d, {(0, 0): model.dh}, n_rel)
    if model.group.is_abelian:
        if model.germ is None:
            raise UnsupportedOrderError(f"{model.name} declares no germ; only exact sums are available")
        series = germ_taylor(Germ("jhalf_torus", (), model.rank), n_rel) * germ_taylor(model.germ, n_rel)
        if extra is not None:
            series = series * germ_taylor(extra, n_rel)
        return apply_diff_op(to_diff_op(series), base, n_rel)
    # SU(2): j^{1/2}_su2 starts with 1, so only the leading layer is needed
    if model.higher_layers_zero:
        return base
    if n_rel != 0:
        raise UnsupportedOrderError(f"{model.name} only provides the leading layer (order {-model.d})")
    return base


def em_halfline(a, w: int, N: int) -> LaurentDistSeries:
    """
    sum_j phi(a + w (j + 1/2) / k)
        ~ (k/w) int_a^inf phi - sum_{n>=2} (w/k)^{n-1} B_n(1/2)/n! phi^(n-1)(a)
    """
    _check_order(N)
    if w < 2 or w % 2:
        raise SpinConditionError("the half-line expansion needs an even step w >= 2")
    a = Fraction(a)
    n_max = N + 1
    if n_max < 0:
        raise UnsupportedOrderError("order lies above the leading power k^1")
    layers: Dict[Tuple[int, int], Distribution] = {(0, 0): Distribution.half_line(a, Fraction(1, w))}
    for n in range(1, n_max + 1):
        c = -Fraction(w) ** (n - 1) * bernoulli_polynomial(n, Fraction(1, 2)) / factorial(n)
        if c:
            layers[(n, 0)] = Distribution(1, (_value_at(n - 1, a, c),))
    return LaurentDistSeries.build(1, 1, layers, n_max)


def em_fulllattice(N: int) -> LaurentDistSeries:
    """
    sum_{lambda >= 0} phi(lambda / k)
        ~ k int_0^inf phi + phi(0)/2 - sum_n k^{1-2n} b_{2n}/(2n)! phi^(2n-1)(0)
    """
    _check_order(N)
    n_max = N + 1
    if n_max < 0:
        raise UnsupportedOrderError("order lies above the leading power k^1")
    layers: Dict[Tuple[int, int], Distribution] = {(0, 0): Distribution.half_line(0)}
    if n_max >= 1:
        layers[(1, 0)] = Distribution.delta(0, Fraction(1, 2))
    for n in range(1, n_max // 2 + 1):
        c = -bernoulli_number(2 * n) / factorial(2 * n)
        layers[(2 * n, 0)] = Distribution(1, (_value_at(2 * n - 1, 0, c),))
    return LaurentDistSeries.build(1, 1, layers, n_max)


def fulllattice_coefficients(N: int) -> List[Tuple[int, Fraction]]:
    """(m, c_m): the coefficient of k^{-m} phi^(m)(0) after the volume term."""
    rows = [(0, Fraction(1, 2))]
    for m in range(1, N + 1):
        c = -bernoulli_number(m + 1) / factorial(m + 1) if m % 2 else Fraction(0)
        rows.append((m, c))
    return rows


# ─── Twisted sums ────────────────────────────────────────────────────────────

def twisted_sum(model: Model, zeta, k: int, phi: Probe) -> complex:
    """sum_lambda m(lambda, k) zeta^lambda phi(lambda / k)"""
    if not model.group.is_abelian:
        raise UsageError("twisted sums are defined for torus models")
    zeta = zeta if isinstance(zeta, (RootOfUnity, tuple)) else RootOfUnity.from_rotation(zeta)
    value, _ = theta_pair_certified(model, k, phi, twist=twist_character(zeta))
    return value


def half_lattice_sum(k: int, phi: Probe, zeta: Optional[RootOfUnity] = None) -> complex:
    """sum_{lambda >= 0} zeta^lambda phi(lambda / k)"""
    eps = settings.QUADRATURE_TOL * settings.TRUNCATION_FACTOR / k
    ball = phi.decay_ball(eps, extra_degree=2)
    lo = max(0, math.ceil(k * (ball.center[0] - ball.radius)))
    hi = math.floor(k * (ball.center[0] + ball.radius))
    if hi < lo:
        return 0j
    lam = np.arange(lo, hi + 1)
    values = phi((lam / k)[:, None]).astype(complex)
    if zeta is not None:
        values = values * np.array([complex(zeta.power(int(x))) for x in lam])
    return complex(math.fsum(values.real), math.fsum(values.imag))


def twisted_halfline_expansion(zeta, a, w: int, N: int) -> LaurentDistSeries:
    """
    sum_j zeta^mu phi(mu / k) over mu = k a + w (j + 1/2)
        ~ zeta^{k a + w/2} sum_m k^{-m} (w^m / m!) T_m(zeta^w) phi^(m)(a)

    with T_m(z) the Abel sum of sum_j z^j (j + 1/2)^m. The prefactor depends
    on k mod the order of zeta^a and is folded into the layers.
    """
    _check_order(N)
    zeta = zeta if isinstance(zeta, RootOfUnity) else RootOfUnity.from_rotation(zeta)
    if w < 2 or w % 2:
        raise SpinConditionError("the half-line expansion needs an even step w >= 2")
    z = zeta.power(w)
    if z.is_one():
        raise UsageError("zeta^w = 1: the untwisted half-line expansion applies")
    a = Fraction(a)
    step = zeta.power(a)
    period = step.order
    layers: Dict[Tuple[int, int], Distribution] = {}
    for m in range(N + 1):
        t_m = shifted_lerch_s(z, m)
        scale = Fraction(w) ** m / factorial(m)
        for residue in range(period):
            prefactor = step.power(residue).value()
            prefactor = _times(prefactor, zeta.power(w // 2).value())
            c = _times(_times(prefactor, t_m), GaussianRational.of(scale))
            if c != 0:
                layers[(m, residue)] = Distribution(1, (_value_at(m, a, c),))
    return LaurentDistSeries.build(1, 0, layers, max(N, 0), period)


def twisted_fulllattice_expansion(zeta, N: int) -> LaurentDistSeries:
    """sum_{lambda >= 0} zeta^lambda phi(lambda/k) ~ sum_m k^{-m} S_m(zeta) phi^(m)(0) / m!"""
    _check_order(N)
    zeta = zeta if isinstance(zeta, RootOfUnity) else RootOfUnity.from_rotation(zeta)
    if zeta.is_one():
        raise UsageError("zeta = 1: use the Euler-Maclaurin expansion")
    layers = {}
    for m in range(N + 1):
        c = _times(lerch_s(zeta, m), GaussianRational(Fraction(1, factorial(m))))
        if c != 0:
            layers[(m, 0)] = Distribution(1, (_value_at(m, 0, c),))
    return LaurentDistSeries.build(1, 0, layers, max(N, 0))


# ─── Convolution with B^k ────────────────────────────────────────────────────

_GERM_MEASURES = {
    "jhalf_quotient_su2_t": lambda: b_measure(GroupData.su2(), GroupData.torus(1)),
    "one": lambda: Distribution.delta(0),
    "jhalf_torus": lambda: Distribution.delta(0),
}


def germ_measure(germ: Germ) -> Distribution:
    """The compactly supported measure whose Fourier transform is the germ."""
    if germ.name not in _GERM_MEASURES or germ.rank != 1:
        raise UsageError(f"no compactly supported measure is known for {germ}")
    return _GERM_MEASURES[germ.name]()


def convolved_expansion(model: Model, germ: Union[Germ, str], N: int) -> LaurentDistSeries:
    """B^k * Theta_k ~ j(i d / k) AS_k, with j the Fourier transform of B."""
    germ = Germ.parse(germ) if isinstance(germ, str) else germ
    if not model.group.is_abelian:
        raise UsageError("convolution with B^k is defined for torus models")
    return _expansion(model, N, germ)


def convolved_theta_pair(model: Model, germ: Union[Germ, str], k: int, phi: Probe) -> complex:
    germ = Germ.parse(germ) if isinstance(germ, str) else germ
    B = rescale_k(germ_measure(germ), k)
    return pair(convolve(theta_distribution(model, k, phi), B), phi)


# ─── Order-fit harness ───────────────────────────────────────────────────────

ExactPairing = Callable[[int, Probe], Tuple[complex, Optional[TruncationCertificate]]]


@dataclass(frozen=True)
class ExpansionTarget:
    """An exact pairing k -> <A_k, phi> together with its expansion at any order."""

    name: str
    exact: ExactPairing
    expansion: Callable[[int], LaurentDistSeries]
    layer_gap: int = 1

    def next_power(self, N: int) -> Optional[int]:
        """First power below k^{-N} with a non-zero layer; None when all of them vanish."""
        try:
            extended = self.expansion(N + 2 * self.layer_gap + 2)
        except UnsupportedOrderError:
            return -N - self.layer_gap
        return extended.first_nonzero_below(-N)


def model_target(model: Model) -> ExpansionTarget:
    return ExpansionTarget(
        name=model.name,
        exact=lambda k, phi: theta_pair_certified(model, k, phi),
        expansion=lambda N: build_expansion(model, N),
        layer_gap=model.layer_gap,
    )


def fulllattice_target() -> ExpansionTarget:
    return ExpansionTarget("full-lattice", lambda k, phi: (half_lattice_sum(k, phi), None), em_fulllattice)


def halfline_target(a: int, w: int) -> ExpansionTarget:
    model = complex_line(w, a)
    return ExpansionTarget(
        name=f"half-line({w},{a})",
        exact=lambda k, phi: theta_pair_certified(model, k, phi),
        expansion=lambda N: em_halfline(a, w, N),
    )


def twisted_halfline_target(zeta, a: int, w: int) -> ExpansionTarget:
    zeta = zeta if isinstance(zeta, RootOfUnity) else RootOfUnity.from_rotation(zeta)
    model = complex_line(w, a)
    return ExpansionTarget(
        name=f"twisted-half-line({w},{a}; {zeta.turn})",
        exact=lambda k, phi: theta_pair_certified(model, k, phi, twist=twist_character(zeta)),
        expansion=lambda N: twisted_halfline_expansion(zeta, a, w, N),
    )


def twisted_fulllattice_target(zeta) -> ExpansionTarget:
    zeta = zeta if isinstance(zeta, RootOfUnity) else RootOfUnity.from_rotation(zeta)
    return ExpansionTarget(
        name=f"twisted-full-lattice({zeta.turn})",
        exact=lambda k, phi: (half_lattice_sum(k, phi, zeta), None),
        expansion=lambda N: twisted_fulllattice_expansion(zeta, N),
    )


def convolved_target(model: Model, germ: Union[Germ, str]) -> ExpansionTarget:
    return ExpansionTarget(
        name=f"{germ}*{model.name}",
        exact=lambda k, phi: (convolved_theta_pair(model, germ, k, phi), None),
        expansion=lambda N: convolved_expansion(model, germ, N),
        layer_gap=model.layer_gap,
    )


def rg_expansion(model: Model, N: int) -> LaurentDistSeries:
    series = build_expansion(model, N)
    layers = {key: rg_distribution(d) for key, d in series.coefficients}
    return LaurentDistSeries.build(1, series.leading, layers, series.truncation, series.period)


def rg_target(model: Model) -> ExpansionTarget:
    return ExpansionTarget(
        name=f"R_g({model.name})",
        exact=lambda k, phi: (rg_theta_pair(model, k, phi), None),
        expansion=lambda N: rg_expansion(model, N),
        layer_gap=model.layer_gap,
    )


@dataclass(frozen=True)
class DecayFit:
    slope: Optional[float]
    converged_exactly: bool
    floor: float


def fit_decay(ladder: Sequence[int], errors: Sequence[float], scale: float) -> DecayFit:
    """Least-squares rate of -d log|err| / d log k over the errors above the rounding floor."""
    floor = settings.exact_floor(scale)
    if all(e <= floor for e in errors):
        return DecayFit(None, True, floor)
    ks = [k for k, e in zip(ladder, errors) if e > floor]
    es = [e for e in errors if e > floor]
    if len(ks) < 3:
        return DecayFit(None, False, floor)
    slope = -float(np.polyfit(np.log(ks), np.log(es), 1)[0])
    return DecayFit(slope, False, floor)


@dataclass(frozen=True)
class OrderFitReport:
    name: str
    order: int
    ladder: Tuple[int, ...]
    exact: Tuple[complex, ...]
    truncated: Tuple[complex, ...]
    errors: Tuple[float, ...]
    slope: Optional[float]
    target: float
    passed: bool
    converged_exactly: bool
    certificates: Tuple[str, ...] = field(default=())

    def summary(self) -> str:
        if self.converged_exactly:
            return f"{self.name}: converged exactly (max error {max(self.errors):.2e})"
        slope = "undefined" if self.slope is None else f"{self.slope:.3f}"
        verdict = "PASS" if self.passed else "FAIL"
        return f"{self.name}: slope {slope} (target {self.target:.1f}) {verdict}"


def _check_ladder(ladder: Sequence[int]) -> Tuple[int, ...]:
    ladder = tuple(int(k) for k in ladder)
    if len(ladder) < 3 or any(b <= a for a, b in zip(ladder, ladder[1:])) or ladder[0] < 1:
        raise UsageError("the k-ladder must be strictly increasing, positive, with at least 3 entries")
    return ladder


def exact_vs_expansion(target: Union[Model, ExpansionTarget], phi: Probe, N: int,
                       k_ladder: Sequence[int]) -> OrderFitReport:
    ladder = _check_ladder(k_ladder)
    if isinstance(target, Model):
        target = model_target(target)
    series = target.expansion(N)
    next_power = target.next_power(N)
    goal = -(next_power if next_power is not None else -N - 1) - 0.5

    def run(k: int):
        value, cert = target.exact(k, phi)
        return value, cert, truncated_pair(series, phi, k, -N)

    with ThreadPoolExecutor(max_workers=settings.WORKERS) as pool:
        rows = list(pool.map(run, ladder))
    exact = tuple(r[0] for r in rows)
    truncated = tuple(r[2] for r in rows)
    errors = tuple(abs(e - t) for e, t in zip(exact, truncated))
    fit = fit_decay(ladder, errors, max(abs(e) for e in exact))
    if fit.converged_exactly:
        passed = True
    elif fit.slope is None:
        passed = errors[-1] <= fit.floor
    else:
        passed = fit.slope >= goal
    certs = tuple(r[1].describe() for r in rows if r[1] is not None)
    report = OrderFitReport(target.name, N, ladder, exact, truncated, errors, fit.slope, goal, passed,
                            fit.converged_exactly, certs)
    logger.info(report.summary())
    return report
