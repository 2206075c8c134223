"""
Restriction to the maximal torus of SU(2).

Checks the multiplicity transfer m_H(mu, k) = sum_lambda m_G(lambda, k) c(lambda, mu)
against a direct oracle, the orbit-count identity, the pushforward identity for
orbit measures, its finite-k distributional form, and twisted descent.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .asymptotics import fit_decay
from .config import settings
from .dist_calc import (
    Distribution,
    LaurentDistSeries,
    Probe,
    convolve,
    fourier_pair,
    pair,
    pushforward,
    rescale_k,
    total_mass,
    truncated_pair,
)
from .errors import NoncompactModelError, UnsupportedPairError, UsageError
from .exact_series import RootOfUnity
from .group_orbits import (
    GroupData,
    IrrepLabel,
    axis_projection,
    b_measure,
    branching_c,
    orbit_measure,
    pushforward_orbit,
)
from .models import Model, model_atoms, theta_distribution
from .quasipoly import MultiplicityFunction, OracleMultiplicity, PiecewiseQP, PointwiseDifference

logger = logging.getLogger("thetak.functoriality")


def _restriction(model: Model):
    if model.group.is_abelian or model.restriction is None:
        raise UnsupportedPairError(f"{model.name} carries no restriction data to the maximal torus")
    return model.restriction


def _restricted_row(atoms, mu: int) -> int:
    return sum(m * branching_c(lam[0], mu) for lam, m in atoms)


def restricted_multiplicity(model: Model, mu: int, k: int) -> int:
    """m'_H(mu, k) = sum_lambda m_G(lambda, k) c(lambda, mu)"""
    _restriction(model)
    atoms, _ = model_atoms(model, k)
    return _restricted_row(atoms, mu)


def direct_h_multiplicity(model: Model, mu: int, k: int) -> int:
    return int(_restriction(model).direct(mu, k))


@dataclass(frozen=True)
class RestrictionRow:
    mu: int
    k: int
    direct: int
    restricted: int

    @property
    def equal(self) -> bool:
        return self.direct == self.restricted


@dataclass(frozen=True)
class RestrictionReport:
    model: str
    subgroup: str
    k_max: int
    mu_bound: Optional[int]
    rows: Tuple[RestrictionRow, ...]

    @property
    def passed(self) -> bool:
        return all(row.equal for row in self.rows)

    @property
    def first_failure(self) -> Optional[RestrictionRow]:
        return next((row for row in self.rows if not row.equal), None)

    def summary(self) -> str:
        if self.passed:
            return f"{self.model}: restriction to {self.subgroup} holds on {len(self.rows)} cells"
        bad = self.first_failure
        return (f"{self.model}: restriction to {self.subgroup} fails at mu={bad.mu}, k={bad.k} "
                f"(direct {bad.direct}, restricted {bad.restricted})")


def verify_restriction(model: Model, k_max: int, mu_bound: Optional[int] = None) -> RestrictionReport:
    """Every |mu| <= mu_bound (2k when unset) and k <= k_max."""
    data = _restriction(model)
    if k_max < 1:
        raise UsageError("k_max must be positive")

    def rows_for(k: int) -> List[RestrictionRow]:
        atoms, _ = model_atoms(model, k)
        bound = 2 * k if mu_bound is None else mu_bound
        return [RestrictionRow(mu, k, int(data.direct(mu, k)), _restricted_row(atoms, mu))
                for mu in range(-bound, bound + 1)]

    with ThreadPoolExecutor(max_workers=settings.WORKERS) as pool:
        chunks = list(pool.map(rows_for, range(1, k_max + 1)))
    report = RestrictionReport(model.name, str(data.subgroup), k_max, mu_bound,
                               tuple(row for chunk in chunks for row in chunk))
    logger.info(report.summary())
    return report


# ─── Orbit-count identity ────────────────────────────────────────────────────

@dataclass(frozen=True)
class MysteryResult:
    k: int
    dimension: int
    volume: Fraction

    @property
    def equal(self) -> bool:
        return self.dimension == self.volume


def mystery_check(model: Model, k: int) -> MysteryResult:
    """sum_lambda m(lambda, k) dim V_lambda against sum_lambda vol(G lambda) m(lambda, k)."""
    if not model.compact:
        raise NoncompactModelError(f"{model.name} has infinitely many orbits with m != 0")
    atoms, _ = model_atoms(model, k)
    dimension, volume = 0, Fraction(0)
    for lam, m in atoms:
        label = IrrepLabel.of(model.group, lam if model.group.is_abelian else lam[0])
        dimension += m * label.dim
        volume += m * Fraction(total_mass(orbit_measure(model.group, label)))
    result = MysteryResult(k, dimension, volume)
    logger.debug("%s k=%d: dim %d, volume %s", model.name, k, dimension, volume)
    return result


# ─── Pushforward of orbit measures ───────────────────────────────────────────

def pushforward_orbit_check(lam: IrrepLabel, t_grid: Sequence[float]) -> float:
    """max_t |F(r_* beta_lam)(t) - F(B)(t) sum_mu c(lam, mu) e^{i mu t}|"""
    B = b_measure(GroupData.su2(), GroupData.torus(1))
    lhs_measure = pushforward_orbit(lam)
    mus = [mu for mu in range(-int(lam), int(lam) + 1) if branching_c(lam, mu)]
    worst = 0.0
    for t in t_grid:
        t = float(t)
        lhs = fourier_pair(lhs_measure, t)
        rhs = fourier_pair(B, t) * sum(np.exp(1j * mu * t) for mu in mus)
        worst = max(worst, abs(lhs - rhs))
    logger.info("pushforward residual for lambda=%d: %.3e", int(lam), worst)
    return worst


def torus_theta(model: Model, k: int) -> Distribution:
    """Theta^T_k = sum_mu m_H(mu, k) delta_{mu/k}, from the direct oracle."""
    data = _restriction(model)
    top = max((lam[0] for lam, _ in model_atoms(model, k)[0]), default=0)
    total = Distribution.zero(1)
    for mu in range(-top, top + 1):
        m = data.direct(mu, k)
        if m:
            total = total + Distribution.delta(Fraction(mu, k), Fraction(m))
    return total


def finite_k_functoriality(model: Model, k: int, phi: Probe) -> float:
    """|<r_* Theta^G_k, phi> - <B^k * Theta^T_k, phi>| for phi on t*."""
    lhs = pair(pushforward(theta_distribution(model, k), axis_projection()), phi)
    B = rescale_k(b_measure(GroupData.su2(), GroupData.torus(1)), k)
    rhs = pair(convolve(torus_theta(model, k), B), phi)
    residual = abs(lhs - rhs)
    logger.info("%s k=%d: finite-k functoriality residual %.3e", model.name, k, residual)
    return residual


# ─── Twisted descent ─────────────────────────────────────────────────────────

@dataclass(frozen=True)
class DescentReport:
    ladder: Tuple[int, ...]
    sums: Tuple[complex, ...]
    residuals: Tuple[float, ...]
    slope: Optional[float]
    order: int
    passed: bool
    converged_exactly: bool

    def summary(self) -> str:
        if self.converged_exactly:
            return f"descent: converged exactly (max residual {max(self.residuals):.2e})"
        slope = "undefined" if self.slope is None else f"{self.slope:.3f}"
        return f"descent: decay {slope} (needs {self.order}) {'PASS' if self.passed else 'FAIL'}"


def _support(d: MultiplicityFunction) -> Optional[Tuple[float, float]]:
    if isinstance(d, PiecewiseQP):
        box = d.support_box()
        return (box[0][0], box[1][0]) if box is not None else (0.0, 0.0)
    if isinstance(d, PointwiseDifference):
        a, b = _support(d.first), _support(d.second)
        if a is None or b is None:
            return None
        return min(a[0], b[0]), max(a[1], b[1])
    return None


def descent_sum(d: MultiplicityFunction, zeta: RootOfUnity, k: int, phi: Probe,
                support: Optional[Tuple[float, float]] = None) -> complex:
    """sum_nu d(nu, k) zeta^nu phi(nu / k)"""
    if d.rank != 1:
        raise UsageError("descent sums are taken over Z")
    degree = getattr(d, "degree", 0)
    eps = settings.QUADRATURE_TOL * settings.TRUNCATION_FACTOR / float(k) ** (degree + 1)
    ball = phi.decay_ball(eps, extra_degree=degree + 2)
    lo, hi = ball.center[0] - ball.radius, ball.center[0] + ball.radius
    support = support if support is not None else _support(d)
    if support is not None:
        lo, hi = max(lo, support[0]), min(hi, support[1])
    nus = range(math.ceil(lo * k - 1e-9), math.floor(hi * k + 1e-9) + 1)
    weights, points = [], []
    for nu in nus:
        value = d.evaluate((nu,), k)
        if value:
            weights.append(complex(float(value)) * complex(zeta.power(nu)))
            points.append(nu / k)
    if not points:
        return 0j
    terms = np.array(weights) * phi(np.array(points, dtype=float)[:, None])
    return complex(math.fsum(terms.real), math.fsum(terms.imag))


def twisted_descent_check(d: MultiplicityFunction, zeta, phi: Probe, k_ladder: Sequence[int], N: int,
                          reference: Optional[LaurentDistSeries] = None,
                          support: Optional[Tuple[float, float]] = None) -> DescentReport:
    """
    |sum_nu d(nu, k) zeta^nu phi(nu/k) - <reference, phi>_N| <= C k^{-N} along the ladder.

    Without a reference the raw sum must decay.
    """
    zeta = zeta if isinstance(zeta, RootOfUnity) else RootOfUnity.from_rotation(zeta)
    ladder = tuple(int(k) for k in k_ladder)
    if len(ladder) < 3 or any(b <= a for a, b in zip(ladder, ladder[1:])):
        raise UsageError("the k-ladder must be strictly increasing with at least 3 entries")

    def run(k: int) -> Tuple[complex, float]:
        value = descent_sum(d, zeta, k, phi, support)
        ref = truncated_pair(reference, phi, k, -N) if reference is not None else 0j
        return value, abs(value - ref)

    with ThreadPoolExecutor(max_workers=settings.WORKERS) as pool:
        rows = list(pool.map(run, ladder))
    sums = tuple(r[0] for r in rows)
    residuals = tuple(r[1] for r in rows)
    fit = fit_decay(ladder, residuals, max(abs(s) for s in sums))
    if fit.converged_exactly:
        passed = True
    elif fit.slope is None:
        passed = residuals[-1] <= fit.floor
    else:
        passed = fit.slope >= N
    report = DescentReport(ladder, sums, residuals, fit.slope, N, passed, fit.converged_exactly)
    logger.info(report.summary())
    return report


def restriction_defect(model: Model) -> MultiplicityFunction:
    """d(mu, k) = m'_H(mu, k) - m_H(mu, k) as a multiplicity function on Z."""
    restricted = OracleMultiplicity(1, lambda mu, k: restricted_multiplicity(model, mu[0], k), "restricted")
    direct = OracleMultiplicity(1, lambda mu, k: direct_h_multiplicity(model, mu[0], k), "direct")
    return PointwiseDifference(restricted, direct)


def restriction_support(model: Model) -> Tuple[float, float]:
    box = model.moment_image.bounding_box()
    top = box[1][0] if box is not None else 0.0
    return -top, top


def all_checks(model: Model, k_max: int, phi: Probe) -> Dict[str, bool]:
    """Restriction, orbit count and finite-k functoriality for one SU(2) model."""
    restriction = verify_restriction(model, k_max).passed
    mystery = all(mystery_check(model, k).equal for k in range(1, k_max + 1))
    finite = all(finite_k_functoriality(model, k, phi) <= 1e-8 for k in range(1, min(k_max, 10) + 1))
    return {"restriction": restriction, "mystery": mystery, "finite-k": finite}
