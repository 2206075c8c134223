"""
Representation data for tori and SU(2).

Weights are measured in rho-units: for SU(2) the irreducible V_lam has
dimension lam, weights lam-1, lam-3, ..., -(lam-1), and its coadjoint orbit
is the sphere of radius lam in su(2)* = R^3, with t* the third axis.
"""

import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Sequence, Tuple, Union

import numpy as np

from .dist_calc import (
    DeltaTerm,
    Distribution,
    LinearMap,
    RadialTerm,
    SphereTerm,
    fourier_pair,
    make_density,
    pushforward,
)
from .errors import NonAdmissibleLabelError, UnsupportedPairError, UnsupportedTermError
from .polynomial import Polynomial

logger = logging.getLogger("thetak.group_orbits")

TORUS = "torus"
SU2 = "su2"


@dataclass(frozen=True)
class GroupData:
    kind: str
    rank: int = 1

    @classmethod
    def torus(cls, rank: int = 1) -> "GroupData":
        return cls(TORUS, rank)

    @classmethod
    def su2(cls) -> "GroupData":
        return cls(SU2, 1)

    @property
    def is_abelian(self) -> bool:
        return self.kind == TORUS

    @property
    def dual_rank(self) -> int:
        """Dimension of g*: the orbit measures live there."""
        return self.rank if self.is_abelian else 3

    @property
    def weyl_group(self) -> Tuple[int, ...]:
        return (1,) if self.is_abelian else (1, -1)

    def admissible(self, value) -> bool:
        if self.is_abelian:
            return isinstance(value, tuple) and len(value) == self.rank
        return isinstance(value, int) and value >= 1

    def __str__(self) -> str:
        return f"T^{self.rank}" if self.is_abelian else "SU(2)"


@dataclass(frozen=True)
class IrrepLabel:
    group: GroupData
    value: Union[int, Tuple[int, ...]]

    @classmethod
    def of(cls, group: GroupData, value) -> "IrrepLabel":
        if group.is_abelian:
            value = tuple(int(x) for x in value) if isinstance(value, (tuple, list)) else (int(value),)
        else:
            value = int(value)
        if not group.admissible(value):
            raise NonAdmissibleLabelError(f"{value} is not an admissible label for {group}")
        return cls(group, value)

    @classmethod
    def su2(cls, lam: int) -> "IrrepLabel":
        return cls.of(GroupData.su2(), lam)

    @property
    def dim(self) -> int:
        return 1 if self.group.is_abelian else self.value

    def __int__(self) -> int:
        if self.group.is_abelian:
            return self.value[0]
        return self.value


@dataclass(frozen=True)
class BranchingTable:
    """SU(2) restricted to its maximal torus."""

    def weights(self, lam: Union[IrrepLabel, int]) -> List[int]:
        lam = int(lam)
        return list(range(lam - 1, -lam, -2))

    def multiplicity(self, lam: Union[IrrepLabel, int], mu: int) -> int:
        return branching_c(lam, mu)


# ─── Characters and orbits ───────────────────────────────────────────────────

def character(G: GroupData, lam: IrrepLabel, X) -> complex:
    """chi_lam(exp X); X is a point of t (a float for SU(2) and rank-1 tori)."""
    if G.is_abelian:
        x = np.atleast_1d(np.asarray(X, dtype=float))
        return complex(np.exp(1j * float(np.dot(lam.value, x))))
    t = float(np.asarray(X, dtype=float).reshape(-1)[-1])
    # weight sum: regular at the zeros of sin t
    return complex(math.fsum(math.cos(mu * t) for mu in BranchingTable().weights(lam)))


def orbit_measure(G: GroupData, lam: IrrepLabel) -> Distribution:
    if lam.group != G:
        raise NonAdmissibleLabelError(f"label for {lam.group} used with {G}")
    if G.is_abelian:
        return Distribution.delta(lam.value)
    return Distribution.sphere(lam.value, Fraction(lam.value))


def clebsch_gordan(l1: IrrepLabel, l2: IrrepLabel) -> Tuple[IrrepLabel, ...]:
    a, b = int(l1), int(l2)
    return tuple(IrrepLabel.su2(j) for j in range(abs(a - b) + 1, a + b, 2))


def branching_c(lam: Union[IrrepLabel, int], mu: int) -> int:
    lam = int(lam)
    return int(abs(mu) <= lam - 1 and (mu - lam + 1) % 2 == 0)


def rg_map(G: GroupData, lam: IrrepLabel) -> Distribution:
    """sum_w eps(w) delta_{w lam} on t*."""
    if G.is_abelian:
        return Distribution.delta(lam.value)
    return Distribution.delta(lam.value) - Distribution.delta(-lam.value)


def rg_distribution(D: Distribution) -> Distribution:
    """
    The isomorphism from invariant distributions on su(2)* to odd ones on t*.

    sphere(rho, m) goes to (m / rho)(delta_rho - delta_{-rho}); a radial
    measure int h(s) sphere(s, 1) ds goes to the odd density sign(x) h(|x|)/|x|.
    """
    if D.rank != 3:
        raise UnsupportedTermError("R_g acts on distributions on su(2)*")
    out = []
    for t in D.terms:
        if any(t.derivative):
            raise UnsupportedTermError("R_g of a derivative term is not supported")
        if isinstance(t, SphereTerm):
            c = t.mass / t.radius
            out += [DeltaTerm((t.radius,), (0,), c), DeltaTerm((-t.radius,), (0,), -c)]
        elif isinstance(t, RadialTerm):
            h = t.profile
            if h.coefficient((0,)) != 0:
                raise UnsupportedTermError("radial profile must vanish at the origin")
            q = Polynomial.from_dict(1, {(e[0] - 1,): c for e, c in h.items})
            x = Polynomial.variable(1, 0)
            out += make_density((0,), [(1,)], [t.inner], [t.outer], q, t.weight)
            out += make_density((0,), [(1,)], [-t.outer], [-t.inner], -q.substitute(0, -x), t.weight)
        elif isinstance(t, DeltaTerm) and not any(t.point):
            continue
        else:
            raise UnsupportedTermError(f"R_g of {type(t).__name__} is not supported")
    return Distribution(1, tuple(out)).simplified()


# ─── Subgroup pairs ──────────────────────────────────────────────────────────

def b_measure(G: GroupData, H: GroupData) -> Distribution:
    """The compactly supported measure on h* whose Fourier transform is j^{1/2}_{g/h}."""
    if G.is_abelian and H.is_abelian and H.rank <= G.rank:
        return Distribution.delta((0,) * H.rank)
    if G.kind == SU2 and H == GroupData.torus(1):
        return Distribution.interval(-1, 1, weight=Fraction(1, 2))
    raise UnsupportedPairError(f"no B-measure for the pair {G} > {H}")


def axis_projection() -> LinearMap:
    return LinearMap.axis()


def pushforward_orbit(lam: IrrepLabel) -> Distribution:
    return pushforward(orbit_measure(lam.group, lam), axis_projection())


def kirillov_residual(lam: IrrepLabel, t_grid: Sequence[float]) -> float:
    """max_t |chi_lam(e^{tH}) sin(t)/t - <beta_lam, e^{i<., tH>}>|"""
    G = lam.group
    beta = orbit_measure(G, lam)
    worst = 0.0
    for t in t_grid:
        lhs = character(G, lam, t) * float(np.sinc(t / np.pi))
        rhs = fourier_pair(beta, (0.0, 0.0, float(t)))
        worst = max(worst, abs(lhs - rhs))
    logger.info("kirillov residual for lambda=%s: %.3e", lam.value, worst)
    return worst
