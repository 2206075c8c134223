"""
Model catalog.

A model bundles an exact multiplicity function m(lambda, k), the group it
lives on, its Duistermaat-Heckman base distribution DH(1), its moment image
and, for torus models, the germ X/sin(X) whose Taylor layers give DH(A_n).

    t-star-s1                   all integers, Lebesgue DH
    complex-line(w, a)          ka + w(j + 1/2), DH = (1/w) 1_[a, inf)
    complex-space(W; a)         vector partitions over the weights W
    su2-orbit                   one coadjoint orbit, m = [lambda == k]
    su2-flag-square             S^2 x S^2, m = [lambda odd, lambda <= 2k]
    custom("file.toml")         torus model from a piecewise quasi-polynomial
"""

import itertools
import logging
import math
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .config import settings
from .dist_calc import (
    Distribution,
    Probe,
    apply_symbol,
    pair,
    rescale_k,
)
from .errors import (
    SpinConditionError,
    TruncationCertificateError,
    UnknownModelError,
    UnsupportedOrderError,
    UsageError,
)
from .exact_series import Germ, germ_taylor
from .group_orbits import BranchingTable, GroupData, IrrepLabel, orbit_measure, rg_distribution
from .polynomial import Polynomial
from .quasipoly import (
    Lattice,
    MultiplicityFunction,
    OracleMultiplicity,
    PiecewiseQP,
    Piece,
    Polyhedron,
    QuasiPolynomial,
    as_lattice,
    properness_functional,
    vector_partition,
    with_defect as _function_with_defect,
)
from .spec_parser import parse_call

logger = logging.getLogger("thetak.models")

Atom = Tuple[Lattice, int]


@dataclass(frozen=True)
class RestrictionData:
    """Restriction to the maximal torus, with an independent direct oracle."""

    subgroup: GroupData
    direct: Callable[[int, int], int]


@dataclass(frozen=True)
class Model:
    name: str
    group: GroupData
    d: int
    r: int
    multiplicities: MultiplicityFunction
    moment_image: Polyhedron
    dh: Distribution
    germ: Optional[Germ] = None
    period: int = 1
    # |m(lambda, k)| <= bound_constant * (1 + |lambda| + k)^bound_degree
    bound_degree: Optional[int] = 0
    bound_constant: int = 1
    compact: bool = False
    higher_layers_zero: bool = False
    layer_gap: int = 1
    restriction: Optional[RestrictionData] = None
    weights: Tuple[Lattice, ...] = ()
    shift: Lattice = ()
    atom_source: Optional[Callable[[int, Tuple[float, ...], float], Iterable[Atom]]] = None

    @property
    def rank(self) -> int:
        """Rank of t*, where labels live."""
        return self.group.rank

    @property
    def dual_rank(self) -> int:
        return self.group.dual_rank


@dataclass(frozen=True)
class TruncationCertificate:
    """Atoms with lambda/k outside the ball were dropped; their envelope is below `envelope`."""

    k: int
    center: Tuple[float, ...]
    radius: float
    atoms: int
    envelope: float

    def describe(self) -> str:
        if math.isinf(self.radius):
            return f"k={self.k}: {self.atoms} atoms, compact support"
        return f"k={self.k}: {self.atoms} atoms within radius {self.radius:.3f}, envelope {self.envelope:.1e}"


# ─── Catalog ─────────────────────────────────────────────────────────────────

def _even_weights(weights: Sequence[Lattice]):
    if any(x % 2 for w in weights for x in w):
        raise SpinConditionError("only even weights satisfy the spin condition")


def t_star_s1() -> Model:
    return Model(
        name="t-star-s1",
        group=GroupData.torus(1),
        d=1,
        r=0,
        multiplicities=OracleMultiplicity(1, lambda lam, k: 1, "all integers"),
        moment_image=Polyhedron.whole(1),
        dh=Distribution.lebesgue(),
        germ=Germ("one"),
        higher_layers_zero=True,
    )


def complex_line(w: int, a: int) -> Model:
    w, a = int(w), int(a)
    if w < 2:
        raise SpinConditionError("complex-line needs a positive even weight")
    _even_weights([(w,)])

    def oracle(lam: Lattice, k: int) -> int:
        offset = lam[0] - k * a - w // 2
        return int(offset >= 0 and offset % w == 0)

    def atoms(k: int, center: Tuple[float, ...], radius: float) -> Iterable[Atom]:
        hi = k * (center[0] + radius)
        j_max = math.floor((hi - k * a - w / 2) / w)
        lo = k * (center[0] - radius)
        j_min = max(0, math.ceil((lo - k * a - w / 2) / w))
        for j in range(j_min, j_max + 1):
            yield (k * a + w // 2 + j * w,), 1

    return Model(
        name=f"complex-line({w},{a})",
        group=GroupData.torus(1),
        d=1,
        r=0,
        multiplicities=OracleMultiplicity(1, oracle, f"complex-line({w},{a})"),
        moment_image=Polyhedron.interval(a, None),
        dh=Distribution.half_line(a, Fraction(1, w)),
        germ=Germ.x_over_sin([w]),
        weights=((w,),),
        shift=(a,),
        atom_source=atoms,
    )


def complex_space(weights: Sequence[Sequence[int]], a: Sequence[int]) -> Model:
    weights = tuple(as_lattice(w) for w in weights)
    a = as_lattice(a)
    r = len(a)
    if not weights or any(len(w) != r for w in weights):
        raise UsageError("complex-space weights must all have the rank of the shift")
    _even_weights(weights)
    c = properness_functional(weights)
    scores = [sum((ci * wi for ci, wi in zip(c, w)), Fraction(0)) for w in weights]
    half = tuple(sum(w[i] for w in weights) // 2 for i in range(r))
    c_norm = math.sqrt(sum(float(x) ** 2 for x in c))

    def oracle(lam: Lattice, k: int) -> int:
        return vector_partition(weights, a, lam, k)

    def atoms(k: int, center: Tuple[float, ...], radius: float) -> Iterable[Atom]:
        # <c, lambda - k a - half> = sum_i j_i <c, w_i> is bounded on the ball
        base = [k * a[i] + half[i] for i in range(r)]
        top = sum(float(ci) * (k * x) for ci, x in zip(c, center)) + c_norm * k * radius
        budget = top - sum(float(ci) * b for ci, b in zip(c, base))
        if budget < 0:
            return
        counts: Dict[Lattice, int] = {}
        bounds = [math.floor(budget / float(s)) for s in scores]
        for js in itertools.product(*[range(b + 1) for b in bounds]):
            lam = tuple(base[i] + sum(j * w[i] for j, w in zip(js, weights)) for i in range(r))
            counts[lam] = counts.get(lam, 0) + 1
        yield from counts.items()

    n = len(weights)
    generators = [tuple(Fraction(x) for x in w) for w in weights]
    dh = Distribution.parametric(a, generators, [0] * n, [None] * n)
    halfspaces = [(c, sum((ci * ai for ci, ai in zip(c, a)), Fraction(0)))]
    label = ",".join("(" + ",".join(str(x) for x in w) + ")" for w in weights)
    return Model(
        name=f"complex-space({label}; ({','.join(str(x) for x in a)}))",
        group=GroupData.torus(r),
        d=n,
        r=0,
        multiplicities=OracleMultiplicity(r, oracle, "vector partition"),
        moment_image=Polyhedron.of(r, halfspaces),
        dh=dh,
        germ=Germ.x_over_sin(weights),
        bound_degree=n - 1,
        weights=weights,
        shift=a,
        atom_source=atoms,
    )


def su2_orbit() -> Model:
    group = GroupData.su2()
    return Model(
        name="su2-orbit",
        group=group,
        d=1,
        r=1,
        multiplicities=OracleMultiplicity(1, lambda lam, k: int(lam[0] == k), "single orbit"),
        moment_image=Polyhedron.interval(1, 1),
        dh=Distribution.sphere(1, Fraction(1)),
        compact=True,
        higher_layers_zero=True,
        restriction=RestrictionData(GroupData.torus(1), lambda mu, k: BranchingTable().multiplicity(k, mu)),
    )


def flag_square_multiplicities() -> PiecewiseQP:
    """lambda odd with lambda / k in [0, 2]."""
    qp = QuasiPolynomial.periodic(1, 2, {(1, 0): 1, (1, 1): 1})
    return PiecewiseQP(1, (Piece(Polyhedron.interval(0, 2), 1, qp),))


def _weight_pairs(mu: int, k: int) -> int:
    weights = BranchingTable().weights(k)
    present = set(weights)
    return sum(1 for m1 in weights if mu - m1 in present)


def su2_flag_square() -> Model:
    return Model(
        name="su2-flag-square",
        group=GroupData.su2(),
        d=2,
        r=1,
        multiplicities=flag_square_multiplicities(),
        moment_image=Polyhedron.interval(0, 2),
        dh=Distribution.radial(0, 2, Polynomial.univariate([Fraction(0), Fraction(1, 2)])),
        period=2,
        compact=True,
        layer_gap=2,
        restriction=RestrictionData(GroupData.torus(1), _weight_pairs),
    )


def custom_model(path: str) -> Model:
    from .formats.pqp_format import load_model_document

    doc = load_model_document(path)
    m = doc.pqp
    rank = m.rank
    germ = Germ.parse(doc.germ) if doc.germ else None
    weights = tuple(as_lattice(w) for w in doc.weights)
    shift = as_lattice(doc.shift) if doc.shift else (0,) * rank
    if weights:
        _even_weights(weights)
        n = len(weights)
        dh = Distribution.parametric(shift, [tuple(Fraction(x) for x in w) for w in weights], [0] * n, [None] * n)
        d = n
    else:
        dh = Distribution.zero(rank)
        d = doc.d or 0
    compact = bool(m.pieces) and all(p.polyhedron.is_bounded() for p in m.pieces)
    image = Polyhedron.whole(rank)
    if compact:
        lo, hi = m.support_box()
        image = Polyhedron.box([Fraction(math.floor(x)) for x in lo], [Fraction(math.ceil(x)) for x in hi])
    return Model(
        name=doc.name or f'custom("{path}")',
        group=GroupData.torus(rank),
        d=d,
        r=0,
        multiplicities=m,
        moment_image=image,
        dh=dh,
        germ=germ,
        period=max([p.qp.period for p in m.pieces] + [1]),
        bound_degree=m.degree,
        bound_constant=max([1] + [abs(p.coefficient) for p in m.pieces]) * max(1, len(m.pieces)),
        compact=compact,
        weights=weights,
        shift=shift,
    )


CATALOG = {
    "t-star-s1": "t-star-s1",
    "complex-line": "complex-line(w, a)",
    "complex-space": "complex-space(w1, w2, ...; a)",
    "su2-orbit": "su2-orbit",
    "su2-flag-square": "su2-flag-square",
    "custom": 'custom("file.toml")',
}


def load_model(spec: str) -> Model:
    call = parse_call(spec)
    args = call.flat_args()
    if call.name == "t-star-s1":
        return t_star_s1()
    if call.name == "complex-line":
        if len(args) != 2:
            raise UsageError("complex-line takes (w, a)")
        return complex_line(_integral(args[0]), _integral(args[1]))
    if call.name == "complex-space":
        weights = call.group(0)
        a = call.group(1, None)
        if not weights:
            raise UsageError("complex-space needs at least one weight")
        weights = [w if isinstance(w, tuple) else (w,) for w in weights]
        if a is None:
            a = (0,) * len(weights[0])
        a = a[0] if len(a) == 1 and isinstance(a[0], tuple) else a
        return complex_space([tuple(_integral(x) for x in w) for w in weights], [_integral(x) for x in a])
    if call.name == "su2-orbit":
        return su2_orbit()
    if call.name == "su2-flag-square":
        return su2_flag_square()
    if call.name == "custom":
        if len(args) != 1 or not isinstance(args[0], str):
            raise UsageError('custom takes one quoted path: custom("file.toml")')
        return custom_model(args[0])
    raise UnknownModelError(f"unknown model: {call.name} (known: {', '.join(CATALOG)})")


def _integral(x) -> int:
    if not isinstance(x, Fraction) or x.denominator != 1:
        raise UsageError(f"expected an integer, got {x}")
    return int(x)


# ─── Multiplicities ──────────────────────────────────────────────────────────

def multiplicity(model: Model, lam, k: int) -> int:
    if k < 1:
        raise ValueError("k must be a positive integer")
    value = model.multiplicities.evaluate(as_lattice(lam), k)
    if value.denominator != 1:
        raise ArithmeticError(f"non-integral multiplicity {value} at lambda={lam}, k={k}")
    return int(value)


def with_defect(model: Model, lam, k: int, delta: int = 1) -> Model:
    """The same model with m(lambda, k) shifted by delta."""
    return replace(model, name=f"{model.name}+defect", atom_source=None,
                   multiplicities=_function_with_defect(model.multiplicities, lam, k, delta))


def _defect_labels(model: Model, k: int) -> List[int]:
    defects = getattr(model.multiplicities, "defects", ())
    return [lam[0] for (lam, at), _ in defects if at == k]


def label_range(model: Model, k: int) -> List[int]:
    """
    SU(2) labels lambda >= 1 whose orbit can meet the (bounded) moment image,
    together with any label carrying a point correction at this k.
    """
    box = model.moment_image.bounding_box()
    labels = {lam for lam in _defect_labels(model, k) if lam >= 1}
    if box is not None:
        top = box[1][0]
        if not np.isfinite(top):
            raise TruncationCertificateError(f"{model.name}: SU(2) model with an unbounded moment image")
        labels.update(range(1, math.floor(top * k + 1e-9) + 1))
    return sorted(labels)


def _lattice_window(model: Model, k: int, center: Tuple[float, ...], radius: float) -> Iterable[Lattice]:
    box = model.moment_image.bounding_box()
    if box is None:
        return
    ranges = []
    for i in range(model.rank):
        lo = max(center[i] - radius, box[0][i])
        hi = min(center[i] + radius, box[1][i])
        if not (np.isfinite(lo) and np.isfinite(hi)):
            raise TruncationCertificateError(f"{model.name}: no finite window for the atoms")
        ranges.append(range(math.ceil(lo * k - 1e-9), math.floor(hi * k + 1e-9) + 1))
    yield from itertools.product(*ranges)


def model_atoms(model: Model, k: int, phi: Optional[Probe] = None) -> Tuple[List[Atom], TruncationCertificate]:
    """Non-zero (lambda, m(lambda, k)) pairs that matter for pairing with phi."""
    if not model.group.is_abelian:
        atoms = [((lam,), multiplicity(model, lam, k)) for lam in label_range(model, k)]
        atoms = [(lam, m) for lam, m in atoms if m]
        return atoms, TruncationCertificate(k, (), math.inf, len(atoms), 0.0)
    if model.compact:
        box = model.moment_image.bounding_box()
        center = tuple(0.5 * (lo + hi) for lo, hi in zip(*box)) if box else (0.0,) * model.rank
        radius = max((hi - lo for lo, hi in zip(*box)), default=0.0) if box else 0.0
        envelope = 0.0
    else:
        if phi is None:
            raise TruncationCertificateError(f"{model.name}: infinite atom family needs a test function")
        if model.bound_degree is None:
            raise TruncationCertificateError(f"{model.name}: no multiplicity bound, tail cannot be certified")
        scale = model.bound_constant * float(k) ** (model.r + model.bound_degree + model.rank)
        envelope = settings.QUADRATURE_TOL * settings.TRUNCATION_FACTOR / scale
        ball = phi.decay_ball(envelope, extra_degree=model.bound_degree + model.rank + 1)
        center, radius = ball.center, ball.radius
    if model.atom_source is not None:
        atoms = [(lam, m) for lam, m in model.atom_source(k, center, radius) if m]
    else:
        atoms = []
        for lam in _lattice_window(model, k, center, radius):
            m = multiplicity(model, lam, k)
            if m:
                atoms.append((lam, m))
    cert = TruncationCertificate(k, tuple(center), radius if not model.compact else math.inf, len(atoms), envelope)
    logger.debug("%s %s", model.name, cert.describe())
    return atoms, cert


# ─── Pairings ────────────────────────────────────────────────────────────────

def _fsum(parts: Iterable[complex]) -> complex:
    parts = list(parts)
    return complex(math.fsum(p.real for p in parts), math.fsum(p.imag for p in parts))


def theta_pair_certified(model: Model, k: int, phi: Probe,
                         twist: Optional[Callable[[Lattice], complex]] = None) -> Tuple[complex, TruncationCertificate]:
    """<Theta_k, phi> = k^r sum_lambda m(lambda, k) <beta_{lambda/k}, phi>, optionally twisted."""
    if phi.rank != model.dual_rank:
        raise UsageError(f"{model.name} pairs with test functions on R^{model.dual_rank}")
    atoms, cert = model_atoms(model, k, phi)
    if not atoms:
        return 0j, cert
    if model.group.is_abelian:
        points = np.array([[x / k for x in lam] for lam, _ in atoms], dtype=float)
        values = phi(points)
        weights = np.array([m for _, m in atoms], dtype=complex)
        if twist is not None:
            weights = weights * np.array([twist(lam) for lam, _ in atoms])
        terms = weights * values * float(k) ** model.r
        return _fsum(terms), cert
    parts = []
    for lam, m in atoms:
        beta = rescale_k(orbit_measure(model.group, IrrepLabel.of(model.group, lam[0])), k)
        weight = m * (twist(lam) if twist is not None else 1)
        parts.append(weight * pair(beta, phi))
    return _fsum(parts), cert


def theta_pair(model: Model, k: int, phi: Probe) -> complex:
    return theta_pair_certified(model, k, phi)[0]


def theta_distribution(model: Model, k: int, phi: Optional[Probe] = None) -> Distribution:
    """Theta_k as an explicit (truncated) distribution."""
    atoms, _ = model_atoms(model, k, phi)
    total = Distribution.zero(model.dual_rank)
    for lam, m in atoms:
        if model.group.is_abelian:
            total = total + Distribution.delta(tuple(Fraction(x, k) for x in lam), Fraction(m) * Fraction(k) ** model.r)
        else:
            total = total + rescale_k(orbit_measure(model.group, IrrepLabel.of(model.group, lam[0])), k) * m
    return total


def twist_character(zeta) -> Callable[[Lattice], complex]:
    """lambda -> prod_i zeta_i^{lambda_i}; one root applies to every coordinate."""
    roots = zeta if isinstance(zeta, tuple) else None

    def chi(lam: Lattice) -> complex:
        value = 1 + 0j
        for i, x in enumerate(lam):
            root = roots[i] if roots is not None else zeta
            value *= complex(root.power(x))
        return value

    return chi


def dh_pair(model: Model, n: int, phi: Probe) -> complex:
    """<DH(A_n), phi> = <DH(1), g_n(-i d) phi> with g_n the degree-n germ layer."""
    if n < 0:
        raise UnsupportedOrderError("germ layers start at 0")
    if n == 0:
        return pair(model.dh, phi)
    if not model.group.is_abelian or model.germ is None:
        raise UnsupportedOrderError(f"{model.name} only provides the leading DH layer")
    g_n = germ_taylor(model.germ, n).homogeneous_part(n)
    if g_n.is_zero():
        return 0j
    return pair(apply_symbol(model.dh, g_n), phi)


def rg_theta_pair(model: Model, k: int, phi: Probe) -> complex:
    """<R_g(Theta_k), phi> for an SU(2) model, phi on t*."""
    if model.group.is_abelian:
        raise UsageError("R_g is only defined for SU(2) models")
    atoms, _ = model_atoms(model, k)
    if not atoms:
        return 0j
    points = np.array([[lam[0] / k] for lam, _ in atoms] + [[-lam[0] / k] for lam, _ in atoms])
    # R_g(k beta_{lam/k}) = k (delta_{lam/k} - delta_{-lam/k})
    weights = np.array([m for _, m in atoms] + [-m for _, m in atoms], dtype=float) * k
    return _fsum(weights * phi(points))


def rg_dh(model: Model) -> Distribution:
    return rg_distribution(model.dh)
