"""
Distribution documents (TOML, schema version 1).

    schema_version = 1

    [[distribution]]
    name = "theta_0"
    rank = 1
    power = 1                         # optional, k^power in front

    [[distribution.term]]
    kind = "density"
    origin = ["0"]
    generators = [["1"]]
    lower = ["0"]
    upper = ["inf"]                   # "-inf" / "inf" mark an infinite side
    density = [{ exponents = [0], coefficient = "1" }]
    weight = "1/2"
    derivative = [0]
    simplex = false

Other kinds: delta (point, derivative, weight), sphere (radius, mass,
derivative) and radial (inner, outer, profile, weight, derivative).
Rationals are strings ("1/2"); complex weights are written as Python
complex literals ("(1+2j)").
"""

import logging
import os
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Mapping, Optional, Union

from ..dist_calc import DeltaTerm, DensityTerm, Distribution, RadialTerm, SphereTerm, Term
from ..errors import ConfigError
from ..polynomial import Polynomial

logger = logging.getLogger("thetak.formats.dist")

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class NamedDistribution:
    name: str
    distribution: Distribution
    power: Optional[int] = None


# ─── Writer ──────────────────────────────────────────────────────────────────

def _escape(s: str) -> str:
    return s.replace("\\", "\\\\").replace('"', '\\"')


def _scalar(x) -> str:
    if isinstance(x, complex):
        return f'"{x!r}"'
    if isinstance(x, float):
        return repr(x)
    return f'"{Fraction(x)}"'


def _vector(xs) -> str:
    return "[" + ", ".join(_scalar(x) for x in xs) + "]"


def _ints(xs) -> str:
    return "[" + ", ".join(str(int(x)) for x in xs) + "]"


def _bounds(xs, infinite: str) -> str:
    return "[" + ", ".join(f'"{infinite}"' if x is None else _scalar(x) for x in xs) + "]"


def _poly(p: Polynomial) -> str:
    terms = ["{ exponents = " + _ints(e) + f", coefficient = {_scalar(c)} }}" for e, c in p.items]
    return "[" + ", ".join(terms) + "]"


def _dump_term(t: Term) -> str:
    content = "\n[[distribution.term]]\n"
    if isinstance(t, DeltaTerm):
        content += 'kind = "delta"\n'
        content += f"point = {_vector(t.point)}\n"
        content += f"weight = {_scalar(t.weight)}\n"
    elif isinstance(t, DensityTerm):
        content += 'kind = "density"\n'
        content += f"origin = {_vector(t.origin)}\n"
        content += "generators = [" + ", ".join(_vector(g) for g in t.generators) + "]\n"
        content += f"lower = {_bounds(t.lower, '-inf')}\n"
        content += f"upper = {_bounds(t.upper, 'inf')}\n"
        content += f"density = {_poly(t.density)}\n"
        content += f"weight = {_scalar(t.weight)}\n"
        content += f"simplex = {'true' if t.simplex else 'false'}\n"
    elif isinstance(t, SphereTerm):
        content += 'kind = "sphere"\n'
        content += f"radius = {_scalar(t.radius)}\n"
        content += f"mass = {_scalar(t.mass)}\n"
    else:
        content += 'kind = "radial"\n'
        content += f"inner = {_scalar(t.inner)}\n"
        content += f"outer = {_scalar(t.outer)}\n"
        content += f"profile = {_poly(t.profile)}\n"
        content += f"weight = {_scalar(t.weight)}\n"
    content += f"derivative = {_ints(t.derivative)}\n"
    return content


def _dump_entry(entry: NamedDistribution) -> str:
    content = "\n[[distribution]]\n"
    content += f'name = "{_escape(entry.name)}"\n'
    content += f"rank = {entry.distribution.rank}\n"
    if entry.power is not None:
        content += f"power = {int(entry.power)}\n"
    for t in entry.distribution.terms:
        content += _dump_term(t)
    return content


def dump_distributions(entries: List[NamedDistribution]) -> str:
    content = f"schema_version = {SCHEMA_VERSION}\n"
    for entry in entries:
        content += _dump_entry(entry)
    return content


def dump_distribution(D: Distribution, name: str = "") -> str:
    return dump_distributions([NamedDistribution(name, D)])


def write_distribution(path: str, entries: Union[Distribution, List[NamedDistribution]]):
    if isinstance(entries, Distribution):
        entries = [NamedDistribution("", entries)]
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        f.write(dump_distributions(entries))
    logger.debug("wrote %d distributions to %s", len(entries), path)


# ─── Reader ──────────────────────────────────────────────────────────────────

def _number(value, where: str):
    if isinstance(value, float):
        return value
    if isinstance(value, int) and not isinstance(value, bool):
        return Fraction(value)
    if isinstance(value, str):
        try:
            return Fraction(value)
        except (ValueError, ZeroDivisionError):
            pass
        try:
            return complex(value)
        except ValueError:
            pass
    raise ConfigError(f"{where}: not a number: {value!r}")


def _rational(value, where: str) -> Fraction:
    x = _number(value, where)
    if not isinstance(x, Fraction):
        raise ConfigError(f"{where}: not a rational number: {value!r}")
    return x


def _point(values, rank: int, where: str):
    point = tuple(_rational(x, where) for x in values)
    if len(point) != rank:
        raise ConfigError(f"{where}: needs {rank} coordinates, got {len(point)}")
    return point


def _bound(value, infinite: str, where: str) -> Optional[Fraction]:
    return None if value == infinite else _rational(value, where)


def _polynomial(terms, nvars: int, where: str) -> Polynomial:
    coeffs = {}
    for t in terms:
        exps = tuple(int(e) for e in t.get("exponents", ()))
        if len(exps) != nvars:
            raise ConfigError(f"{where}: exponents {exps} need {nvars} entries")
        coeffs[exps] = coeffs.get(exps, Fraction(0)) + _number(t.get("coefficient", "0"), where)
    return Polynomial.from_dict(nvars, coeffs)


def _derivative(data: Mapping, rank: int, where: str):
    alpha = tuple(int(a) for a in data.get("derivative", (0,) * rank))
    if len(alpha) != rank or any(a < 0 for a in alpha):
        raise ConfigError(f"{where}: derivative needs {rank} non-negative entries")
    return alpha


def _term(data: Mapping, rank: int, where: str) -> Term:
    kind = data.get("kind")
    alpha = _derivative(data, rank, where)
    if kind == "delta":
        return DeltaTerm(_point(data.get("point", ()), rank, where), alpha, _number(data.get("weight", "1"), where))
    if kind == "density":
        generators = tuple(_point(g, rank, where) for g in data.get("generators", ()))
        n = len(generators)
        lower = tuple(_bound(x, "-inf", where) for x in data.get("lower", ()))
        upper = tuple(_bound(x, "inf", where) for x in data.get("upper", ()))
        if len(lower) != n or len(upper) != n:
            raise ConfigError(f"{where}: lower and upper need one bound per generator")
        return DensityTerm(_point(data.get("origin", ()), rank, where), generators, lower, upper,
                           _polynomial(data.get("density", []), n, where), _number(data.get("weight", "1"), where),
                           alpha, bool(data.get("simplex", False)))
    if kind in ("sphere", "radial") and rank != 3:
        raise ConfigError(f"{where}: {kind} terms live on R^3, not R^{rank}")
    if kind == "sphere":
        return SphereTerm(_rational(data.get("radius", "0"), where), _number(data.get("mass", "1"), where), alpha)
    if kind == "radial":
        return RadialTerm(_rational(data.get("inner", "0"), where), _rational(data.get("outer", "0"), where),
                          _polynomial(data.get("profile", []), 1, where), _number(data.get("weight", "1"), where),
                          alpha)
    raise ConfigError(f"{where}: unknown term kind {kind!r}")


def parse_distributions(data: dict) -> List[NamedDistribution]:
    version = data.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ConfigError(f"unsupported schema_version {version}")
    entries = []
    for i, entry in enumerate(data.get("distribution", [])):
        name = entry.get("name", "")
        rank = int(entry.get("rank", 1))
        if rank < 1:
            raise ConfigError(f"distribution {i}: rank must be positive")
        terms = tuple(_term(t, rank, f"distribution {name or i}, term {j}")
                      for j, t in enumerate(entry.get("term", [])))
        power = entry.get("power")
        entries.append(NamedDistribution(name, Distribution(rank, terms), None if power is None else int(power)))
    return entries


def load_distributions(path: str) -> List[NamedDistribution]:
    if not os.path.exists(path):
        raise ConfigError(f"distribution file not found: {path}")
    with open(path, "rb") as f:
        try:
            data = tomllib.load(f)
        except tomllib.TOMLDecodeError as e:
            raise ConfigError(f"{path}: {e}") from e
    entries = parse_distributions(data)
    logger.debug("loaded %d distributions from %s", len(entries), path)
    return entries


def load_distribution(path: str) -> Distribution:
    """The single distribution stored in a document."""
    entries = load_distributions(path)
    if len(entries) != 1:
        raise ConfigError(f"{path}: expected one distribution, found {len(entries)}")
    return entries[0].distribution