"""
Piecewise quasi-polynomial documents (TOML, schema version 1).

    schema_version = 1

    [model]
    name = "odd-half-line"
    germ = "x_over_sin(2)"
    weights = [[2]]
    shift = [0]

    [pqp]
    rank = 1

    [[piece]]
    coefficient = 1
    period = 2
    halfspaces = [{ normal = ["1"], offset = "0" }]

    [[piece.residue]]
    class = [1, 0]
    polynomial = [{ exponents = [0, 0], coefficient = "1" }]

Rationals are written as strings ("1/2"). A residue class is
(lambda_1 .. lambda_r, k) mod period; polynomials are in (lambda, k).
"""

import logging
import os
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from dataclasses import dataclass, field
from fractions import Fraction
from typing import List, Optional, Tuple

from ..errors import ConfigError
from ..polynomial import Polynomial
from ..quasipoly import Piece, PiecewiseQP, Polyhedron, QuasiPolynomial

logger = logging.getLogger("thetak.formats.pqp")

SCHEMA_VERSION = 1


@dataclass
class ModelDocument:
    pqp: PiecewiseQP
    name: str = ""
    germ: Optional[str] = None
    weights: List[Tuple[int, ...]] = field(default_factory=list)
    shift: Tuple[int, ...] = ()
    d: Optional[int] = None


def _rational(value, where: str) -> Fraction:
    try:
        return Fraction(str(value))
    except (ValueError, ZeroDivisionError) as e:
        raise ConfigError(f"{where}: not a rational number: {value!r}") from e


def _polynomial(terms, nvars: int, where: str) -> Polynomial:
    coeffs = {}
    for t in terms:
        exps = tuple(int(e) for e in t.get("exponents", ()))
        if len(exps) != nvars:
            raise ConfigError(f"{where}: exponents {exps} need {nvars} entries (lambda and k)")
        coeffs[exps] = coeffs.get(exps, Fraction(0)) + _rational(t.get("coefficient", "0"), where)
    return Polynomial.from_dict(nvars, coeffs)


def _piece(data: dict, rank: int, index: int) -> Piece:
    where = f"piece {index}"
    halfspaces = []
    for h in data.get("halfspaces", []):
        normal = [_rational(x, where) for x in h.get("normal", ())]
        if len(normal) != rank:
            raise ConfigError(f"{where}: half-space normal needs {rank} entries")
        halfspaces.append((normal, _rational(h.get("offset", "0"), where)))
    period = int(data.get("period", 1))
    if period < 1:
        raise ConfigError(f"{where}: period must be positive")
    table = {}
    for r in data.get("residue", []):
        cls = tuple(int(x) for x in r.get("class", ()))
        if len(cls) != rank + 1:
            raise ConfigError(f"{where}: residue class needs {rank + 1} entries")
        table[cls] = _polynomial(r.get("polynomial", []), rank + 1, where)
    qp = QuasiPolynomial.build(rank, period, table)
    return Piece(Polyhedron.of(rank, halfspaces), int(data.get("coefficient", 1)), qp)


def parse_document(data: dict) -> ModelDocument:
    version = data.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ConfigError(f"unsupported schema_version {version}")
    rank = int(data.get("pqp", {}).get("rank", 1))
    if rank < 1:
        raise ConfigError("pqp.rank must be positive")
    pieces = tuple(_piece(p, rank, i) for i, p in enumerate(data.get("piece", [])))
    defects = tuple(((tuple(int(x) for x in d["lam"]), int(d["k"])), _rational(d.get("delta", "1"), "defect"))
                    for d in data.get("defect", []))
    model = data.get("model", {})
    return ModelDocument(
        pqp=PiecewiseQP(rank, pieces, defects),
        name=model.get("name", ""),
        germ=model.get("germ"),
        weights=[tuple(int(x) for x in w) for w in model.get("weights", [])],
        shift=tuple(int(x) for x in model.get("shift", ())),
        d=model.get("d"),
    )


def load_model_document(path: str) -> ModelDocument:
    if not os.path.exists(path):
        raise ConfigError(f"model file not found: {path}")
    with open(path, "rb") as f:
        try:
            data = tomllib.load(f)
        except tomllib.TOMLDecodeError as e:
            raise ConfigError(f"{path}: {e}") from e
    doc = parse_document(data)
    logger.debug("loaded %d pieces from %s", len(doc.pqp.pieces), path)
    return doc


def load_pqp(path: str) -> PiecewiseQP:
    return load_model_document(path).pqp


# ─── Writer ──────────────────────────────────────────────────────────────────

def _escape(s: str) -> str:
    return s.replace("\\", "\\\\").replace('"', '\\"')


def _q(x) -> str:
    return f'"{Fraction(x)}"'


def _ints(xs) -> str:
    return "[" + ", ".join(str(int(x)) for x in xs) + "]"


def dump_document(doc: ModelDocument) -> str:
    m = doc.pqp
    content = f"schema_version = {SCHEMA_VERSION}\n\n"
    content += "[model]\n"
    content += f'name = "{_escape(doc.name)}"\n'
    if doc.germ:
        content += f'germ = "{_escape(doc.germ)}"\n'
    if doc.weights:
        content += "weights = [" + ", ".join(_ints(w) for w in doc.weights) + "]\n"
    if doc.shift:
        content += f"shift = {_ints(doc.shift)}\n"
    if doc.d is not None:
        content += f"d = {int(doc.d)}\n"
    content += f"\n[pqp]\nrank = {m.rank}\n"
    for piece in m.pieces:
        content += "\n[[piece]]\n"
        content += f"coefficient = {piece.coefficient}\n"
        content += f"period = {piece.qp.period}\n"
        hs = ["{ normal = [" + ", ".join(_q(x) for x in a) + f"], offset = {_q(b)} }}"
              for a, b in piece.polyhedron.halfspaces]
        content += "halfspaces = [" + ", ".join(hs) + "]\n"
        for residue, poly in piece.qp.table:
            content += "\n[[piece.residue]]\n"
            content += f"class = {_ints(residue)}\n"
            terms = ["{ exponents = " + _ints(e) + f", coefficient = {_q(c)} }}" for e, c in poly.items]
            content += "polynomial = [" + ", ".join(terms) + "]\n"
    for (lam, k), delta in m.defects:
        content += f"\n[[defect]]\nlam = {_ints(lam)}\nk = {k}\ndelta = {_q(delta)}\n"
    return content


def save_document(doc: ModelDocument, path: str):
    with open(path, "w", encoding="utf-8") as f:
        f.write(dump_document(doc))


def dump_pqp(m: PiecewiseQP, name: str = "") -> str:
    return dump_document(ModelDocument(pqp=m, name=name))
