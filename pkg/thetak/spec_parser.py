"""
Parser for model, germ, rotation, ladder and defect specs.

Built on the lark grammar in specs.lark; every lark error surfaces as
SpecSyntaxError so the CLI can map it to a usage failure.
"""

import os
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Tuple

from lark import Lark, Transformer
from lark.exceptions import LarkError, VisitError

from .errors import SpecSyntaxError

GRAMMAR_PATH = os.path.join(os.path.dirname(__file__), "specs.lark")


@dataclass(frozen=True)
class Call:
    name: str
    groups: Tuple[Tuple[object, ...], ...] = ()

    def flat_args(self) -> List[object]:
        return [a for g in self.groups for a in g]

    def group(self, index: int, default=()) -> Tuple[object, ...]:
        return self.groups[index] if index < len(self.groups) else default


class SpecTransformer(Transformer):
    def call(self, args):
        name = str(args[0])
        groups = tuple(g for g in args[1:] if g is not None)
        return Call(name, groups)

    def group(self, args):
        return tuple(args)

    def vector(self, args):
        return tuple(args)

    def rational(self, args):
        num = int(args[0])
        den = int(args[1]) if len(args) > 1 and args[1] is not None else 1
        return Fraction(num, den)

    def string(self, args):
        return str(args[0])[1:-1]

    def rotation(self, args):
        return args[0]

    def ladder_list(self, args):
        return [int(a) for a in args]

    def ladder_doubling(self, args):
        lo, hi = int(args[0]), int(args[1])
        if lo < 1 or hi < lo:
            raise ValueError(f"bad ladder range {lo}..{hi}")
        out = []
        k = lo
        while k <= hi:
            out.append(k)
            k *= 2
        return out

    def assignments(self, args):
        return dict(args)

    def assignment(self, args):
        return (str(args[0]), int(args[1]))


class SpecParser:
    _parser = None

    @classmethod
    def parser(cls) -> Lark:
        if cls._parser is None:
            with open(GRAMMAR_PATH, "r", encoding="utf-8") as f:
                grammar = f.read()
            cls._parser = Lark(
                grammar,
                start=["call", "rotation", "ladder", "assignments"],
                parser="lalr",
            )
        return cls._parser

    @classmethod
    def parse(cls, text: str, start: str):
        try:
            tree = cls.parser().parse(text, start=start)
            return SpecTransformer().transform(tree)
        except VisitError as e:
            raise SpecSyntaxError(f"cannot read {start} spec {text!r}: {e.orig_exc}") from e
        except LarkError as e:
            raise SpecSyntaxError(f"cannot read {start} spec {text!r}: {e}") from e


def parse_call(text: str) -> Call:
    return SpecParser.parse(text.strip(), "call")


def parse_rotation(text: str) -> Fraction:
    return SpecParser.parse(text.strip(), "rotation")


def parse_ladder(text: str) -> List[int]:
    return SpecParser.parse(text.strip(), "ladder")


def parse_assignments(text: str) -> Dict[str, int]:
    return SpecParser.parse(text.strip(), "assignments")
