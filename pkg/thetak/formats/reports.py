"""
CSV tables and summary.toml.

Numbers are written with repr so that repeated runs produce identical
bytes; nothing here records a timestamp.
"""

import csv
import logging
import os
from fractions import Fraction
from typing import Dict, Iterable, Sequence

logger = logging.getLogger("thetak.formats.reports")


def number(x) -> str:
    if isinstance(x, complex):
        return repr(x.real) if x.imag == 0 else repr(x)
    if isinstance(x, Fraction):
        return str(x)
    if x is None:
        return ""
    return repr(x)


def write_table(path: str, header: Sequence[str], rows: Iterable[Sequence]):
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([number(x) if not isinstance(x, str) else x for x in row])
    logger.debug("wrote %s", path)


def write_fit_csv(report, path: str):
    rows = zip(report.ladder, report.exact, report.truncated, report.errors)
    write_table(path, ("k", "exact", "truncated", "abs_err"), rows)


def write_restriction_csv(report, path: str):
    rows = ((r.mu, r.k, r.direct, r.restricted, "yes" if r.equal else "no") for r in report.rows)
    write_table(path, ("mu", "k", "direct", "restricted", "equal"), rows)


def _escape(s: str) -> str:
    return s.replace("\\", "\\\\").replace('"', '\\"')


def _toml_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        return repr(v) if v == v and abs(v) != float("inf") else f'"{v}"'
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_toml_value(x) for x in v) + "]"
    return f'"{_escape(number(v) if not isinstance(v, str) else v)}"'


def _key(name: str) -> str:
    if name and all(c.isalnum() or c in "-_" for c in name):
        return name
    return f'"{_escape(name)}"'


def write_summary(path: str, sections: Dict[str, Dict[str, object]]):
    """One [section] per check; None values are omitted."""
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    content = "schema_version = 1\n"
    for name, values in sections.items():
        content += f"\n[{_key(name)}]\n"
        for key, value in values.items():
            if value is not None:
                content += f"{key} = {_toml_value(value)}\n"
    with open(path, "w", encoding="utf-8") as f:
        f.write(content)
    logger.debug("wrote %s", path)
