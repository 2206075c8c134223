"""
thetak command line.

Commands:
    thetak verify           exact Theta_k pairings against the truncated expansion
    thetak functoriality    restriction | mystery | pushforward | finite-k | all
    thetak em               halfline | fulllattice Euler-Maclaurin tables and fits
    thetak kirillov         character formula residuals for SU(2)
    thetak twisted          zeta-twisted sums and their expansions
    thetak models           list the model catalog

Exit codes: 0 pass, 1 check failed, 2 usage or config error, 3 numerical error.
"""

import argparse
import logging
import os
import sys
from fractions import Fraction
from math import factorial
from typing import Dict, List, Optional

import numpy as np

from .asymptotics import (
    convolved_target,
    em_fulllattice,
    em_halfline,
    exact_vs_expansion,
    fulllattice_coefficients,
    fulllattice_target,
    halfline_target,
    model_target,
    rg_target,
    twisted_halfline_target,
    twisted_sum,
)
from .config import settings
from .errors import DomainError, NumericalError, UsageError
from .exact_series import bernoulli_polynomial
from .formats.dist_format import NamedDistribution, write_distribution
from .formats.reports import number, write_fit_csv, write_restriction_csv, write_summary, write_table
from .formats.run_config import RunConfig, load_run_config
from .functoriality import (
    finite_k_functoriality,
    mystery_check,
    pushforward_orbit_check,
    verify_restriction,
)
from .group_orbits import IrrepLabel, kirillov_residual
from .models import CATALOG, load_model, theta_distribution, with_defect
from .spec_parser import parse_assignments, parse_ladder

logger = logging.getLogger("thetak.cli")

RESIDUAL_TOL = 1e-8
T_GRID = np.linspace(-1.0, 1.0, 41)

EXIT_PASS, EXIT_FAIL, EXIT_USAGE, EXIT_NUMERICAL = 0, 1, 2, 3


def _out(config: RunConfig, name: str) -> Optional[str]:
    return os.path.join(config.out, name) if config.out else None


def _summary(config: RunConfig, sections: Dict[str, Dict[str, object]]):
    path = _out(config, "summary.toml")
    if path:
        write_summary(path, sections)


def _verdict(passed: bool) -> int:
    return EXIT_PASS if passed else EXIT_FAIL


def _fit_section(report) -> Dict[str, object]:
    return {
        "target": report.name,
        "order": report.order,
        "slope": report.slope,
        "target_slope": report.target,
        "converged_exactly": report.converged_exactly,
        "passed": report.passed,
        "certificates": list(report.certificates),
    }


# ─── verify ──────────────────────────────────────────────────────────────────

def _expansion_entries(series) -> List[NamedDistribution]:
    return [NamedDistribution(f"theta_{n} residue {residue}", D, series.power(n))
            for (n, residue), D in series.coefficients]


def cmd_verify(config: RunConfig) -> int:
    model = load_model(config.model or "t-star-s1")
    if config.rg:
        target, rank = rg_target(model), 1
    elif config.convolve:
        target, rank = convolved_target(model, config.convolve), model.dual_rank
    else:
        target, rank = model_target(model), model.dual_rank
    if config.order is not None:
        order = config.order
    elif model.group.is_abelian or model.higher_layers_zero:
        order = 0
    else:
        order = -model.d
    phi = config.test_function(rank)
    report = exact_vs_expansion(target, phi, order, config.kladder)
    print(report.summary())
    for line in report.certificates:
        logger.info(line)
    path = _out(config, "verify.csv")
    if path:
        write_fit_csv(report, path)
        entries = _expansion_entries(target.expansion(order))
        if not (config.rg or config.convolve):
            k = config.kladder[-1]
            entries.append(NamedDistribution(f"Theta_{k}", theta_distribution(model, k, phi)))
        write_distribution(_out(config, "expansion.toml"), entries)
    _summary(config, {"verify": _fit_section(report)})
    return _verdict(report.passed)


# ─── functoriality ───────────────────────────────────────────────────────────

def _defect_model(model, spec: str):
    values = parse_assignments(spec)
    label = next((values[key] for key in ("lam", "λ", "mu", "μ") if key in values), None)
    if label is None or "k" not in values:
        raise UsageError("--inject-defect needs a label and k, e.g. lam=3,k=2")
    return with_defect(model, label, values["k"], values.get("delta", 1))


def _restriction(config: RunConfig, model) -> Dict[str, object]:
    if config.inject_defect:
        model = _defect_model(model, config.inject_defect)
    report = verify_restriction(model, config.kmax, config.mu_bound)
    print(report.summary())
    path = _out(config, "restriction.csv")
    if path:
        write_restriction_csv(report, path)
    bad = report.first_failure
    return {
        "model": report.model,
        "cells": len(report.rows),
        "passed": report.passed,
        "counterexample": [bad.mu, bad.k, bad.direct, bad.restricted] if bad else None,
    }


def _mystery(config: RunConfig, model) -> Dict[str, object]:
    ks = [config.k] if config.k else range(1, config.kmax + 1)
    results = [mystery_check(model, k) for k in ks]
    for r in results:
        print(f"k={r.k}: ({r.dimension}, {number(r.volume)}) {'equal' if r.equal else 'DIFFERENT'}")
    path = _out(config, "mystery.csv")
    if path:
        write_table(path, ("k", "dimension", "volume"), ((r.k, r.dimension, r.volume) for r in results))
    return {"model": model.name, "checked": len(results), "passed": all(r.equal for r in results)}


def _pushforward(config: RunConfig) -> Dict[str, object]:
    rows = [(lam, pushforward_orbit_check(IrrepLabel.su2(lam), T_GRID)) for lam in range(1, config.lam_max + 1)]
    worst = max(r for _, r in rows)
    print(f"pushforward: max residual {worst:.3e} over lambda <= {config.lam_max}")
    path = _out(config, "pushforward.csv")
    if path:
        write_table(path, ("lambda", "residual"), rows)
    return {"max_residual": worst, "passed": worst <= RESIDUAL_TOL}


def _finite_k(config: RunConfig, model) -> Dict[str, object]:
    phi = config.test_function(1)
    ks = [config.k] if config.k else range(1, min(config.kmax, 10) + 1)
    rows = [(k, finite_k_functoriality(model, k, phi)) for k in ks]
    worst = max(r for _, r in rows)
    print(f"finite-k functoriality: max residual {worst:.3e}")
    path = _out(config, "finite_k.csv")
    if path:
        write_table(path, ("k", "residual"), rows)
    return {"model": model.name, "max_residual": worst, "passed": worst <= RESIDUAL_TOL}


def cmd_functoriality(config: RunConfig) -> int:
    check = config.check or "all"
    model = load_model(config.model or "su2-flag-square")
    runners = {
        "restriction": lambda: _restriction(config, model),
        "mystery": lambda: _mystery(config, model),
        "pushforward": lambda: _pushforward(config),
        "finite-k": lambda: _finite_k(config, model),
    }
    if check == "all":
        selected = list(runners)
    elif check in runners:
        selected = [check]
    else:
        raise UsageError(f"unknown functoriality check {check!r}")
    sections = {name: runners[name]() for name in selected}
    _summary(config, sections)
    return _verdict(all(s["passed"] for s in sections.values()))


# ─── em ──────────────────────────────────────────────────────────────────────

def cmd_em(config: RunConfig) -> int:
    check = config.check or "fulllattice"
    order = 3 if config.order is None else config.order
    if check == "fulllattice":
        em_fulllattice(order)
        rows = fulllattice_coefficients(order)
        header = ("m", "coefficient of k^-m phi^(m)(0)")
        target = fulllattice_target()
    elif check == "halfline":
        model = load_model(config.model or "complex-line(2,0)")
        if not model.weights or model.rank != 1 or len(model.weights) != 1:
            raise UsageError("em halfline needs a complex-line(w, a) model")
        w, a = model.weights[0][0], model.shift[0]
        em_halfline(a, w, order)
        rows = [(n - 1, -Fraction(w) ** (n - 1) * bernoulli_polynomial(n, Fraction(1, 2)) / factorial(n))
                for n in range(1, order + 2)]
        header = ("m", f"coefficient of k^-m phi^(m)({a})")
        target = halfline_target(a, w)
    else:
        raise UsageError(f"unknown em table {check!r}")
    print(f"{header[0]:>3}  {header[1]}")
    for m, c in rows:
        print(f"{m:>3}  {c}")
    report = exact_vs_expansion(target, config.test_function(1), order, config.kladder)
    print(report.summary())
    path = _out(config, "em_coefficients.csv")
    if path:
        write_table(path, header, rows)
        write_fit_csv(report, _out(config, "em.csv"))
    _summary(config, {"em": dict(_fit_section(report), table=check)})
    return _verdict(report.passed)


# ─── kirillov / twisted / models ─────────────────────────────────────────────

def cmd_kirillov(config: RunConfig) -> int:
    rows = [(lam, kirillov_residual(IrrepLabel.su2(lam), T_GRID)) for lam in range(1, config.lam_max + 1)]
    worst = max(r for _, r in rows)
    print(f"kirillov: max residual {worst:.3e} over lambda <= {config.lam_max}")
    path = _out(config, "kirillov.csv")
    if path:
        write_table(path, ("lambda", "residual"), rows)
    passed = worst <= RESIDUAL_TOL
    _summary(config, {"kirillov": {"max_residual": worst, "passed": passed}})
    return _verdict(passed)


def _half_line_data(model):
    if model.name.startswith("complex-line(") and model.weights:
        return model.weights[0][0], model.shift[0]
    return None


def cmd_twisted(config: RunConfig) -> int:
    model = load_model(config.model or "t-star-s1")
    zeta = config.root()
    phi = config.test_function(model.dual_rank)
    line = _half_line_data(model)
    if line is not None and not zeta.power(line[0]).is_one():
        w, a = line
        order = 3 if config.order is None else config.order
        report = exact_vs_expansion(twisted_halfline_target(zeta, a, w), phi, order, config.kladder)
        print(report.summary())
        path = _out(config, "twisted.csv")
        if path:
            write_fit_csv(report, path)
        _summary(config, {"twisted": _fit_section(report)})
        return _verdict(report.passed)
    ks = [config.k] if config.k else config.kladder
    rows = [(k, twisted_sum(model, zeta, k, phi)) for k in ks]
    for k, value in rows:
        print(f"k={k}: |sum| = {abs(value):.3e}")
    passed = abs(rows[-1][1]) <= RESIDUAL_TOL
    path = _out(config, "twisted.csv")
    if path:
        write_table(path, ("k", "sum", "abs"), ((k, v, abs(v)) for k, v in rows))
    _summary(config, {"twisted": {"model": model.name, "zeta": config.zeta,
                                  "last_abs": abs(rows[-1][1]), "passed": passed}})
    return _verdict(passed)


def cmd_models(config: RunConfig) -> int:
    for name, usage in CATALOG.items():
        print(f"{name:<18} {usage}")
    return EXIT_PASS


# ─── Entry point ─────────────────────────────────────────────────────────────

def _common_flags() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="TOML run configuration (schema version 1)")
    common.add_argument("--model", help="Model spec, e.g. complex-line(2,0)")
    common.add_argument("--order", type=int, help="Keep every power k^p with p >= -ORDER")
    common.add_argument("--kladder", help="k values: 8,16,32,64 or 8..64")
    common.add_argument("--zeta", help="Root of unity as a rotation number p/q")
    common.add_argument("--phi", action="append", help="Test-function term such as gauss(0; 1; 1, 0, 1)")
    common.add_argument("--tol", type=float, help="Quadrature tolerance")
    common.add_argument("--out", help="Directory for CSV tables and summary.toml")
    common.add_argument("--k", type=int, help="Single k")
    common.add_argument("--kmax", type=int, help="Largest k for window checks")
    common.add_argument("--lam-max", type=int, help="Largest SU(2) label")
    common.add_argument("-v", "--verbose", action="count", default=0, help="-v info, -vv debug")
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _common_flags()
    parser = argparse.ArgumentParser(
        prog="thetak",
        description="Asymptotic expansions of weighted orbit sums",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="Use 'thetak <command> --help' for more info on a command.",
    )
    subparsers = parser.add_subparsers(dest="command", help="Command to execute")

    parser_verify = subparsers.add_parser("verify", parents=[common], help="Exact sums against the expansion")
    parser_verify.add_argument("--convolve", help="Germ of B; verify B^k * Theta_k")
    parser_verify.add_argument("--rg", action="store_true", help="Verify R_g(Theta_k) on t*")

    parser_func = subparsers.add_parser("functoriality", parents=[common], help="Restriction checks")
    parser_func.add_argument("check", nargs="?", default="all",
                             choices=["restriction", "mystery", "pushforward", "finite-k", "all"])
    parser_func.add_argument("--inject-defect", help="Shift one multiplicity: lam=3,k=2[,delta=1]")
    parser_func.add_argument("--mu-bound", type=int, help="|mu| bound (2k when unset)")

    parser_em = subparsers.add_parser("em", parents=[common], help="Euler-Maclaurin tables and fits")
    parser_em.add_argument("check", nargs="?", default="fulllattice", choices=["halfline", "fulllattice"])

    subparsers.add_parser("kirillov", parents=[common], help="Kirillov character formula for SU(2)")
    subparsers.add_parser("twisted", parents=[common], help="Twisted sums and expansions")
    subparsers.add_parser("models", parents=[common], help="List the model catalog")
    return parser


def _config_from_args(args) -> RunConfig:
    overrides = {
        "command": args.command,
        "check": getattr(args, "check", None),
        "model": args.model,
        "order": args.order,
        "kladder": parse_ladder(args.kladder) if args.kladder else None,
        "phi": args.phi,
        "zeta": args.zeta,
        "tol": args.tol,
        "out": args.out,
        "k": args.k,
        "kmax": args.kmax,
        "lam_max": args.lam_max,
        "inject_defect": getattr(args, "inject_defect", None),
        "mu_bound": getattr(args, "mu_bound", None),
        "convolve": getattr(args, "convolve", None),
        "rg": True if getattr(args, "rg", False) else None,
    }
    return load_run_config(args.config, **overrides)


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    verbose = getattr(args, "verbose", 0)
    level = logging.DEBUG if verbose > 1 else logging.INFO if verbose else settings.LOG_LEVEL
    logging.basicConfig(level=level, format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
                        stream=sys.stderr)

    commands = {
        "verify": cmd_verify,
        "functoriality": cmd_functoriality,
        "em": cmd_em,
        "kirillov": cmd_kirillov,
        "twisted": cmd_twisted,
        "models": cmd_models,
    }

    handler = commands.get(args.command)
    if handler is None:
        parser.print_help()
        return EXIT_USAGE
    try:
        config = _config_from_args(args)
        if config.tol is not None:
            settings.QUADRATURE_TOL = config.tol
        return handler(config)
    except UsageError as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (NumericalError, DomainError) as e:
        print(f"Numerical error: {e}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
