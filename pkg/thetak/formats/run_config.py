"""
Per-run configuration.

A RunConfig is read from a TOML document (schema version 1) and overlaid
with command-line flags; every field has a default so an empty document is
valid. Test functions are given as polynomial-Gaussian specs:

    gauss(c)                  exp(-(xi - c)^2)
    gauss((c1, c2); s)        exp(-s |xi - c|^2)
    gauss(0; 1; 1, 0, 1)      (1 + xi^2) exp(-xi^2)       (rank 1 only)

A list of specs is summed.
"""

import logging
import os
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from fractions import Fraction
from typing import List, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from ..dist_calc import TestFunction
from ..errors import ConfigError, SpecSyntaxError, UsageError
from ..exact_series import RootOfUnity
from ..polynomial import Polynomial
from ..spec_parser import parse_call

logger = logging.getLogger("thetak.formats.run_config")

SCHEMA_VERSION = 1


class RunConfig(BaseModel):
    """Everything a CLI command needs; all defaults are documented in docs/FORMATS.md."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    schema_version: int = Field(default=SCHEMA_VERSION, description="Document schema version")
    command: str = Field(default="verify", description="Subcommand the document is meant for")
    check: Optional[str] = Field(default=None, description="Sub-check of em or functoriality")
    model: Optional[str] = Field(default=None, description="Model spec such as complex-line(2,0)")
    order: Optional[int] = Field(default=None, description="Keep every power k^p with p >= -order")
    convolve: Optional[str] = Field(default=None, description="Germ of a measure B; verify B^k * Theta_k instead")
    rg: bool = Field(default=False, description="Verify R_g(Theta_k) on t* instead (SU(2) models)")
    kladder: List[int] = Field(default_factory=lambda: [8, 16, 32, 64], description="k values for order fits")
    phi: List[str] = Field(default_factory=list, description="Polynomial-Gaussian terms; empty picks a default")
    zeta: str = Field(default="1/2", description="Root of unity as a rotation number p/q")
    tol: Optional[float] = Field(default=None, description="Quadrature tolerance override")
    out: Optional[str] = Field(default=None, description="Directory for CSV tables and summary.toml")
    inject_defect: Optional[str] = Field(default=None, description="Defect spec lam=..,k=..[,delta=..]")
    k: Optional[int] = Field(default=None, description="Single k for mystery and finite-k checks")
    kmax: int = Field(default=50, description="Largest k for window checks")
    mu_bound: Optional[int] = Field(default=None, description="|mu| bound for restriction windows (2k if unset)")
    lam_max: int = Field(default=10, description="Largest label for Kirillov and pushforward checks")

    @field_validator("schema_version")
    @classmethod
    def _known_schema(cls, v: int) -> int:
        if v != SCHEMA_VERSION:
            raise ValueError(f"unsupported schema_version {v}")
        return v

    @field_validator("kladder")
    @classmethod
    def _increasing(cls, v: List[int]) -> List[int]:
        if len(v) < 3 or v[0] < 1 or any(b <= a for a, b in zip(v, v[1:])):
            raise ValueError("kladder must be strictly increasing, positive, with at least 3 entries")
        return v

    @field_validator("zeta")
    @classmethod
    def _rotation(cls, v: str) -> str:
        try:
            RootOfUnity.from_rotation(v)
        except SpecSyntaxError as e:
            raise ValueError(str(e)) from e
        return v

    @field_validator("kmax", "lam_max")
    @classmethod
    def _positive(cls, v: int) -> int:
        if v < 1:
            raise ValueError("must be positive")
        return v

    @field_validator("tol")
    @classmethod
    def _positive_tol(cls, v: Optional[float]) -> Optional[float]:
        if v is not None and not v > 0:
            raise ValueError("tol must be a positive number")
        return v

    def root(self) -> RootOfUnity:
        return RootOfUnity.from_rotation(self.zeta)

    def test_function(self, rank: int) -> TestFunction:
        specs = self.phi or [default_phi_spec(rank)]
        phi = None
        for spec in specs:
            term = parse_test_function(spec)
            phi = term if phi is None else phi + term
        if phi.rank != rank:
            raise UsageError(f"test function has rank {phi.rank}, the check needs rank {rank}")
        return phi


def default_phi_spec(rank: int) -> str:
    if rank == 1:
        return "gauss(1/3)"
    return "gauss((" + ",".join(["1/3"] * rank) + "))"


def parse_test_function(text: str) -> TestFunction:
    call = parse_call(text)
    if call.name != "gauss":
        raise SpecSyntaxError(f"unknown test function {call.name!r}; expected gauss(...)")
    center = call.group(0)
    if len(center) != 1:
        raise SpecSyntaxError("gauss takes one center (a number or a vector)")
    center = center[0] if isinstance(center[0], tuple) else (center[0],)
    rank = len(center)
    scale = call.group(1, (Fraction(1),))
    if len(scale) != 1 or isinstance(scale[0], tuple) or scale[0] <= 0:
        raise SpecSyntaxError("gauss scale must be one positive rational")
    form = [[scale[0] if i == j else Fraction(0) for j in range(rank)] for i in range(rank)]
    coeffs = call.group(2, None)
    poly = None
    if coeffs is not None:
        if rank != 1 or any(isinstance(c, tuple) for c in coeffs):
            raise SpecSyntaxError("polynomial factors are given as rank-1 coefficient lists")
        poly = Polynomial.univariate(list(coeffs))
    return TestFunction.gaussian(center, form, poly)


def load_run_config(path: Optional[str] = None, **overrides) -> RunConfig:
    """Read the TOML document (if any) and overlay non-None overrides."""
    data = {}
    if path is not None:
        if not os.path.exists(path):
            raise ConfigError(f"config not found: {path}")
        with open(path, "rb") as f:
            try:
                data = tomllib.load(f)
            except tomllib.TOMLDecodeError as e:
                raise ConfigError(f"{path}: {e}") from e
    data.update({key: value for key, value in overrides.items() if value is not None})
    try:
        config = RunConfig(**data)
    except ValidationError as e:
        raise ConfigError(str(e)) from e
    logger.debug("run config: %s", config.model_dump())
    return config
