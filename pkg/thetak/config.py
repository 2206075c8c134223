"""
Numeric settings shared by every thetak kernel.

The settings object only reads values passed to its constructor: no
environment variables and no dotenv files.
"""

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class NumericSettings(BaseSettings):
    """Tolerances, caps and pool sizes used across the library."""

    QUADRATURE_TOL: float = Field(
        default=1e-12, description="Absolute tolerance for every 1-D Gauss-Legendre integral"
    )
    QUADRATURE_RULE: int = Field(default=20, description="Gauss-Legendre points per panel")
    QUADRATURE_NODE_CAP: int = Field(
        default=2 ** 14, description="Hard node cap per 1-D integral before giving up"
    )
    SPHERE_ANGLE_NODES: int = Field(
        default=32, description="Initial trapezoid nodes for the azimuth of a sphere integral"
    )
    SERIES_DEFAULT_ORDER: int = Field(default=16, description="Default power-series truncation")
    SERIES_MAX_ORDER: int = Field(default=64, description="Largest admissible power-series truncation")
    TRUNCATION_FACTOR: float = Field(
        default=1e-3,
        description="Atom families are cut where envelope x multiplicity bound < tol x factor",
    )
    EXACT_FLOOR_ABS: float = Field(
        default=1e-13, description="Absolute error floor for 'converged exactly'"
    )
    EXACT_FLOOR_REL: float = Field(
        default=1e-12, description="Relative error floor (times max |exact|) for 'converged exactly'"
    )
    ENUMERATION_CAP: int = Field(
        default=10 ** 7, description="Largest box a vector-partition enumeration may scan"
    )
    WORKERS: int = Field(default=4, description="Thread pool size for ladders and windows")
    LOG_LEVEL: str = Field(default="WARNING", description="Root log level used by the CLI")

    model_config = SettingsConfigDict(extra="ignore", validate_assignment=True)

    @classmethod
    def settings_customise_sources(
        cls,
        settings_cls,
        init_settings,
        env_settings,
        dotenv_settings,
        file_secret_settings,
    ):
        return (init_settings,)

    def exact_floor(self, scale: float) -> float:
        return max(self.EXACT_FLOOR_ABS, self.EXACT_FLOOR_REL * scale)


# Singleton instance
settings = NumericSettings()
