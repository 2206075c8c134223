"""
conftest.py: settings isolation for the thetak test suite.

Several tests tighten tolerances or shrink caps on the shared `settings`
singleton, and the CLI writes QUADRATURE_TOL from --tol. Every field is
snapshotted once at import time and restored after each test function.
"""
import pytest

from thetak.config import settings

# ─── Golden Settings Snapshot ────────────────────────────────────────────────

_GOLDEN_SETTINGS = settings.model_dump()


@pytest.fixture(autouse=True)
def _restore_settings():
    yield
    for name, value in _GOLDEN_SETTINGS.items():
        if getattr(settings, name) != value:
            setattr(settings, name, value)
