from __future__ import annotations

import math
import sys
from pathlib import Path

import pytest

ROOT = Path(__file__).resolve().parents[1]
SRC = ROOT / "src"
if str(SRC) not in sys.path:
    sys.path.insert(0, str(SRC))

from tbulge.core import FIGURE_BASE, RouterParams  # noqa: E402

GOLDEN_K = math.pi / 4.0


@pytest.fixture
def golden_params() -> RouterParams:
    """Figure parameters at the optimal-transfer couplings (g_a = g_b = 2, g_c = √20, N = 3)."""

    return FIGURE_BASE


@pytest.fixture
def unit_params() -> RouterParams:
    return RouterParams(
        omega_a=1.0,
        omega_b=1.0,
        omega_c=1.0,
        omega_e=5.0,
        omega_f=1.0,
        xi_a=1.0,
        xi_b=1.0,
        g_a=1.0,
        g_b=1.0,
        g_c=0.0,
        n_junction=1,
    )
