"""Single-photon transport through a T-bulge quantum router."""

from __future__ import annotations

__version__ = "0.1.0"

from .core import (  # noqa: E402
    FIGURE_BASE,
    EvanescentChannelError,
    Kinematics,
    ParameterError,
    RouterParams,
    effective_couplings,
    kinematics_from_energy,
    kinematics_from_k,
    validate,
)
from .scattering import (  # noqa: E402
    AmplitudeSet,
    CoefficientSet,
    DegenerateChannelError,
    Port,
    ScatteringQuery,
    scatter,
)

__all__ = [
    "AmplitudeSet",
    "CoefficientSet",
    "DegenerateChannelError",
    "EvanescentChannelError",
    "FIGURE_BASE",
    "Kinematics",
    "ParameterError",
    "Port",
    "RouterParams",
    "ScatteringQuery",
    "__version__",
    "effective_couplings",
    "kinematics_from_energy",
    "kinematics_from_k",
    "scatter",
    "validate",
]
