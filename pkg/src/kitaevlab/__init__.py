"""Exact sector solver for the interacting spinful Kitaev chain at the symmetric point."""

__version__ = "0.1.0"

from .model import (ModelError, ModelParams, SectorConfig, build_b_matrix,  # noqa: E402
                    build_disorder_pattern, make_sector)
from .canon import (CanonicalForm, MajoranaCorrelations, ZeroModeWarning,  # noqa: E402
                    equilibrium_correlations, svd_canonical)

__all__ = [
    "ModelError", "ModelParams", "SectorConfig", "build_b_matrix", "build_disorder_pattern",
    "make_sector", "CanonicalForm", "MajoranaCorrelations", "ZeroModeWarning",
    "equilibrium_correlations", "svd_canonical",
]
