"""Numerical verification lab for the minimal FKM isoparametric hypersurfaces and their eigenfunctions."""

__version__ = "0.1.0"

from .clifford import CliffordSphereElement, CliffordSystem, build_clifford_system, verify_clifford  # noqa: E402
from .fkm import FkmGeometry, VarietyTag, membership  # noqa: E402
from .report import VerificationReport  # noqa: E402

__all__ = [
    "CliffordSphereElement",
    "CliffordSystem",
    "FkmGeometry",
    "VarietyTag",
    "VerificationReport",
    "build_clifford_system",
    "membership",
    "verify_clifford",
]
