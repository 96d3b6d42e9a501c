"""The FKM quartic, its restriction to the sphere, and variety membership.

F(x) = |x|^4 - 2 sum_a <P_a x, x>^2 on R^{2l}.  Its restriction f to the unit
sphere is isoparametric with g = 4 principal curvatures; M_+ = f^{-1}(1),
M_- = f^{-1}(-1) and the minimal hypersurface is M^n = f^{-1}(c0).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .clifford import CliffordSphereElement, CliffordSystem, build_clifford_system
from .errors import FocalDegeneracy, InvalidArgument

# below this, 1 - F^2 is treated as a focal point and xi is undefined
REGULAR_EPS = 1e-10

SPHERE = "Sphere"
MN = "Mn"
MPLUS = "Mplus"
MMINUS = "Mminus"
NPLUS = "Nplus"
NMINUS = "Nminus"
VPLUS = "Vplus"
VMINUS = "Vminus"
KINDS = (SPHERE, MN, MPLUS, MMINUS, NPLUS, NMINUS, VPLUS, VMINUS)


@dataclass(frozen=True)
class FkmGeometry:
    sys: CliffordSystem
    g: int = field(default=4, init=False)

    @classmethod
    def from_mk(cls, m: int, k: int) -> "FkmGeometry":
        return cls(build_clifford_system(m, k))

    @property
    def m(self) -> int:
        return self.sys.m

    @property
    def l(self) -> int:
        return self.sys.l

    @property
    def dim(self) -> int:
        """Ambient dimension 2l."""
        return 2 * self.sys.l

    @property
    def n(self) -> int:
        return 2 * self.sys.l - 2

    @property
    def m_plus(self) -> int:
        return self.sys.m

    @property
    def m_minus(self) -> int:
        return self.sys.l - self.sys.m - 1

    @property
    def c0(self) -> float:
        return (self.m_minus - self.m_plus) / (self.m_minus + self.m_plus)

    @property
    def theta1(self) -> float:
        """Distance from M^n to M_+ along normal geodesics, cos(4 theta1) = c0."""
        return math.acos(self.c0) / 4.0

    @property
    def phi2_max(self) -> float:
        """Critical level sqrt((1 - c0)/2) of <Px, x> on M^n."""
        return math.sqrt((1.0 - self.c0) / 2.0)

    @property
    def dim_Mminus(self) -> int:
        return self.sys.l + self.sys.m - 1

    @property
    def dim_Mplus(self) -> int:
        return 2 * self.sys.l - 2 - self.sys.m

    def config(self) -> dict:
        return {"m": self.m, "k": self.sys.k, "l": self.l, "n": self.n, "c0": self.c0}

    # --- polynomial evaluators -------------------------------------------------

    def quad_forms(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Return (P_a x stacked as rows, the values <P_a x, x>)."""
        Px = self.sys.stack @ x
        return Px, Px @ x

    def F(self, x: np.ndarray) -> float:
        x = np.asarray(x, dtype=float)
        _, p = self.quad_forms(x)
        r2 = float(x @ x)
        return r2 * r2 - 2.0 * float(p @ p)

    def grad_F(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        Px, p = self.quad_forms(x)
        return 4.0 * float(x @ x) * x - 8.0 * (p @ Px)

    def hess_F(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        Px, p = self.quad_forms(x)
        H = 4.0 * float(x @ x) * np.eye(self.dim) + 8.0 * np.outer(x, x)
        H -= 16.0 * Px.T @ Px
        H -= 8.0 * np.tensordot(p, self.sys.stack, axes=1)
        return H

    def spherical_grad(self, x: np.ndarray) -> np.ndarray:
        """Gradient of f within the unit sphere, grad F - 4 F x (|x| = 1)."""
        return self.grad_F(x) - 4.0 * self.F(x) * x

    # --- unit normal of the isoparametric foliation ------------------------------

    def xi(self, x: np.ndarray) -> np.ndarray:
        """Unit normal (grad F - 4Fx) / (4 sqrt(1 - F^2)) at a regular unit point."""
        x = np.asarray(x, dtype=float)
        if abs(float(np.linalg.norm(x)) - 1.0) > 1e-10:
            raise InvalidArgument("xi is defined on the unit sphere only")
        F = self.F(x)
        if 1.0 - F * F <= REGULAR_EPS:
            raise FocalDegeneracy(f"1 - F^2 = {1.0 - F * F:.3e}: point is on or near M_+ or M_-")
        N = self.grad_F(x) - 4.0 * F * x
        return N / (4.0 * math.sqrt(1.0 - F * F))

    def xi_jacobian(self, x: np.ndarray) -> np.ndarray:
        """Ambient derivative of the unit field N/|N|, N = grad F - 4 F x.

        On the sphere N/|N| coincides with xi, so this is the derivative of xi
        along any direction tangent to the sphere.
        """
        x = np.asarray(x, dtype=float)
        F = self.F(x)
        if 1.0 - F * F <= REGULAR_EPS:
            raise FocalDegeneracy(f"1 - F^2 = {1.0 - F * F:.3e}")
        gF = self.grad_F(x)
        N = gF - 4.0 * F * x
        nrm = float(np.linalg.norm(N))
        u = N / nrm
        DN = self.hess_F(x) - 4.0 * np.outer(x, gF) - 4.0 * F * np.eye(self.dim)
        return (DN - np.outer(u, u @ DN)) / nrm


class VarietyTag(NamedTuple):
    kind: str
    P: CliffordSphereElement | None = None

    def label(self) -> str:
        return self.kind


class Membership(NamedTuple):
    residual: float
    passed: bool


def membership_residual(geom: FkmGeometry, x: np.ndarray, tag: VarietyTag | str) -> float:
    """Max constraint violation of x for the tagged variety."""
    if isinstance(tag, str):
        tag = VarietyTag(tag)
    if tag.kind not in KINDS:
        raise InvalidArgument(f"unknown variety {tag.kind!r}")
    x = np.asarray(x, dtype=float)
    res = abs(float(np.linalg.norm(x)) - 1.0)
    kind = tag.kind
    if kind == SPHERE:
        return res
    if kind in (MN, NPLUS, NMINUS):
        res = max(res, abs(geom.F(x) - geom.c0))
    elif kind == MPLUS:
        _, p = geom.quad_forms(x)
        res = max(res, float(np.max(np.abs(p))))
    elif kind in (MMINUS, VPLUS, VMINUS):
        _, p = geom.quad_forms(x)
        res = max(res, abs(float(p @ p) - 1.0))
    if kind in (NPLUS, NMINUS, VPLUS, VMINUS):
        if tag.P is None:
            raise InvalidArgument(f"{kind} membership needs a Clifford sphere element")
        w = float(x @ tag.P.P @ x)
        if kind in (NPLUS, NMINUS):
            target = geom.phi2_max if kind == NPLUS else -geom.phi2_max
        else:
            target = 1.0 if kind == VPLUS else -1.0
        res = max(res, abs(w - target))
    return res


def membership(geom: FkmGeometry, x: np.ndarray, tag: VarietyTag | str, tol: float = 1e-9) -> Membership:
    r = membership_residual(geom, x, tag)
    return Membership(r, r < tol)
