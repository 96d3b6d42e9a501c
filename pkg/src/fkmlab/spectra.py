"""The five eigenfunctions and the spectral / isoparametric identities they satisfy.

On M^n:  phi1 = <x, q1>,  phi2 = <Px, x>,  phi3 = <xi(x), q1>   (eigenvalues n, 2n, 3n)
On M_-:  omega1 = <Px, x>,  omega2 = <x, q2>                     (eigenvalues 4m, l+m-1)
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .calculus import (ScalarField, intrinsic_laplacian, linear_field, normal_height_field,
                       quadratic_field, tangential_gradient)
from .clifford import CliffordSphereElement, random_sphere_element
from .errors import InvalidArgument, WrongVariety
from .fkm import MMINUS, MN, FkmGeometry, VarietyTag, membership_residual
from .report import VerificationReport
from .varieties import TangentFrame, as_rng, sample_sphere, sample_variety, tangent_frame

EPS_GENERIC = 1e-3
IDS = ("phi1", "phi2", "phi3", "omega1", "omega2")


@dataclass
class EigenfunctionSpec:
    id: str
    geom: FkmGeometry = field(repr=False)
    q: np.ndarray | None = None
    P: CliffordSphereElement | None = None

    def __post_init__(self):
        if self.id not in IDS:
            raise InvalidArgument(f"unknown eigenfunction {self.id!r}")
        if self.id in ("phi2", "omega1") and self.P is None:
            raise InvalidArgument(f"{self.id} needs a Clifford sphere element P")
        if self.id in ("phi1", "phi3", "omega2") and self.q is None:
            raise InvalidArgument(f"{self.id} needs a point parameter q")

    @property
    def host(self) -> str:
        return MN if self.id.startswith("phi") else MMINUS

    @property
    def eigenvalue(self) -> float:
        g = self.geom
        return {"phi1": g.n, "phi2": 2 * g.n, "phi3": 3 * g.n,
                "omega1": 4 * g.m, "omega2": g.dim_Mminus}[self.id]

    def field(self) -> ScalarField:
        if self.id in ("phi1", "omega2"):
            return linear_field(self.id, self.q, self.host)
        if self.id in ("phi2", "omega1"):
            return quadratic_field(self.id, self.P.P, self.host)
        return normal_height_field(self.id, self.geom, self.q)

    def parameters(self) -> dict:
        out = {"id": self.id, "host": self.host, "eigenvalue": self.eigenvalue}
        if self.q is not None:
            out["q"] = [float(v) for v in self.q]
        if self.P is not None:
            out["a"] = [float(v) for v in self.P.a]
        return out


def genericity_margin(geom: FkmGeometry, q: np.ndarray, levels) -> float:
    fq = geom.F(q)
    return min(abs(fq - c) for c in levels)


def draw_generic_point(geom: FkmGeometry, rng, avoid_hypersurface: bool = True) -> np.ndarray:
    """Unit q whose f-value stays EPS_GENERIC away from M_+, M_- (and M^n)."""
    levels = [1.0, -1.0] + ([geom.c0] if avoid_hypersurface else [])
    while True:
        q = sample_sphere(geom, rng)
        if genericity_margin(geom, q, levels) > EPS_GENERIC:
            return q


def make_spec(geom: FkmGeometry, fid: str, seed) -> EigenfunctionSpec:
    rng = as_rng(seed)
    if fid in ("phi2", "omega1"):
        return EigenfunctionSpec(fid, geom, P=random_sphere_element(geom.sys, rng))
    return EigenfunctionSpec(fid, geom, q=draw_generic_point(geom, rng, avoid_hypersurface=fid != "omega2"))


def eval_eigenfunction(spec: EigenfunctionSpec, x: np.ndarray, tol: float = 1e-8) -> float:
    res = membership_residual(spec.geom, x, spec.host)
    if res > tol:
        raise WrongVariety(f"{spec.id} lives on {spec.host}; residual {res:.2e}")
    return spec.field().value(np.asarray(x, dtype=float))


def _report_config(spec_or_geom) -> dict:
    geom = spec_or_geom.geom if isinstance(spec_or_geom, EigenfunctionSpec) else spec_or_geom
    return geom.config()


def verify_eigen_identity(spec: EigenfunctionSpec, frames: list[TangentFrame], tol: float,
                          eigenvalue: float | None = None, seed: int | None = None) -> VerificationReport:
    """max |Lap u + lam u| / (1 + |u|) over the sampled frames."""
    if not frames:
        raise InvalidArgument("need at least one sample")
    lam = spec.eigenvalue if eigenvalue is None else eigenvalue
    fld = spec.field()
    res = []
    for fr in frames:
        u = fld.value(fr.x)
        res.append(abs(intrinsic_laplacian(fld, fr) + lam * u) / (1.0 + abs(u)))
    return VerificationReport.from_residuals(
        f"eigen.{spec.id}", res, tol, config=_report_config(spec), seed=seed,
        details={"eigenvalue": lam, **spec.parameters()},
    )


def isoparametric_coefficients(spec: EigenfunctionSpec):
    """(b, a) with |grad u|^2 = b(u) and Lap u = a(u)."""
    g = spec.geom
    if spec.id == "phi2":
        return (lambda u: 4.0 * (1.0 - 2.0 * u * u / (1.0 - g.c0)), lambda u: -2.0 * g.n * u)
    if spec.id == "omega1":
        return (lambda u: 4.0 * (1.0 - u * u), lambda u: -4.0 * g.m * u)
    raise InvalidArgument("isoparametric system is stated for phi2 and omega1 only")


def phi2_gradient_closed_form(geom: FkmGeometry, P: np.ndarray, x: np.ndarray) -> np.ndarray:
    u = float(x @ P @ x)
    r = math.sqrt((1.0 + geom.c0) / (1.0 - geom.c0))
    return 2.0 * (P @ x - u * x + u * r * geom.xi(x))


def verify_isoparametric_system(spec: EigenfunctionSpec, frames: list[TangentFrame], tol: float,
                                seed: int | None = None) -> VerificationReport:
    b, a = isoparametric_coefficients(spec)
    fld = spec.field()
    grad_res, lap_res, closed_res = [], [], []
    for fr in frames:
        u = fld.value(fr.x)
        gr = tangential_gradient(fld, fr)
        grad_res.append(abs(float(gr @ gr) - b(u)))
        lap_res.append(abs(intrinsic_laplacian(fld, fr) - a(u)))
        if spec.id == "phi2":
            closed_res.append(float(np.max(np.abs(gr - phi2_gradient_closed_form(spec.geom, spec.P.P, fr.x)))))
    details = {"gradient_line_max": max(grad_res), "laplacian_line_max": max(lap_res), **spec.parameters()}
    if closed_res:
        details["closed_form_gradient_max"] = max(closed_res)
    return VerificationReport.from_residuals(
        f"isoparametric.{spec.id}", grad_res + lap_res + closed_res, tol,
        config=_report_config(spec), seed=seed, details=details,
    )


def tangency_residuals(geom: FkmGeometry, frame: TangentFrame, P: np.ndarray) -> tuple[float, float]:
    """For y = Px - <Px,x>x on M_-: (|Pcal y + y|, max |<y, nu>| over the normal space)."""
    x = frame.x
    y = P @ x - float(x @ P @ x) * x
    _, a = geom.quad_forms(x)
    Pcal = geom.sys.combine(a)
    eig_res = float(np.max(np.abs(Pcal @ y + y)))
    normal_res = float(np.max(np.abs(frame.normal_space.T @ y))) if frame.normal_space.size else 0.0
    return eig_res, normal_res


def verify_tangency_claim(geom: FkmGeometry, frames: list[TangentFrame], P: CliffordSphereElement,
                          tol: float, seed: int | None = None) -> VerificationReport:
    res = []
    for fr in frames:
        res.extend(tangency_residuals(geom, fr, P.P))
    return VerificationReport.from_residuals(
        "tangency.claim", res, tol, config=geom.config(), seed=seed,
        details={"a": [float(v) for v in P.a]},
    )


def xi_identity_residuals(geom: FkmGeometry, P: np.ndarray, x: np.ndarray) -> tuple[float, float]:
    """Residuals of xi(phi2) = -2 sqrt((1+f)/(1-f)) phi2 and xi xi(phi2) = -4 phi2 at a regular unit x."""
    xi = geom.xi(x)
    u = float(x @ P @ x)
    f = geom.F(x)
    first = 2.0 * float(xi @ P @ x) + 2.0 * math.sqrt((1.0 + f) / (1.0 - f)) * u
    # second derivative of <P g(t), g(t)> along g(t) = cos t x + sin t xi
    second = 2.0 * float(xi @ P @ xi) - 2.0 * u + 4.0 * u
    return abs(first), abs(second)


def sample_frames(geom: FkmGeometry, host: str, count: int, seed) -> list[TangentFrame]:
    rng = as_rng(seed)
    return [tangent_frame(geom, sample_variety(geom, VarietyTag(host), rng), host) for _ in range(count)]


def counterexample_ordering(m: int, k: int) -> dict:
    """(eigenvalue, critical-set) pairs on M^n and M_-, and whether 4m < l+m-1."""
    geom = FkmGeometry.from_mk(m, k)
    n, l = geom.n, geom.l
    return {
        "m": m, "k": k, "l": l, "n": n,
        "Mn": [(n, "8 points"), (2 * n, f"submanifold N_+ u N_- of dim {n - m}"), (3 * n, "8 points")],
        "Mminus": [(4 * m, f"submanifold V_+ u V_- of dim {l - 1}"), (l + m - 1, "4 points")],
        "omega_order_reversed": 4 * m < l + m - 1,
    }
