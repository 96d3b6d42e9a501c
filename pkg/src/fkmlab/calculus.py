"""Pointwise intrinsic calculus on M^n and M_- from exact ambient derivatives.

Both host varieties are minimal in the sphere, so the intrinsic Laplacian of
the restriction of G is the trace over a tangent frame of the great-circle
second derivatives d^2/dt^2 G(cos t x + sin t e_i) = Hess G(e_i, e_i) - <grad G, x>.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from .errors import FkmError, FocalDegeneracy
from .fkm import MN, FkmGeometry
from .varieties import TangentFrame, orthogonal_complement

FD_STEP = 1e-4
CLUSTER_GAP = 1e-6


@dataclass(frozen=True)
class ScalarField:
    """An ambient function with its exact gradient and Hessian evaluators."""

    name: str
    value: Callable[[np.ndarray], float]
    grad: Callable[[np.ndarray], np.ndarray]
    hess: Callable[[np.ndarray], np.ndarray]
    host: str = MN


def linear_field(name: str, q: np.ndarray, host: str = MN) -> ScalarField:
    q = np.asarray(q, dtype=float)
    zero = np.zeros((q.size, q.size))
    return ScalarField(name, lambda x: float(x @ q), lambda x: q.copy(), lambda x: zero, host)


def quadratic_field(name: str, P: np.ndarray, host: str = MN) -> ScalarField:
    P = np.asarray(P, dtype=float)
    return ScalarField(name, lambda x: float(x @ P @ x), lambda x: 2.0 * P @ x, lambda x: 2.0 * P, host)


def normal_height_field(name: str, geom: FkmGeometry, q: np.ndarray, step: float = FD_STEP) -> ScalarField:
    """x -> <xi(x), q> with exact gradient and a central-difference Hessian."""
    q = np.asarray(q, dtype=float)

    def value(x):
        return float(_xi_any(geom, x) @ q)

    def grad(x):
        return geom.xi_jacobian(x).T @ q

    def hess(x):
        d = x.size
        H = np.empty((d, d))
        for j in range(d):
            e = np.zeros(d)
            e[j] = step
            H[:, j] = (grad(x + e) - grad(x - e)) / (2.0 * step)
        return 0.5 * (H + H.T)

    return ScalarField(name, value, grad, hess, MN)


def _xi_any(geom: FkmGeometry, x: np.ndarray) -> np.ndarray:
    # ambient unit field N/|N|; equals xi on the sphere
    N = geom.grad_F(x) - 4.0 * geom.F(x) * x
    return N / np.linalg.norm(N)


def fkm_field(geom: FkmGeometry) -> ScalarField:
    return ScalarField("F", geom.F, geom.grad_F, geom.hess_F, MN)


# --- gradients and Laplacians ----------------------------------------------------


def tangential_gradient(field: ScalarField, frame: TangentFrame) -> np.ndarray:
    B = frame.basis
    return B @ (B.T @ field.grad(frame.x))


def great_circle_second_derivative(field: ScalarField, x: np.ndarray, e: np.ndarray) -> float:
    """d^2/dt^2 at 0 of G(cos t x + sin t e) for unit e orthogonal to x."""
    return float(e @ field.hess(x) @ e - field.grad(x) @ x)


def intrinsic_laplacian(field: ScalarField, frame: TangentFrame) -> float:
    """Laplacian of the restriction to a minimal submanifold of the sphere."""
    x, B = frame.x, frame.basis
    H = field.hess(x)
    return float(np.einsum("ij,ik,kj->", B, H, B) - B.shape[1] * (field.grad(x) @ x))


def laplacian_fd(field: ScalarField, frame: TangentFrame, step: float = FD_STEP) -> float:
    """Finite-difference oracle: second differences of G along great circles."""
    x = frame.x
    g0 = field.value(x)
    c, s = math.cos(step), math.sin(step)
    total = 0.0
    for e in frame.basis.T:
        total += field.value(c * x + s * e) + field.value(c * x - s * e) - 2.0 * g0
    return total / step**2


def sphere_laplacian(field: ScalarField, x: np.ndarray) -> float:
    """Laplacian of G = field restricted to the unit sphere, over a sphere frame."""
    B = orthogonal_complement(x[:, None], 1)
    return float(sum(great_circle_second_derivative(field, x, e) for e in B.T))


def two_laplacian_residual(field: ScalarField, x: np.ndarray) -> float:
    """Residual of  Lap_R G = Lap_S G + n x(G) + x x(G)  at a unit point (n = dim - 2)."""
    n = x.size - 2
    grad, H = field.grad(x), field.hess(x)
    ambient = float(np.trace(H))
    radial = float(grad @ x)
    radial2 = float(x @ H @ x) + radial
    return abs(ambient - (sphere_laplacian(field, x) + n * radial + radial2))


def laplacian_cascade(field: ScalarField, frame: TangentFrame) -> float:
    """Intrinsic Laplacian via the ambient -> sphere -> submanifold cascade.

    Uses the ambient trace, subtracts the radial terms to reach the sphere, then
    subtracts the normal second derivatives along the geodesic extension of each
    unit normal (valid for a minimal host).
    """
    x = frame.x
    n = x.size - 2
    grad, H = field.grad(x), field.hess(x)
    lap_sphere = float(np.trace(H)) - n * float(grad @ x) - (float(x @ H @ x) + float(grad @ x))
    if frame.normal is not None:
        normals = frame.normal[:, None]
    elif frame.normal_space is not None:
        normals = frame.normal_space
    else:
        raise FkmError("cascade route needs the normal directions of the host")
    for nu in normals.T:
        lap_sphere -= great_circle_second_derivative(field, x, nu)
    return lap_sphere


# --- shape operator and curvature of the hypersurface -------------------------


def shape_matrix(geom: FkmGeometry, frame: TangentFrame) -> np.ndarray:
    """Matrix of A_xi v = -(D_v xi)^T in the frame basis."""
    if frame.tag.kind != MN:
        raise FkmError("shape operator is defined on M^n frames")
    B = frame.basis
    return -B.T @ geom.xi_jacobian(frame.x) @ B


def shape_operator(geom: FkmGeometry, frame: TangentFrame, v: np.ndarray) -> np.ndarray:
    B = frame.basis
    Dv = geom.xi_jacobian(frame.x) @ v
    return -B @ (B.T @ Dv)


class PrincipalCurvatures(NamedTuple):
    values: list[float]
    multiplicities: list[int]
    raw: np.ndarray


class ClusteringAmbiguity(FkmError):
    def __init__(self, message, raw):
        super().__init__(message)
        self.raw = raw


def cluster_spectrum(w: np.ndarray, gap: float = CLUSTER_GAP) -> PrincipalCurvatures:
    """Group a sorted-descending spectrum into (value, multiplicity) clusters."""
    w = np.sort(np.asarray(w))[::-1]
    groups: list[list[float]] = [[w[0]]]
    for a, b in zip(w[:-1], w[1:]):
        d = a - b
        if 1e-9 < d <= gap:
            raise ClusteringAmbiguity(f"eigenvalue gap {d:.2e} is neither a split nor a cluster", w)
        if d > gap:
            groups.append([b])
        else:
            groups[-1].append(b)
    return PrincipalCurvatures([float(np.mean(g)) for g in groups], [len(g) for g in groups], w)


def principal_curvatures(geom: FkmGeometry, frame: TangentFrame) -> PrincipalCurvatures:
    S = shape_matrix(geom, frame)
    return cluster_spectrum(np.linalg.eigvalsh(0.5 * (S + S.T)))


def expected_principal_curvatures(geom: FkmGeometry) -> PrincipalCurvatures:
    vals = [1.0 / math.tan(geom.theta1 + j * math.pi / 4) for j in range(4)]
    mult = [geom.m_plus, geom.m_minus, geom.m_plus, geom.m_minus]
    raw = np.repeat(vals, mult)
    return PrincipalCurvatures(vals, mult, raw)


def principal_frame(geom: FkmGeometry, frame: TangentFrame) -> tuple[TangentFrame, np.ndarray]:
    """Rotate an M^n frame onto eigenvectors of the shape operator."""
    S = shape_matrix(geom, frame)
    mu, V = np.linalg.eigh(0.5 * (S + S.T))
    order = np.argsort(-mu)
    rotated = TangentFrame(frame.x, frame.tag, frame.basis @ V[:, order], normal=frame.normal)
    return rotated, mu[order]


# --- mean curvature of the level sets of <Px, x> in M^n ------------------------


def phi2_gradient_field(geom: FkmGeometry, P: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Ambient extension G(y) of grad phi2 and its Jacobian DG(y), for unit regular y.

    G(y) = 2Py - 2<Py,y> y - 2<Py,xi> xi.
    """
    xi = geom.xi(y)
    Jxi = geom.xi_jacobian(y)
    Py = P @ y
    s = float(Py @ xi)
    G = 2.0 * Py - 2.0 * float(Py @ y) * y - 2.0 * s * xi
    ds = P @ xi + Jxi.T @ Py
    DG = (2.0 * P - 4.0 * np.outer(y, Py) - 2.0 * float(Py @ y) * np.eye(y.size)
          - 2.0 * np.outer(xi, ds) - 2.0 * s * Jxi)
    return G, DG


def level_divergence(geom: FkmGeometry, frame: TangentFrame, P: np.ndarray) -> float:
    """div over M^n of the unit field grad phi2 / |grad phi2| at frame.x."""
    G, DG = phi2_gradient_field(geom, P, frame.x)
    nrm = float(np.linalg.norm(G))
    if nrm < 1e-8:
        raise FocalDegeneracy("grad phi2 vanishes: point is on N_+ or N_-")
    nu = G / nrm
    B = frame.basis
    Dnu = (DG - np.outer(nu, nu @ DG)) / nrm
    return float(np.einsum("ij,ik,kj->", B, Dnu, B))


def omega1_level_divergence(frame: TangentFrame, P: np.ndarray) -> float:
    """div over M_- of grad omega1 / |grad omega1|, with grad omega1 = 2(Px - <Px,x>x)."""
    x = frame.x
    Px = P @ x
    G = 2.0 * (Px - float(Px @ x) * x)
    nrm = float(np.linalg.norm(G))
    if nrm < 1e-8:
        raise FocalDegeneracy("grad omega1 vanishes: point is on V_+ or V_-")
    DG = 2.0 * (P - 2.0 * np.outer(x, Px) - float(Px @ x) * np.eye(x.size))
    nu = G / nrm
    B = frame.basis
    Dnu = (DG - np.outer(nu, nu @ DG)) / nrm
    return float(np.einsum("ij,ik,kj->", B, Dnu, B))


def level_mean_curvature(geom: FkmGeometry, frame: TangentFrame, P: np.ndarray, sign: float = -1.0) -> float:
    """Mean-curvature scalar of the level set of phi2 through frame.x.

    ``sign`` multiplies the divergence of the unit gradient field; the default
    -1 is the convention making h > 0 for small positive levels when
    n - 4/(1 - c0) > 0 (see :func:`calibrate_mean_curvature_sign`).
    """
    return sign * level_divergence(geom, frame, P)


def mean_curvature_closed_form(geom: FkmGeometry, t: float) -> float:
    c0, n = geom.c0, geom.n
    return (n - 4.0 / (1.0 - c0)) * t / math.sqrt(1.0 - 2.0 * t * t / (1.0 - c0))


def mean_curvature_from_coefficients(b, db, a, t: float) -> float:
    """h(t) = (b'(t) - 2 a(t)) / (2 sqrt(b(t))) for an isoparametric pair |grad u|^2 = b(u), Lap u = a(u)."""
    return (db(t) - 2.0 * a(t)) / (2.0 * math.sqrt(b(t)))
