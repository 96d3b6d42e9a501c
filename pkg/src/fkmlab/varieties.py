"""Seeded sampling on the varieties of the FKM foliation and tangent frames.

Every sampler takes either an integer seed or a ``numpy.random.Generator``;
integer seeds are split into labelled streams with :func:`make_rng` so a
campaign is bit-reproducible from one 64-bit seed.
"""

from __future__ import annotations

import csv
import math
import zlib
from dataclasses import dataclass
from typing import Callable, Iterable

import numpy as np
from scipy.optimize import brentq

from .clifford import CliffordSphereElement, random_sphere_element, sphere_element
from .errors import (FocalDegeneracy, InvalidArgument, NewtonDivergence, RankDeficiency,
                     WrongVariety)
from .fkm import (MMINUS, MN, MPLUS, NMINUS, NPLUS, SPHERE, VMINUS, VPLUS, FkmGeometry,
                  VarietyTag, membership_residual)

MPLUS_TOL = 1e-11
NEWTON_MAX_ITER = 64
NEWTON_MAX_RESTARTS = 32


def make_rng(seed: int, *labels: str) -> np.random.Generator:
    """Generator for the stream named by ``labels`` under a root seed."""
    key = tuple(zlib.crc32(str(lab).encode()) for lab in labels)
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=key))


def as_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return make_rng(seed, "default")


def _unit(v: np.ndarray) -> np.ndarray:
    return v / np.linalg.norm(v)


def sample_sphere(geom: FkmGeometry, seed) -> np.ndarray:
    rng = as_rng(seed)
    return _unit(rng.standard_normal(geom.dim))


def normal_geodesic(geom: FkmGeometry, x0: np.ndarray) -> Callable[[np.ndarray], np.ndarray]:
    """t -> cos t x0 + sin t xi(x0), vectorized over t (rows are points)."""
    xi = geom.xi(x0)

    def gamma(t):
        t = np.asarray(t, dtype=float)
        return np.cos(t)[..., None] * x0 + np.sin(t)[..., None] * xi

    return gamma


def F_batch(geom: FkmGeometry, X: np.ndarray) -> np.ndarray:
    """F evaluated on the rows of X."""
    PX = np.einsum("aij,tj->tai", geom.sys.stack, X)
    p = np.einsum("tai,ti->ta", PX, X)
    r2 = np.einsum("ti,ti->t", X, X)
    return r2 * r2 - 2.0 * np.einsum("ta,ta->t", p, p)


def project_to_level(geom: FkmGeometry, x0: np.ndarray, c: float) -> np.ndarray:
    """Move x0 along its normal geodesic to the level f = c, nearest root first."""
    x0 = np.asarray(x0, dtype=float)
    if not -1.0 < c < 1.0:
        raise InvalidArgument(f"target level {c} must lie in (-1, 1); use the focal samplers")
    f0 = geom.F(x0)
    if 1.0 - f0 * f0 <= 1e-8:
        raise FocalDegeneracy(f"start point too close to a focal variety (f = {f0!r})")
    if f0 == c:
        return x0.copy()
    gamma = normal_geodesic(geom, x0)

    def h(t):
        return geom.F(gamma(np.array(t))) - c

    best = None
    for half_width, nodes in ((math.pi / 4, 257), (math.pi / 2, 2049)):
        ts = np.linspace(0.0, half_width, nodes)
        for sgn in (1.0, -1.0):
            vals = F_batch(geom, gamma(sgn * ts)) - c
            change = np.nonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) <= 0)[0]
            if change.size:
                i = change[0]
                a, b = sorted((sgn * ts[i], sgn * ts[i + 1]))
                t = a if h(a) == 0 else (b if h(b) == 0 else brentq(h, a, b, xtol=1e-16, rtol=1e-15, maxiter=200))
                if best is None or abs(t) < abs(best):
                    best = t
        if best is not None:
            break
    if best is None:
        raise FocalDegeneracy(f"no root of f = {c} found along the normal geodesic")
    return gamma(np.array(best))


def sample_Mn(geom: FkmGeometry, seed) -> np.ndarray:
    rng = as_rng(seed)
    while True:
        x = sample_sphere(geom, rng)
        if 1.0 - geom.F(x) ** 2 > 1e-6:
            return project_to_level(geom, x, geom.c0)


def eigenspace_vector(P: np.ndarray, sign: int, rng: np.random.Generator) -> np.ndarray:
    """Random unit vector in the (+1 or -1) eigenspace of an involution P."""
    v = rng.standard_normal(P.shape[0])
    u = 0.5 * (v + sign * (P @ v))
    return _unit(u)


def sample_Mminus(geom: FkmGeometry, seed, a=None) -> tuple[np.ndarray, np.ndarray]:
    """Point x on M_- with <P_b x, x> = a_b; returns (x, a)."""
    rng = as_rng(seed)
    if a is None:
        elem = random_sphere_element(geom.sys, rng)
    else:
        elem = sphere_element(geom.sys, a)
    return eigenspace_vector(elem.P, +1, rng), elem.a


def retract_Mminus(geom: FkmGeometry, y: np.ndarray) -> np.ndarray:
    """Smooth retraction onto M_-: project y onto E_+ of sum_a <P_a y,y>/|p| P_a.

    One step is exact: for z in E_+(P(a)) one has <P_b z, z> = a_b |z|^2.
    """
    Py, p = geom.quad_forms(y)
    a = p / np.linalg.norm(p)
    z = y + a @ Py
    return _unit(z)


def newton_on_sphere(
    x0: np.ndarray,
    residual: Callable[[np.ndarray], np.ndarray],
    jacobian: Callable[[np.ndarray], np.ndarray],
    tol: float,
    max_iter: int = NEWTON_MAX_ITER,
) -> tuple[np.ndarray, float]:
    """Gauss-Newton with Armijo backtracking for residual(x) = 0 on the unit sphere.

    ``jacobian`` returns rows that are gradients of the residual components;
    they are projected onto the tangent space of the sphere and the minimum
    norm step is taken, followed by renormalization.
    """
    x = _unit(np.asarray(x0, dtype=float))
    r = residual(x)
    phi = float(r @ r)
    for _ in range(max_iter):
        if np.max(np.abs(r)) < tol * 1e-3:
            break
        J = jacobian(x)
        J = J - np.outer(J @ x, x)
        step = -np.linalg.lstsq(J, r, rcond=None)[0]
        alpha = 1.0
        while True:
            xn = _unit(x + alpha * step)
            rn = residual(xn)
            phin = float(rn @ rn)
            if phin <= (1.0 - 1e-4 * alpha) * phi or alpha < 1e-8:
                break
            alpha *= 0.5
        if phin >= phi and alpha < 1e-8:
            break
        x, r, phi = xn, rn, phin
    return x, float(np.max(np.abs(r)))


def sample_Mplus(geom: FkmGeometry, seed) -> np.ndarray:
    """Point on M_+ = {<P_a x, x> = 0 for all a} by projected Newton with restarts."""
    rng = as_rng(seed)

    def residual(x):
        return geom.quad_forms(x)[1]

    def jacobian(x):
        return 2.0 * geom.quad_forms(x)[0]

    worst = math.inf
    for _ in range(NEWTON_MAX_RESTARTS):
        x, res = newton_on_sphere(sample_sphere(geom, rng), residual, jacobian, MPLUS_TOL)
        if res < MPLUS_TOL:
            return x
        worst = min(worst, res)
    raise NewtonDivergence(f"M_+ Newton failed after {NEWTON_MAX_RESTARTS} restarts (best {worst:.2e})")


def project_to_constraints(geom: FkmGeometry, x0: np.ndarray, P: np.ndarray, level: float,
                           tol: float = 1e-13) -> np.ndarray:
    """Point on M^n with <Px, x> = level, by Newton from x0."""

    def residual(y):
        return np.array([geom.F(y) - geom.c0, y @ P @ y - level])

    def jacobian(y):
        return np.vstack([geom.grad_F(y), 2.0 * P @ y])

    x, res = newton_on_sphere(x0, residual, jacobian, tol, max_iter=200)
    if res > 1e-11:
        raise NewtonDivergence(f"level projection stalled at residual {res:.2e}")
    return x


def focal_angle(geom: FkmGeometry) -> tuple[float, float]:
    """(cos t, |sin t|) for the maps between M_+ and N_+-."""
    r = math.sqrt((1.0 + geom.c0) / 2.0)
    return math.sqrt(0.5 * (1.0 + r)), math.sqrt(0.5 * (1.0 - r))


def h_map(geom: FkmGeometry, x: np.ndarray, P: np.ndarray, sign: int = +1) -> np.ndarray:
    """M_+ -> N_+ (sign +1) or N_- (sign -1): x -> cos t x + sin t P x."""
    c, s = focal_angle(geom)
    return c * x + sign * s * (P @ x)


def j_map(geom: FkmGeometry, y: np.ndarray) -> np.ndarray:
    """N_+- -> M_+: y -> cos t y + |sin t| xi(y).

    xi points towards increasing f, i.e. towards M_+, for both N_+ and N_-,
    so the sine is taken positive in both cases.
    """
    c, s = focal_angle(geom)
    return c * y + s * geom.xi(y)


def sample_Nplusminus(geom: FkmGeometry, P: CliffordSphereElement, sign: int, seed) -> np.ndarray:
    if sign not in (1, -1):
        raise InvalidArgument("sign must be +1 or -1")
    return h_map(geom, sample_Mplus(geom, seed), P.P, sign)


def sample_Vpm(geom: FkmGeometry, P: CliffordSphereElement, sign: int, seed) -> np.ndarray:
    """Unit vector of E_+(P) (V_+) or E_-(P) (V_-)."""
    return eigenspace_vector(P.P, sign, as_rng(seed))


def sample_variety(geom: FkmGeometry, tag: VarietyTag, seed) -> np.ndarray:
    rng = as_rng(seed)
    kind = tag.kind
    if kind == SPHERE:
        return sample_sphere(geom, rng)
    if kind == MN:
        return sample_Mn(geom, rng)
    if kind == MPLUS:
        return sample_Mplus(geom, rng)
    if kind == MMINUS:
        return sample_Mminus(geom, rng)[0]
    if kind in (NPLUS, NMINUS):
        return sample_Nplusminus(geom, tag.P, 1 if kind == NPLUS else -1, rng)
    return sample_Vpm(geom, tag.P, 1 if kind == VPLUS else -1, rng)


# --- tangent frames --------------------------------------------------------------


@dataclass
class TangentFrame:
    """Orthonormal tangent basis (columns of ``basis``) of a tagged variety at x.

    ``normal`` is the unit normal xi within the sphere for M^n; for M_- the
    columns of ``normal_space`` span its normal space within the sphere.
    """

    x: np.ndarray
    tag: VarietyTag
    basis: np.ndarray
    normal: np.ndarray | None = None
    normal_space: np.ndarray | None = None

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    def gram_residual(self) -> float:
        B = self.basis
        cols = [B]
        if self.normal is not None:
            cols.append(self.normal[:, None])
        A = np.column_stack(cols + [self.x[:, None]])
        return float(np.max(np.abs(A.T @ A - np.eye(A.shape[1]))))


def orthonormal_span(vectors: np.ndarray, rank: int, what: str = "span") -> np.ndarray:
    """Orthonormal basis (columns) of the column span, which must have the given rank."""
    U, s, _ = np.linalg.svd(vectors, full_matrices=False)
    smax = s[0] if s.size else 0.0
    r = int(np.sum(s > 1e-8 * smax)) if smax > 0 else 0
    if r != rank:
        raise RankDeficiency(f"{what}: numerical rank {r}, expected {rank}")
    return U[:, :rank]


def orthogonal_complement(vectors: np.ndarray, rank: int, what: str = "complement") -> np.ndarray:
    """Orthonormal basis of the complement of the column span (rank = span dimension)."""
    U, s, _ = np.linalg.svd(vectors, full_matrices=True)
    smax = s[0] if s.size else 0.0
    r = int(np.sum(s > 1e-8 * smax)) if smax > 0 else 0
    if r != rank:
        raise RankDeficiency(f"{what}: constraint rank {r}, expected {rank}")
    return U[:, rank:]


def _eigenbasis(P: np.ndarray, sign: int) -> np.ndarray:
    w, V = np.linalg.eigh(P)
    return V[:, w > 0] if sign > 0 else V[:, w < 0]


def clifford_normal_directions(geom: FkmGeometry, x: np.ndarray, a: np.ndarray) -> np.ndarray:
    """Columns Q_j x for an orthonormal basis Q_j of Sigma-span orthogonal to a."""
    comp = orthogonal_complement(a[:, None], 1, "Clifford complement")
    Qs = np.tensordot(comp.T, geom.sys.stack, axes=1)
    return np.column_stack([Q @ x for Q in Qs]) if len(Qs) else np.zeros((geom.dim, 0))


def tangent_frame(geom: FkmGeometry, x: np.ndarray, tag: VarietyTag | str, check_tol: float = 1e-8) -> TangentFrame:
    if isinstance(tag, str):
        tag = VarietyTag(tag)
    x = np.asarray(x, dtype=float)
    res = membership_residual(geom, x, tag)
    if res > check_tol:
        raise WrongVariety(f"point is not on {tag.kind} (residual {res:.2e})")
    kind = tag.kind
    d = geom.dim
    if kind == SPHERE:
        return TangentFrame(x, tag, orthogonal_complement(x[:, None], 1))
    if kind == MN:
        xi = geom.xi(x)
        return TangentFrame(x, tag, orthogonal_complement(np.column_stack([x, xi]), 2), normal=xi)
    if kind == MPLUS:
        Px, _ = geom.quad_forms(x)
        return TangentFrame(x, tag, orthogonal_complement(np.column_stack([x, Px.T]), geom.m + 2))
    if kind == MMINUS:
        _, a = geom.quad_forms(x)
        Pcal = geom.sys.combine(a / np.linalg.norm(a))
        eplus = _eigenbasis(Pcal, +1)
        eplus_perp = eplus - np.outer(x, x @ eplus)
        along = orthonormal_span(eplus_perp, geom.l - 1, "E_+ part of T M_-")
        Qx = clifford_normal_directions(geom, x, a)
        basis = orthonormal_span(np.column_stack([along, Qx]), geom.dim_Mminus, "T M_-")
        eminus = _eigenbasis(Pcal, -1)
        if Qx.shape[1]:
            eminus = eminus - Qx @ (Qx.T @ eminus)
        normal_space = orthonormal_span(eminus, geom.l - geom.m, "normal space of M_-")
        return TangentFrame(x, tag, basis, normal_space=normal_space)
    if kind in (VPLUS, VMINUS):
        E = _eigenbasis(tag.P.P, 1 if kind == VPLUS else -1)
        E = E - np.outer(x, x @ E)
        return TangentFrame(x, tag, orthonormal_span(E, geom.l - 1, "T V"))
    # N_+-: image of T M_+ under the linear map x -> cos t x + sin t P x
    sign = 1 if kind == NPLUS else -1
    x_plus = j_map(geom, x)
    Tplus = tangent_frame(geom, x_plus, MPLUS, check_tol=max(check_tol, 1e-8)).basis
    c, s = focal_angle(geom)
    dh = c * np.eye(d) + sign * s * tag.P.P
    return TangentFrame(x, tag, orthonormal_span(dh @ Tplus, geom.n - geom.m, "T N"))


def frame_dimension(geom: FkmGeometry, kind: str) -> int:
    return {
        SPHERE: geom.dim - 1,
        MN: geom.n,
        MPLUS: geom.dim_Mplus,
        MMINUS: geom.dim_Mminus,
        NPLUS: geom.n - geom.m,
        NMINUS: geom.n - geom.m,
        VPLUS: geom.l - 1,
        VMINUS: geom.l - 1,
    }[kind]


def dump_points_csv(path, geom: FkmGeometry, rows: Iterable[tuple[VarietyTag, np.ndarray]]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["tag", "residual"] + [f"x{i}" for i in range(geom.dim)])
        for tag, x in rows:
            w.writerow([tag.kind, f"{membership_residual(geom, x, tag):.3e}"] + [repr(float(v)) for v in x])
