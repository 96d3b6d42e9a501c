"""Critical points of the eigenfunctions and the focal geometry around them.

Critical points of phi1 = <x, q1> and phi3 = <xi, q1> on M^n are exactly the
points x with q1 in span{x, xi(x)}, i.e. where the normal geodesic through q1
meets M^n (8 points).  Critical points of omega2 = <x, q2> on M_- are where
the normal geodesic through q2 touches M_- (4 points).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .calculus import (level_divergence, linear_field, mean_curvature_closed_form,
                       mean_curvature_from_coefficients, normal_height_field, omega1_level_divergence,
                       principal_frame, quadratic_field, tangential_gradient)
from .clifford import CliffordSphereElement, random_sphere_element
from .errors import DegenerateParameter, FkmError, FocalDegeneracy, InvalidArgument, WrongCount
from .fkm import MMINUS, MN, MPLUS, VMINUS, VPLUS, FkmGeometry, VarietyTag, membership_residual
from .report import VerificationReport
from .spectra import EigenfunctionSpec, isoparametric_coefficients
from .varieties import (F_batch, as_rng, eigenspace_vector, focal_angle, h_map, j_map,
                        orthogonal_complement, project_to_constraints, project_to_level,
                        retract_Mminus, sample_Mminus, sample_Mn, sample_Mplus, tangent_frame)

SCAN_NODES = 4096
DEDUP_RADIUS = 1e-8
FD_STEP = 1e-4
DEGENERATE_EPS = 1e-6


@dataclass
class CriticalPoint:
    x: np.ndarray
    function_id: str
    hessian_diagonal: list[float]
    morse_index: int
    degenerate: bool
    gradient_norm: float = 0.0
    closed_form_diagonal: list[float] = field(default_factory=list)
    fd_diagonal: list[float] = field(default_factory=list)
    closed_form_sign: int = 1
    closed_form_rel_error: float = 0.0
    span_residual: float = 0.0

    def to_dict(self) -> dict:
        return {
            "function": self.function_id,
            "x": [float(v) for v in self.x],
            "hessian_diagonal": [float(v) for v in self.hessian_diagonal],
            "morse_index": self.morse_index,
            "degenerate": self.degenerate,
            "gradient_norm": self.gradient_norm,
            "closed_form_sign": self.closed_form_sign,
            "closed_form_rel_error": self.closed_form_rel_error,
        }


def _wrap_roots(fun, ts: np.ndarray, vals: np.ndarray) -> list[float]:
    """Roots of a 2pi-periodic function from samples on [0, 2pi), refined by brentq."""
    period = 2.0 * math.pi
    ts_ext = np.append(ts, period)
    vals_ext = np.append(vals, vals[0])
    roots = []
    for i in range(len(ts)):
        a, b = ts_ext[i], ts_ext[i + 1]
        fa, fb = vals_ext[i], vals_ext[i + 1]
        if fa == 0.0:
            roots.append(a)
        elif fa * fb < 0.0:
            # the sampled endpoint at 2pi is the value at 0; re-evaluate for the bracket
            ga, gb = fun(a), fun(b)
            if ga * gb < 0.0:
                roots.append(brentq(fun, a, b, xtol=1e-15, rtol=1e-15, maxiter=200))
            else:
                roots.append(a if abs(ga) <= abs(gb) else b)
    return [r % period for r in roots]


def _dedup(points: list[np.ndarray]) -> list[np.ndarray]:
    out: list[np.ndarray] = []
    for p in points:
        if all(np.linalg.norm(p - o) > DEDUP_RADIUS for o in out):
            out.append(p)
    return out


def _foliation_geodesic(geom: FkmGeometry, q: np.ndarray, what: str):
    q = np.asarray(q, dtype=float)
    try:
        xi_q = geom.xi(q)
    except FocalDegeneracy as exc:
        raise DegenerateParameter(f"{what} lies on a focal variety: {exc}") from exc

    def gamma(t):
        t = np.asarray(t, dtype=float)
        return np.cos(t)[..., None] * q + np.sin(t)[..., None] * xi_q

    return gamma, xi_q


def geodesic_hits_Mn(geom: FkmGeometry, q: np.ndarray, nodes: int = SCAN_NODES) -> list[np.ndarray]:
    """All points where the normal geodesic through q crosses f = c0."""
    gamma, _ = _foliation_geodesic(geom, q, "q1")
    ts = np.arange(nodes) * (2.0 * math.pi / nodes)
    vals = F_batch(geom, gamma(ts)) - geom.c0

    def h(t):
        return geom.F(gamma(np.array(t))) - geom.c0

    return _dedup([gamma(np.array(t)) for t in _wrap_roots(h, ts, vals)])


def _mn_chart(geom: FkmGeometry, x: np.ndarray, w: np.ndarray) -> np.ndarray:
    y = x + w
    return project_to_level(geom, y / np.linalg.norm(y), geom.c0)


def _second_differences(g, chart, x: np.ndarray, directions: np.ndarray, step: float) -> np.ndarray:
    g0 = g(x)
    out = []
    for e in directions.T:
        out.append((g(chart(x, step * e)) + g(chart(x, -step * e)) - 2.0 * g0) / step**2)
    return np.array(out)


def hessian_closed_form(fid: str, mu: np.ndarray, x: np.ndarray, xi: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Diagonal Hessian at a critical point, in the principal frame, as written in the source formulas.

    phi1: -<mu_i xi - x, q>;  phi3: -mu_i <mu_i xi - x, q>.
    """
    base = mu * float(xi @ q) - float(x @ q)
    if fid == "phi1":
        return -base
    if fid == "phi3":
        return -mu * base
    raise InvalidArgument(f"no closed-form Hessian for {fid}")


def classify(geom: FkmGeometry, x: np.ndarray, fid: str, q: np.ndarray, step: float = FD_STEP) -> CriticalPoint:
    """Hessian diagonal of phi1/phi3 at a critical point, closed form checked against finite differences.

    The closed form is compared with the finite-difference diagonal under both
    global signs; the sign that matches is recorded and applied.
    """
    frame = tangent_frame(geom, x, MN)
    pframe, mu = principal_frame(geom, frame)
    xi = frame.normal
    fld = linear_field(fid, q) if fid == "phi1" else normal_height_field(fid, geom, q)
    grad_norm = float(np.linalg.norm(tangential_gradient(fld, frame)))
    closed = hessian_closed_form(fid, mu, x, xi, q)
    fd = _second_differences(fld.value, lambda p, w: _mn_chart(geom, p, w), x, pframe.basis, step)
    scale = max(float(np.max(np.abs(closed))), 1e-300)
    errs = {s: float(np.max(np.abs(s * closed - fd))) / scale for s in (1, -1)}
    sign = min(errs, key=errs.get)
    diag = sign * closed
    span_res = float(np.linalg.norm(q - (x @ q) * x - (xi @ q) * xi))
    return CriticalPoint(
        x=x, function_id=fid, hessian_diagonal=diag.tolist(),
        morse_index=int(np.sum(diag < 0)),
        degenerate=bool(np.min(np.abs(diag)) < DEGENERATE_EPS),
        gradient_norm=grad_norm, closed_form_diagonal=closed.tolist(), fd_diagonal=fd.tolist(),
        closed_form_sign=sign, closed_form_rel_error=errs[sign], span_residual=span_res,
    )


def find_critical_points_normal_geodesic(geom: FkmGeometry, fid: str, q1: np.ndarray,
                                         nodes: int = SCAN_NODES, expected: int | None = None) -> list[CriticalPoint]:
    if fid not in ("phi1", "phi3"):
        raise InvalidArgument("normal-geodesic enumeration applies to phi1 and phi3")
    points = geodesic_hits_Mn(geom, q1, nodes)
    expected = 2 * geom.g if expected is None else expected
    if len(points) != expected:
        raise WrongCount(f"{fid}: found {len(points)} critical points, expected {expected}", points)
    return [classify(geom, p, fid, q1) for p in points]


# --- omega2 on M_- ---------------------------------------------------------------


def omega2_hessian_eigenvalues(geom: FkmGeometry, x: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Predicted Hessian spectrum of <x, q> at a critical point of M_-.

    With q = cos t x + sin t nu (nu a unit normal of M_-), the focal shape
    operators have eigenvalues 1, 0, -1 with multiplicities m_+, m_-, m_+.
    """
    c = float(x @ q)
    s = float(np.linalg.norm(q - c * x))
    vals = np.concatenate([np.full(geom.m_plus, s - c), np.full(geom.m_minus, -c),
                           np.full(geom.m_plus, -s - c)])
    return np.sort(vals)


def fd_hessian_matrix(g, chart, x: np.ndarray, basis: np.ndarray, step: float = FD_STEP) -> np.ndarray:
    d = basis.shape[1]
    H = np.empty((d, d))
    g0 = g(x)
    for i in range(d):
        ei = basis[:, i] * step
        H[i, i] = (g(chart(x, ei)) + g(chart(x, -ei)) - 2.0 * g0) / step**2
        for j in range(i):
            ej = basis[:, j] * step
            H[i, j] = H[j, i] = (g(chart(x, ei + ej)) - g(chart(x, ei - ej))
                                 - g(chart(x, -ei + ej)) + g(chart(x, -ei - ej))) / (4.0 * step**2)
    return H


def classify_omega2(geom: FkmGeometry, x: np.ndarray, q2: np.ndarray, step: float = FD_STEP) -> CriticalPoint:
    frame = tangent_frame(geom, x, MMINUS)
    fld = linear_field("omega2", q2, MMINUS)
    grad_norm = float(np.linalg.norm(tangential_gradient(fld, frame)))
    H = fd_hessian_matrix(fld.value, lambda p, w: retract_Mminus(geom, p + w), x, frame.basis, step)
    fd = np.sort(np.linalg.eigvalsh(0.5 * (H + H.T)))
    closed = omega2_hessian_eigenvalues(geom, x, q2)
    scale = max(float(np.max(np.abs(closed))), 1e-300)
    rel = float(np.max(np.abs(closed - fd))) / scale
    normal_part = q2 - (x @ q2) * x
    span_res = float(np.linalg.norm(frame.basis.T @ normal_part))
    return CriticalPoint(
        x=x, function_id="omega2", hessian_diagonal=closed.tolist(),
        morse_index=int(np.sum(closed < 0)),
        degenerate=bool(np.min(np.abs(closed)) < DEGENERATE_EPS),
        gradient_norm=grad_norm, closed_form_diagonal=closed.tolist(), fd_diagonal=fd.tolist(),
        closed_form_sign=1, closed_form_rel_error=rel, span_residual=span_res,
    )


def geodesic_touches_Mminus(geom: FkmGeometry, q: np.ndarray, nodes: int = SCAN_NODES) -> list[np.ndarray]:
    """Minima of 1 + f along the normal geodesic through q that reach M_-."""
    gamma, xi_q = _foliation_geodesic(geom, q, "q2")

    def dh(t):
        t = float(t)
        p = gamma(np.array(t))
        return float(geom.grad_F(p) @ (-math.sin(t) * q + math.cos(t) * xi_q))

    ts = np.arange(nodes) * (2.0 * math.pi / nodes)
    X = gamma(ts)
    dX = -np.sin(ts)[:, None] * q + np.cos(ts)[:, None] * xi_q
    PX = np.einsum("aij,tj->tai", geom.sys.stack, X)
    p = np.einsum("tai,ti->ta", PX, X)
    grads = 4.0 * np.einsum("ti,ti->t", X, X)[:, None] * X - 8.0 * np.einsum("ta,tai->ti", p, PX)
    vals = np.einsum("ti,ti->t", grads, dX)
    out = []
    for t in _wrap_roots(dh, ts, vals):
        pt = gamma(np.array(t))
        if 1.0 + geom.F(pt) < 1e-10:
            out.append(pt)
    return _dedup(out)


def find_critical_points_omega2(geom: FkmGeometry, q2: np.ndarray, nodes: int = SCAN_NODES) -> list[CriticalPoint]:
    points = geodesic_touches_Mminus(geom, q2, nodes)
    if len(points) != geom.g:
        raise WrongCount(f"omega2: found {len(points)} critical points, expected {geom.g}", points)
    return [classify_omega2(geom, p, q2) for p in points]


def degeneracy_probe(geom: FkmGeometry, seed) -> dict:
    """Hessian degeneracy as q1 moves onto the focal set M_+, versus q1 on M^n.

    With q1 on M_+ the geodesic q1 -> P q1 is a normal geodesic; the points it
    meets on M^n are critical and at least one diagonal entry vanishes.  With
    q1 on M^n the critical points stay nondegenerate.
    """
    rng = as_rng(seed)
    q = sample_Mplus(geom, rng)
    P = random_sphere_element(geom.sys, rng).P
    v = P @ q
    ts = np.arange(SCAN_NODES) * (2.0 * math.pi / SCAN_NODES)
    gam = lambda t: np.cos(t)[..., None] * q + np.sin(t)[..., None] * v
    vals = F_batch(geom, gam(ts)) - geom.c0
    roots = _wrap_roots(lambda t: geom.F(gam(np.array(t))) - geom.c0, ts, vals)
    focal_min = min(float(np.min(np.abs(classify(geom, gam(np.array(t)), "phi1", q).hessian_diagonal)))
                    for t in roots)
    q_mn = sample_Mn(geom, rng)
    pts = geodesic_hits_Mn(geom, q_mn)
    mn_min = min(float(np.min(np.abs(classify(geom, p, "phi1", q_mn).hessian_diagonal))) for p in pts)
    return {"focal_min_abs_diagonal": focal_min, "focal_points": len(roots),
            "hypersurface_min_abs_diagonal": mn_min, "hypersurface_points": len(pts)}


# --- focal sets of phi2 and omega1 -----------------------------------------------


def verify_critical_set_phi2(geom: FkmGeometry, P: CliffordSphereElement, samples: int, seed,
                             tol: float = 1e-10) -> VerificationReport:
    """C(phi2) = N_+ u N_-, rank dh_+ = n - m, j_+ o h_+ = id, <P h, h> = +-sqrt((1-c0)/2)."""
    rng = as_rng(seed)
    fld = quadratic_field("phi2", P.P)
    tmax = geom.phi2_max
    c, s = focal_angle(geom)
    res = {"grad_on_N": [], "level_on_N": [], "on_Mn": [], "roundtrip": [], "dh_tangency": []}
    ranks, generic_ok = [], True
    b, _ = isoparametric_coefficients(EigenfunctionSpec("phi2", geom, P=P))
    for _ in range(samples):
        x = sample_Mplus(geom, rng)
        Tplus = tangent_frame(geom, x, MPLUS).basis
        for sign in (1, -1):
            y = h_map(geom, x, P.P, sign)
            res["on_Mn"].append(abs(geom.F(y) - geom.c0))
            res["level_on_N"].append(abs(float(y @ P.P @ y) - sign * tmax))
            res["roundtrip"].append(float(np.linalg.norm(j_map(geom, y) - x)))
            fr = tangent_frame(geom, y, MN)
            res["grad_on_N"].append(float(np.linalg.norm(tangential_gradient(fld, fr))))
            img = (c * np.eye(geom.dim) + sign * s * P.P) @ Tplus
            sv = np.linalg.svd(img, compute_uv=False)
            ranks.append(int(np.sum(sv > 1e-8 * sv[0])))
            res["dh_tangency"].append(float(np.max(np.abs(np.column_stack([y, fr.normal]).T @ img))))
        # the converse direction: away from N_+- the gradient does not vanish
        z = sample_Mn(geom, rng)
        u = fld.value(z)
        gz = tangential_gradient(fld, tangent_frame(geom, z, MN))
        if abs(abs(u) - tmax) > 1e-6 and float(gz @ gz) <= 1e-12:
            generic_ok = False
        if abs(float(gz @ gz) - b(u)) > tol:
            generic_ok = False
    rank_ok = all(r == geom.n - geom.m for r in ranks)
    flat = [v for vals in res.values() for v in vals]
    return VerificationReport.from_residuals(
        "focal.phi2_critical_set", flat, tol, config=geom.config(),
        details={k: max(v) for k, v in res.items()} | {
            "rank_dh": sorted(set(ranks)), "expected_rank": geom.n - geom.m,
            "critical_level": tmax, "converse_ok": generic_ok, "a": [float(v) for v in P.a]},
        extra_ok=rank_ok and generic_ok,
    )


def _clifford_geodesic_to_V(geom: FkmGeometry, x: np.ndarray, a: np.ndarray, aP: np.ndarray, sign: int) -> np.ndarray:
    """Follow the great circle cos s x + sin s Q x inside M_- until <P x, x> = sign.

    Along it the Clifford coefficients rotate as cos 2s a + sin 2s qhat, so
    omega1 = cos(2s - beta) with cos beta = <aP, a>.
    """
    cb = float(np.clip(aP @ a, -1.0, 1.0))
    perp = aP - cb * a
    if np.linalg.norm(perp) < 1e-12:
        perp = orthogonal_complement(a[:, None], 1)[:, 0]
    qhat = perp / np.linalg.norm(perp)
    beta = math.acos(cb)
    s = beta / 2.0 if sign > 0 else beta / 2.0 + math.pi / 2.0
    Q = geom.sys.combine(qhat)
    return math.cos(s) * x + math.sin(s) * (Q @ x)


def verify_Vpm_spheres(geom: FkmGeometry, P: CliffordSphereElement, samples: int, seed,
                       tol: float = 1e-10) -> VerificationReport:
    rng = as_rng(seed)
    res = {"V_in_eigenspace": [], "V_on_Mminus": [], "eigenspace_on_Mminus": [], "eigenspace_omega1": []}
    dims = []
    for _ in range(samples):
        for sign in (1, -1):
            # (a) points of V_+- reached inside M_-, without using E_+-(P)
            x0, a = sample_Mminus(geom, rng)
            v = _clifford_geodesic_to_V(geom, x0, a, P.a, sign)
            res["V_in_eigenspace"].append(float(np.max(np.abs(P.P @ v - sign * v))))
            res["V_on_Mminus"].append(membership_residual(geom, v, MMINUS))
            # (b) every unit vector of E_+-(P) lies in M_- with omega1 = +-1
            e = eigenspace_vector(P.P, sign, rng)
            res["eigenspace_on_Mminus"].append(membership_residual(geom, e, MMINUS))
            res["eigenspace_omega1"].append(abs(float(e @ P.P @ e) - sign))
            tag = VarietyTag(VPLUS if sign > 0 else VMINUS, P)
            dims.append(tangent_frame(geom, e, tag).dim)
    dim_ok = all(d == geom.l - 1 for d in dims)
    flat = [v for vals in res.values() for v in vals]
    return VerificationReport.from_residuals(
        "focal.V_spheres", flat, tol, config=geom.config(),
        details={k: max(v) for k, v in res.items()} | {
            "frame_dims": sorted(set(dims)), "expected_dim": geom.l - 1, "a": [float(v) for v in P.a]},
        extra_ok=dim_ok,
    )


# --- mean curvature of the phi2 level sets --------------------------------------------


def point_on_phi2_level(geom: FkmGeometry, P: np.ndarray, t: float, rng) -> np.ndarray:
    for _ in range(32):
        try:
            return project_to_constraints(geom, sample_Mn(geom, rng), P, t)
        except FkmError:
            continue
    raise FocalDegeneracy(f"could not reach phi2 level {t}")


def calibrate_mean_curvature_sign(seed=0) -> int:
    """Global sign on div(grad phi2/|grad phi2|) making h > 0 at small t > 0 for (m, k) = (2, 2)."""
    geom = FkmGeometry.from_mk(2, 2)
    rng = as_rng(seed)
    P = random_sphere_element(geom.sys, rng).P
    x = point_on_phi2_level(geom, P, 0.1 * geom.phi2_max, rng)
    d = level_divergence(geom, tangent_frame(geom, x, MN), P)
    return 1 if d > 0 else -1


def omega1_mean_curvature_closed_form(geom: FkmGeometry, t: float) -> float:
    """h(t) of the omega1 level sets in M_- from |grad w|^2 = 4(1 - w^2), Lap w = -4m w."""
    return mean_curvature_from_coefficients(
        lambda u: 4.0 * (1.0 - u * u), lambda u: -8.0 * u, lambda u: -4.0 * geom.m * u, t)


def point_on_omega1_level(geom: FkmGeometry, P: CliffordSphereElement, t: float, rng) -> np.ndarray:
    """A point of M_- with <Px, x> = t: its Clifford coefficients make angle arccos t with those of P."""
    u = rng.standard_normal(geom.m + 1)
    u -= (u @ P.a) * P.a
    u /= np.linalg.norm(u)
    x, _ = sample_Mminus(geom, rng, a=t * P.a + math.sqrt(1.0 - t * t) * u)
    return x


def mean_curvature_profile(geom: FkmGeometry, fid: str, P: CliffordSphereElement, levels: int, seed,
                           sign: int) -> list[dict]:
    """Numeric and closed-form mean curvature on ``levels`` evenly spaced levels of phi2 or omega1."""
    rng = as_rng(seed)
    if fid == "phi2":
        tmax = geom.phi2_max
    elif fid == "omega1":
        tmax = 1.0
    else:
        raise InvalidArgument("mean-curvature profiles exist for phi2 and omega1")
    rows = []
    for t in np.linspace(-0.9 * tmax, 0.9 * tmax, levels):
        t = float(t)
        if fid == "phi2":
            x = point_on_phi2_level(geom, P.P, t, rng)
            h_num = sign * level_divergence(geom, tangent_frame(geom, x, MN), P.P)
            h_closed = mean_curvature_closed_form(geom, t)
        else:
            x = point_on_omega1_level(geom, P, t, rng)
            h_num = sign * omega1_level_divergence(tangent_frame(geom, x, MMINUS), P.P)
            h_closed = omega1_mean_curvature_closed_form(geom, t)
        rows.append({"t": t, "h_numeric": h_num, "h_closed": h_closed})
    return rows


def verify_level_mean_curvature(geom: FkmGeometry, fid: str, P: CliffordSphereElement, levels: int, seed,
                                sign: int, tol_improper: float = 1e-6, tol_rel: float = 1e-5) -> VerificationReport:
    """m = 1: |h| < tol_improper on every level; otherwise relative agreement with the closed form.

    The levels are symmetric about 0 and, for an even count, never hit t = 0
    where the closed form vanishes and a relative error is undefined.
    """
    rows = mean_curvature_profile(geom, fid, P, levels, seed, sign)
    improper = geom.m == 1
    if improper:
        res = [abs(r["h_numeric"]) for r in rows]
        tol = tol_improper
    else:
        res = [abs(r["h_numeric"] - r["h_closed"]) / max(abs(r["h_closed"]), 1e-12) for r in rows]
        tol = tol_rel
    return VerificationReport.from_residuals(
        f"mean_curvature.{fid}", res, tol, config=geom.config(),
        details={"sign": sign, "levels": levels, "improper": improper,
                 "mode": "absolute" if improper else "relative", "a": [float(v) for v in P.a]},
    )


def dump_critical_points_csv(path, points: list[tuple[int, CriticalPoint]]) -> None:
    """One row per point: function, coordinates, Hessian diagonal, Morse index."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["function", "draw", "x", "hessian_diagonal", "morse_index", "degenerate"])
        for draw, p in points:
            w.writerow([p.function_id, draw, " ".join(repr(float(v)) for v in p.x),
                        " ".join(f"{v:.12e}" for v in p.hessian_diagonal), p.morse_index, int(p.degenerate)])
