"""Verification campaigns: every check, for every configuration, one report file per suite."""

from __future__ import annotations

import datetime as _dt
import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .calculus import (cluster_spectrum, expected_principal_curvatures, intrinsic_laplacian,
                       laplacian_cascade, laplacian_fd, linear_field, quadratic_field, shape_matrix,
                       two_laplacian_residual)
from .clifford import build_clifford_system, check_fkm_pair, random_sphere_element, verify_clifford
from .errors import InvalidArgument, WrongCount
from .fkm import KINDS, MMINUS, MN, NMINUS, NPLUS, VMINUS, VPLUS, FkmGeometry, VarietyTag, membership_residual
from .morse import (calibrate_mean_curvature_sign, degeneracy_probe, find_critical_points_normal_geodesic,
                    find_critical_points_omega2, verify_critical_set_phi2, verify_level_mean_curvature,
                    verify_Vpm_spheres)
from .report import VerificationReport, reports_to_csv, reports_to_human, reports_to_json
from .spectra import (IDS, counterexample_ordering, make_spec, sample_frames, verify_eigen_identity,
                      verify_isoparametric_system, verify_tangency_claim, xi_identity_residuals)
from .varieties import frame_dimension, make_rng, normal_geodesic, sample_Mn, sample_sphere, sample_variety, tangent_frame

OUT_ENV = "FKMLAB_OUT"
DEFAULT_CONFIGS = ((1, 3), (2, 2), (3, 2))
ORDERING_EXTRA = ((1, 5),)
SUITES = ("clifford", "fkm", "spectra", "morse")
FORMATS = ("json", "csv", "human")

DEFAULT_TOLS = {
    "clifford.axioms": 1e-12,
    "fkm.spherical_gradient": 1e-9,
    "fkm.euler": 1e-12,
    "fkm.derivatives_fd": 1e-6,
    "fkm.symmetry": 1e-10,
    "fkm.normal_geodesic": 1e-9,
    "fkm.principal_curvatures": 1e-6,
    "varieties.frames": 1e-9,
    "eigen.phi1": 1e-6,
    "eigen.phi2": 1e-6,
    "eigen.phi3": 1e-4,
    "eigen.omega1": 1e-6,
    "eigen.omega2": 1e-6,
    "isoparametric.phi2": 1e-8,
    "isoparametric.omega1": 1e-8,
    "tangency.claim": 1e-9,
    "laplacian.routes": 1e-5,
    "spectra.xi_identities": 1e-9,
    "spectra.phi2_range": 1e-8,
    "critical.phi1": 1e-9,
    "critical.phi3": 1e-9,
    "critical.omega2": 1e-9,
    "critical.coincide": 1e-9,
    "hessian.closed_form": 1e-4,
    "focal.phi2_critical_set": 1e-10,
    "focal.V_spheres": 1e-10,
    "mean_curvature.phi2": None,  # 1e-6 absolute when m = 1, else 1e-5 relative
    "mean_curvature.omega1": None,
    "morse.degeneracy_onset": 1e-6,
}


@dataclass
class RunConfig:
    configs: list[tuple[int, int]] = field(default_factory=lambda: list(DEFAULT_CONFIGS))
    seed: int = 20240601
    samples: int = 200
    draws: int = 20
    levels: int = 50
    tol_overrides: dict[str, float] = field(default_factory=dict)
    out_dir: str = "reports"
    fmt: str = "json"

    def validate(self) -> None:
        for m, k in self.configs:
            check_fkm_pair(m, k)
        if self.samples < 10:
            raise InvalidArgument("samples per check must be at least 10")
        if self.draws < 1 or self.levels < 2:
            raise InvalidArgument("need at least one parameter draw and two levels")
        if self.fmt not in FORMATS:
            raise InvalidArgument(f"format must be one of {FORMATS}")
        unknown = set(self.tol_overrides) - set(DEFAULT_TOLS)
        if unknown:
            raise InvalidArgument(f"unknown check ids in tolerance overrides: {sorted(unknown)}")

    def tol(self, check: str, default: float | None = None) -> float:
        if check in self.tol_overrides:
            return self.tol_overrides[check]
        value = DEFAULT_TOLS[check]
        return default if value is None else value

    def header(self) -> dict:
        return {"tool": "fkmlab", "version": __version__,
                "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")}

    def describe(self) -> dict:
        return {"configs": [list(c) for c in self.configs], "seed": self.seed, "samples": self.samples,
                "draws": self.draws, "levels": self.levels, "tol_overrides": dict(sorted(self.tol_overrides.items()))}


def resolve_out_dir(explicit: str | None, fallback: str = "reports") -> str:
    """Explicit flag, then the environment override, then the fallback."""
    if explicit:
        return explicit
    return os.environ.get(OUT_ENV) or fallback


def _rng(cfg: RunConfig, geom: FkmGeometry, *labels: str) -> np.random.Generator:
    return make_rng(cfg.seed, f"{geom.m},{geom.sys.k}", *labels)


# --- suites ----------------------------------------------------------------------


def clifford_suite(geom: FkmGeometry, cfg: RunConfig) -> list[VerificationReport]:
    return [verify_clifford(geom.sys, cfg.tol("clifford.axioms"))]


def _fd_grad(fun, x, h):
    e = np.eye(x.size) * h
    return np.array([(fun(x + ei) - fun(x - ei)) / (2 * h) for ei in e])


def fkm_suite(geom: FkmGeometry, cfg: RunConfig) -> list[VerificationReport]:
    conf = geom.config()
    out = []

    rng = _rng(cfg, geom, "fkm.spherical_gradient")
    res = []
    for _ in range(max(1000, cfg.samples)):
        x = sample_sphere(geom, rng)
        F = geom.F(x)
        N = geom.grad_F(x) - 4.0 * F * x
        res.append(abs(float(N @ N) - 16.0 * (1.0 - F * F)))
    out.append(VerificationReport.from_residuals("fkm.spherical_gradient", res, cfg.tol("fkm.spherical_gradient"),
                                                 conf, cfg.seed))

    rng = _rng(cfg, geom, "fkm.euler")
    res = []
    for _ in range(cfg.samples):
        x = sample_sphere(geom, rng) * rng.uniform(0.5, 2.0)
        res.append(abs(float(geom.grad_F(x) @ x) - 4.0 * geom.F(x)) / max(1.0, float(x @ x) ** 2))
    out.append(VerificationReport.from_residuals("fkm.euler", res, cfg.tol("fkm.euler"), conf, cfg.seed))

    rng = _rng(cfg, geom, "fkm.derivatives_fd")
    g_res, h_res = [], []
    for _ in range(min(cfg.samples, 50)):
        x = sample_sphere(geom, rng)
        g_res.append(float(np.max(np.abs(_fd_grad(geom.F, x, 1e-5) - geom.grad_F(x)))))
        H_fd = np.column_stack([(geom.grad_F(x + e) - geom.grad_F(x - e)) / 2e-5 for e in np.eye(geom.dim) * 1e-5])
        h_res.append(float(np.max(np.abs(H_fd - geom.hess_F(x)))))
    out.append(VerificationReport.from_residuals(
        "fkm.derivatives_fd", g_res + h_res, cfg.tol("fkm.derivatives_fd"), conf, cfg.seed,
        details={"gradient_max": max(g_res), "hessian_max": max(h_res), "step": 1e-5}))

    rng = _rng(cfg, geom, "fkm.symmetry")
    res = []
    for _ in range(cfg.samples):
        x = sample_sphere(geom, rng)
        F = geom.F(x)
        res.append(abs(geom.F(-x) - F))
        res.extend(abs(geom.F(P @ x) - F) for P in geom.sys.matrices)
    out.append(VerificationReport.from_residuals("fkm.symmetry", res, cfg.tol("fkm.symmetry"), conf, cfg.seed))

    # f along the normal geodesic is cos(4(theta - t)), theta = arccos(f(x))/4
    rng = _rng(cfg, geom, "fkm.normal_geodesic")
    ts = np.linspace(-math.pi, math.pi, 33)
    res = []
    for _ in range(cfg.samples):
        x = sample_Mn(geom, rng) if rng.random() < 0.5 else sample_sphere(geom, rng)
        theta = math.acos(max(-1.0, min(1.0, geom.F(x)))) / 4.0
        pts = normal_geodesic(geom, x)(ts)
        vals = np.array([geom.F(p) for p in pts])
        res.append(float(np.max(np.abs(vals - np.cos(4.0 * (theta - ts))))))
    out.append(VerificationReport.from_residuals(
        "fkm.normal_geodesic", res, cfg.tol("fkm.normal_geodesic"), conf, cfg.seed,
        details={"theta1": geom.theta1, "c0": geom.c0}))

    out.append(principal_curvature_report(geom, cfg))
    out.append(frames_report(geom, cfg))
    return out


def principal_curvature_report(geom: FkmGeometry, cfg: RunConfig) -> VerificationReport:
    tol = cfg.tol("fkm.principal_curvatures")
    expected = expected_principal_curvatures(geom)
    rng = _rng(cfg, geom, "fkm.principal_curvatures")
    res, mult_ok = [], True
    trace_max, norm_max = 0.0, 0.0
    for _ in range(cfg.samples):
        fr = tangent_frame(geom, sample_Mn(geom, rng), MN)
        S = shape_matrix(geom, fr)
        w = np.sort(np.linalg.eigvalsh(0.5 * (S + S.T)))[::-1]
        res.append(float(np.max(np.abs(w - expected.raw))))
        pc = cluster_spectrum(w)
        mult_ok &= pc.multiplicities == expected.multiplicities
        tr = abs(float(np.trace(S)))
        nb = abs(float(np.sum(S * S)) - 3.0 * geom.n)
        trace_max, norm_max = max(trace_max, tr), max(norm_max, nb)
        res.extend([tr, nb])
    return VerificationReport.from_residuals(
        "fkm.principal_curvatures", res, tol, geom.config(), cfg.seed,
        details={"expected_values": expected.values, "expected_multiplicities": expected.multiplicities,
                 "trace_max": trace_max, "norm_sq_minus_3n_max": norm_max, "multiplicities_ok": bool(mult_ok)},
        extra_ok=bool(mult_ok))


def frames_report(geom: FkmGeometry, cfg: RunConfig) -> VerificationReport:
    rng = _rng(cfg, geom, "varieties.frames")
    P = random_sphere_element(geom.sys, rng)
    res, dims_ok, dims = [], True, {}
    for kind in KINDS:
        tag = VarietyTag(kind, P if kind in (NPLUS, NMINUS, VPLUS, VMINUS) else None)
        for _ in range(max(10, cfg.samples // 20)):
            x = sample_variety(geom, tag, rng)
            fr = tangent_frame(geom, x, tag)
            res.extend([membership_residual(geom, x, tag), fr.gram_residual()])
            dims[kind] = fr.dim
            dims_ok &= fr.dim == frame_dimension(geom, kind)
    return VerificationReport.from_residuals(
        "varieties.frames", res, cfg.tol("varieties.frames"), geom.config(), cfg.seed,
        details={"dims": dims}, extra_ok=bool(dims_ok))


def spectra_suite(geom: FkmGeometry, cfg: RunConfig) -> list[VerificationReport]:
    conf = geom.config()
    frames = {MN: sample_frames(geom, MN, cfg.samples, _rng(cfg, geom, "frames", MN)),
              MMINUS: sample_frames(geom, MMINUS, cfg.samples, _rng(cfg, geom, "frames", MMINUS))}
    specs = {fid: make_spec(geom, fid, _rng(cfg, geom, "spec", fid)) for fid in IDS}
    out = [verify_eigen_identity(specs[fid], frames[specs[fid].host], cfg.tol(f"eigen.{fid}"), seed=cfg.seed)
           for fid in IDS]
    for fid in ("phi2", "omega1"):
        out.append(verify_isoparametric_system(specs[fid], frames[specs[fid].host],
                                               cfg.tol(f"isoparametric.{fid}"), seed=cfg.seed))
    out.append(verify_tangency_claim(geom, frames[MMINUS], specs["omega1"].P, cfg.tol("tangency.claim"),
                                     seed=cfg.seed))

    # independent Laplacian routes: exact trace, cascade, great-circle finite differences
    res = []
    sub = max(10, cfg.samples // 10)
    for fid in ("phi1", "phi2", "omega1", "omega2"):
        fld = specs[fid].field()
        for fr in frames[specs[fid].host][:sub]:
            lap = intrinsic_laplacian(fld, fr)
            res.append(abs(lap - laplacian_cascade(fld, fr)))
            res.append(abs(lap - laplacian_fd(fld, fr)))
    rng = _rng(cfg, geom, "laplacian.sphere")
    for _ in range(sub):
        x = sample_sphere(geom, rng)
        res.append(two_laplacian_residual(quadratic_field("phi2", specs["phi2"].P.P), x))
        res.append(two_laplacian_residual(linear_field("phi1", specs["phi1"].q), x))
    out.append(VerificationReport.from_residuals("laplacian.routes", res, cfg.tol("laplacian.routes"), conf,
                                                 cfg.seed))

    rng = _rng(cfg, geom, "spectra.xi_identities")
    P = specs["phi2"].P.P
    res = []
    for i in range(cfg.samples):
        x = frames[MN][i].x if i % 2 else sample_sphere(geom, rng)
        res.extend(xi_identity_residuals(geom, P, x))
    out.append(VerificationReport.from_residuals("spectra.xi_identities", res, cfg.tol("spectra.xi_identities"),
                                                 conf, cfg.seed))

    tmax = geom.phi2_max
    over = [max(0.0, abs(float(fr.x @ P @ fr.x)) - tmax) for fr in frames[MN]]
    out.append(VerificationReport.from_residuals(
        "spectra.phi2_range", over, cfg.tol("spectra.phi2_range"), conf, cfg.seed,
        details={"bound": tmax, "max_abs_phi2": max(abs(float(fr.x @ P @ fr.x)) for fr in frames[MN])}))
    return out


def count_report(ident: str, geom: FkmGeometry, cfg: RunConfig, draws: list, expected: int) -> VerificationReport:
    grads, counts, degenerate, indices = [], [], 0, []
    for pts in draws:
        counts.append(len(pts) if isinstance(pts, list) else pts.count)
        if isinstance(pts, list):
            grads.extend(p.gradient_norm for p in pts)
            degenerate += sum(p.degenerate for p in pts)
            indices.append(sorted(p.morse_index for p in pts))
    ok = all(c == expected for c in counts) and degenerate == 0
    return VerificationReport.from_residuals(
        ident, grads or [math.inf], cfg.tol(ident), geom.config(), cfg.seed,
        details={"expected_count": expected, "counts": counts, "degenerate": degenerate,
                 "morse_indices": indices}, extra_ok=ok)


class _Miss:
    def __init__(self, count):
        self.count = count


def critical_draws(geom: FkmGeometry, cfg: RunConfig, fid: str, draws: int | None = None):
    """Critical points for ``draws`` independent generic parameters; failures kept as counts."""
    out = []
    for d in range(cfg.draws if draws is None else draws):
        spec = make_spec(geom, fid, _rng(cfg, geom, "critical", fid, str(d)))
        try:
            if fid == "omega2":
                out.append((spec, find_critical_points_omega2(geom, spec.q)))
            else:
                out.append((spec, find_critical_points_normal_geodesic(geom, fid, spec.q)))
        except WrongCount as exc:
            out.append((spec, _Miss(len(exc.points))))
    return out


def morse_suite(geom: FkmGeometry, cfg: RunConfig, sign: int) -> list[VerificationReport]:
    conf = geom.config()
    out = []
    results = {}
    for fid, expected in (("phi1", 8), ("phi3", 8), ("omega2", 4)):
        results[fid] = critical_draws(geom, cfg, fid)
        out.append(count_report(f"critical.{fid}", geom, cfg, [r for _, r in results[fid]], expected))

    rel, signs = [], {}
    for fid, runs in results.items():
        for _, pts in runs:
            if isinstance(pts, list):
                rel.extend(p.closed_form_rel_error for p in pts)
                signs.setdefault(fid, set()).update(p.closed_form_sign for p in pts)
    out.append(VerificationReport.from_residuals(
        "hessian.closed_form", rel or [math.inf], cfg.tol("hessian.closed_form"), conf, cfg.seed,
        details={"closed_form_sign": {k: sorted(v) for k, v in signs.items()}, "step": 1e-4}))

    # phi1 and phi3 share q1 per draw, so their critical sets must coincide
    res = []
    for d in range(cfg.draws):
        spec = make_spec(geom, "phi1", _rng(cfg, geom, "coincide", str(d)))
        try:
            a = find_critical_points_normal_geodesic(geom, "phi1", spec.q)
            b = find_critical_points_normal_geodesic(geom, "phi3", spec.q)
        except WrongCount:
            res.append(math.inf)
            continue
        for p in a:
            res.append(min(float(np.linalg.norm(p.x - r.x)) for r in b))
            res.append(p.span_residual)
    out.append(VerificationReport.from_residuals("critical.coincide", res, cfg.tol("critical.coincide"), conf,
                                                 cfg.seed))

    P = random_sphere_element(geom.sys, _rng(cfg, geom, "focal.P"))
    focal_samples = max(10, cfg.samples // 4)
    out.append(verify_critical_set_phi2(geom, P, focal_samples, _rng(cfg, geom, "focal.phi2"),
                                        cfg.tol("focal.phi2_critical_set")))
    out.append(verify_Vpm_spheres(geom, P, focal_samples, _rng(cfg, geom, "focal.V"), cfg.tol("focal.V_spheres")))
    default_mc = 1e-6 if geom.m == 1 else 1e-5
    for fid in ("phi2", "omega1"):
        tol = cfg.tol(f"mean_curvature.{fid}", default_mc)
        out.append(verify_level_mean_curvature(geom, fid, P, cfg.levels, _rng(cfg, geom, "mc", fid), sign,
                                               tol_improper=tol, tol_rel=tol))

    probe = degeneracy_probe(geom, _rng(cfg, geom, "degeneracy"))
    tol = cfg.tol("morse.degeneracy_onset")
    out.append(VerificationReport.from_residuals(
        "morse.degeneracy_onset", [probe["focal_min_abs_diagonal"]], tol, conf, cfg.seed, details=probe,
        extra_ok=probe["hypersurface_min_abs_diagonal"] > tol))
    return out


# --- orchestration -----------------------------------------------------------------


@dataclass
class CampaignResult:
    reports: dict[str, list[VerificationReport]]
    ordering: list[dict]
    mean_curvature_sign: int
    files: list[str]

    @property
    def failures(self) -> list[str]:
        return [f"{r.identity_id}@m={r.config.get('m')},k={r.config.get('k')}"
                for reps in self.reports.values() for r in reps if not r.passed]

    @property
    def passed(self) -> bool:
        return not self.failures


def run_suites(cfg: RunConfig, suites=SUITES) -> CampaignResult:
    cfg.validate()
    sign = calibrate_mean_curvature_sign(make_rng(cfg.seed, "mean_curvature_sign"))
    reports: dict[str, list[VerificationReport]] = {s: [] for s in suites}
    for m, k in cfg.configs:
        geom = FkmGeometry(build_clifford_system(m, k))
        if "clifford" in reports:
            reports["clifford"] += clifford_suite(geom, cfg)
        if "fkm" in reports:
            reports["fkm"] += fkm_suite(geom, cfg)
        if "spectra" in reports:
            reports["spectra"] += spectra_suite(geom, cfg)
        if "morse" in reports:
            reports["morse"] += morse_suite(geom, cfg, sign)
    pairs = list(dict.fromkeys(list(cfg.configs) + list(ORDERING_EXTRA)))
    ordering = [counterexample_ordering(m, k) for m, k in pairs]
    return CampaignResult(reports, ordering, sign, [])


def write_reports(result: CampaignResult, cfg: RunConfig) -> list[str]:
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    ext = {"json": "json", "csv": "csv", "human": "txt"}[cfg.fmt]
    files = []
    for suite, reps in result.reports.items():
        path = out / f"{suite}.{ext}"
        if cfg.fmt == "json":
            text = reports_to_json(reps, header=cfg.header(), suite=suite, run=cfg.describe(),
                                   mean_curvature_sign=result.mean_curvature_sign)
        elif cfg.fmt == "csv":
            text = csv_with_config(reps)
        else:
            text = human_by_config(reps, suite)
        path.write_text(text)
        files.append(str(path))
    path = out / f"ordering.{'json' if cfg.fmt == 'json' else 'txt'}"
    if cfg.fmt == "json":
        path.write_text(json.dumps({"header": cfg.header(), "ordering": result.ordering}, indent=2))
    else:
        path.write_text("".join(ordering_line(o) + "\n" for o in result.ordering))
    files.append(str(path))
    result.files = files
    return files


def ordering_line(o: dict) -> str:
    return (f"(m,k)=({o['m']},{o['k']}) l={o['l']} n={o['n']}: 4m={4 * o['m']} vs l+m-1={o['l'] + o['m'] - 1}"
            f" -> reversed={o['omega_order_reversed']}")


def csv_with_config(reps: list[VerificationReport]) -> str:
    body = reports_to_csv(reps).splitlines()
    lines = ["m,k," + body[0]]
    lines += [f"{r.config.get('m')},{r.config.get('k')},{row}" for r, row in zip(reps, body[1:])]
    return "\n".join(lines) + "\n"


def human_by_config(reps: list[VerificationReport], suite: str) -> str:
    blocks, seen = [], []
    for r in reps:
        key = (r.config.get("m"), r.config.get("k"))
        if key not in seen:
            seen.append(key)
    for key in seen:
        sub = [r for r in reps if (r.config.get("m"), r.config.get("k")) == key]
        blocks.append(reports_to_human(sub, title=f"[{suite}] (m,k)={key}"))
    return "\n".join(blocks)


def run_campaign(cfg: RunConfig) -> tuple[int, CampaignResult]:
    """Run and write every suite; exit status 0 iff every check passed."""
    result = run_suites(cfg)
    write_reports(result, cfg)
    return (0 if result.passed else 1), result


# --- key-value config files ----------------------------------------------------------


def parse_config_text(text: str) -> RunConfig:
    """Parse ``key = value`` lines; ``#`` starts a comment.

    Keys mirror the CLI flags: configs (``1,3; 2,2``), seed, samples, draws,
    levels, out, format, and ``tol.<check id>``.
    """
    cfg = RunConfig()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidArgument(f"config line {lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        try:
            if key == "configs":
                cfg.configs = [tuple(int(v) for v in pair.split(",")) for pair in value.split(";") if pair.strip()]
            elif key in ("seed", "samples", "draws", "levels"):
                setattr(cfg, key, int(value))
            elif key == "out":
                cfg.out_dir = value
            elif key == "format":
                cfg.fmt = value
            elif key.startswith("tol."):
                cfg.tol_overrides[key[4:]] = float(value)
            else:
                raise InvalidArgument(f"config line {lineno}: unknown key {key!r}")
        except ValueError as exc:
            if isinstance(exc, InvalidArgument):
                raise
            raise InvalidArgument(f"config line {lineno}: {exc}") from exc
    return cfg


def load_config(path) -> RunConfig:
    return parse_config_text(Path(path).read_text())
