"""Verification reports and their JSON/CSV/human serializations."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Any, Iterable, Sequence

import numpy as np

# log10 residual histogram edges; residuals below 1e-16 land in the first bin
HIST_EDGES = tuple(range(-17, 1))


@dataclass
class VerificationReport:
    identity_id: str
    samples: int
    max_residual: float
    mean_residual: float
    tol: float
    passed: bool
    config: dict[str, Any] = field(default_factory=dict)
    seed: int | None = None
    histogram: list[int] = field(default_factory=list)
    details: dict[str, Any] = field(default_factory=dict)

    @classmethod
    def from_residuals(
        cls,
        identity_id: str,
        residuals: Iterable[float],
        tol: float,
        config: dict | None = None,
        seed: int | None = None,
        details: dict | None = None,
        extra_ok: bool = True,
    ) -> "VerificationReport":
        """Summarize residuals; the check passes iff every residual is < tol.

        ``extra_ok`` lets a caller fold a non-residual condition (a count, a
        rank) into the verdict.
        """
        r = np.abs(np.asarray(list(residuals), dtype=float)).ravel()
        if r.size == 0:
            raise ValueError(f"{identity_id}: no residuals")
        finite = bool(np.all(np.isfinite(r)))
        mx = float(np.max(r)) if finite else math.inf
        mean = float(np.mean(r)) if finite else math.inf
        return cls(
            identity_id=identity_id,
            samples=int(r.size),
            max_residual=mx,
            mean_residual=mean,
            tol=float(tol),
            passed=bool(finite and mx < tol and extra_ok),
            config=dict(config or {}),
            seed=seed,
            histogram=log_histogram(r),
            details=dict(details or {}),
        )

    def to_dict(self) -> dict:
        d = asdict(self)
        d["pass"] = d.pop("passed")
        return _jsonable(d)

    @classmethod
    def from_dict(cls, d: dict) -> "VerificationReport":
        d = dict(d)
        d["passed"] = d.pop("pass")
        return cls(**d)


def log_histogram(residuals: np.ndarray) -> list[int]:
    r = np.asarray(residuals, dtype=float)
    with np.errstate(divide="ignore"):
        lg = np.log10(np.where(r > 0, r, 1e-300))
    lg = np.clip(lg, HIST_EDGES[0], HIST_EDGES[-1] - 1e-9)
    counts, _ = np.histogram(lg, bins=HIST_EDGES)
    return [int(c) for c in counts]


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isnan(v) or math.isinf(v):
            return repr(v)
        return v
    return obj


def reports_to_json(reports: Sequence[VerificationReport], header: dict | None = None, **meta) -> str:
    """Serialize a suite; volatile fields (timestamps) belong in ``header`` only."""
    doc = {"header": _jsonable(header or {}), **_jsonable(meta),
           "reports": [r.to_dict() for r in reports]}
    return json.dumps(doc, indent=2, sort_keys=False)


def reports_to_csv(reports: Sequence[VerificationReport]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["identity_id", "samples", "max_residual", "mean_residual", "tol", "pass"])
    for r in reports:
        w.writerow([r.identity_id, r.samples, f"{r.max_residual:.6e}",
                    f"{r.mean_residual:.6e}", f"{r.tol:.1e}", "PASS" if r.passed else "FAIL"])
    return buf.getvalue()


def reports_to_human(reports: Sequence[VerificationReport], title: str = "") -> str:
    width = max([len(r.identity_id) for r in reports] + [8])
    lines = []
    if title:
        lines.append(title)
    lines.append(f"{'check'.ljust(width)}  {'residual':>11}  {'tol':>8}  verdict")
    for r in reports:
        lines.append(f"{r.identity_id.ljust(width)}  {r.max_residual:11.3e}  "
                     f"{r.tol:8.1e}  {'PASS' if r.passed else 'FAIL'}")
    return "\n".join(lines) + "\n"
