import json
import math

from fkmlab.report import VerificationReport, log_histogram, reports_to_csv, reports_to_human, reports_to_json


def test_pass_requires_every_residual_below_tol():
    assert VerificationReport.from_residuals("x", [1e-13, 2e-13], 1e-12).passed
    assert not VerificationReport.from_residuals("x", [1e-13, 1e-12], 1e-12).passed
    assert not VerificationReport.from_residuals("x", [1e-13], 1e-12, extra_ok=False).passed
    assert not VerificationReport.from_residuals("x", [math.nan], 1.0).passed


def test_summary_fields():
    r = VerificationReport.from_residuals("id", [1e-3, -3e-3], 1e-2, config={"m": 1}, seed=7)
    assert r.samples == 2 and r.max_residual == 3e-3 and r.mean_residual == 2e-3
    d = r.to_dict()
    assert d["pass"] is True and "passed" not in d
    assert VerificationReport.from_dict(d) == r


def test_histogram_bins():
    h = log_histogram([0.0, 1e-20, 5e-15, 0.5])
    assert sum(h) == 4 and h[0] == 2 and h[-1] == 1


def test_serializations():
    reps = [VerificationReport.from_residuals("a.b", [1e-9], 1e-8, config={"m": 2, "k": 2})]
    doc = json.loads(reports_to_json(reps, header={"timestamp": "now"}, suite="s"))
    assert doc["header"]["timestamp"] == "now" and doc["suite"] == "s"
    assert set(doc["reports"][0]) >= {"identity_id", "config", "seed", "samples", "max_residual",
                                      "mean_residual", "tol", "pass"}
    assert reports_to_csv(reps).splitlines()[1].startswith("a.b,1,")
    table = reports_to_human(reps)
    assert "check" in table and "PASS" in table
