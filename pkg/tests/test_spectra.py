import math

import numpy as np
import pytest

from fkmlab.calculus import tangential_gradient
from fkmlab.clifford import random_sphere_element, sphere_element
from fkmlab.errors import InvalidArgument, WrongVariety
from fkmlab.fkm import MMINUS, MN, FkmGeometry
from fkmlab.spectra import (IDS, EigenfunctionSpec, counterexample_ordering, draw_generic_point, eval_eigenfunction,
                            genericity_margin, make_spec, sample_frames, tangency_residuals, verify_eigen_identity,
                            verify_isoparametric_system, verify_tangency_claim, xi_identity_residuals)
from fkmlab.varieties import eigenspace_vector, h_map, make_rng, sample_Mn, sample_Mplus, sample_sphere, tangent_frame


@pytest.fixture(scope="module")
def frames13(g13):
    return {MN: sample_frames(g13, MN, 40, make_rng(1, "f", MN)),
            MMINUS: sample_frames(g13, MMINUS, 40, make_rng(1, "f", MMINUS))}


def test_eigenvalues_13(g13):
    lam = {fid: make_spec(g13, fid, make_rng(0, fid)).eigenvalue for fid in IDS}
    assert lam == {"phi1": 4, "phi2": 8, "phi3": 12, "omega1": 4, "omega2": 3}


@pytest.mark.parametrize("fid", IDS)
def test_eigen_identities_13(g13, frames13, fid):
    spec = make_spec(g13, fid, make_rng(2, fid))
    rep = verify_eigen_identity(spec, frames13[spec.host], 1e-4 if fid == "phi3" else 1e-6)
    assert rep.passed, rep.max_residual


def test_wrong_eigenvalue_fails(g13, frames13):
    spec = make_spec(g13, "phi1", make_rng(3, "phi1"))
    assert not verify_eigen_identity(spec, frames13[MN], 1e-6, eigenvalue=g13.n + 1).passed


@pytest.mark.parametrize("mk", [(2, 2), (3, 2)])
def test_isoparametric_systems(geoms, mk):
    g = geoms[mk]
    for fid, host in (("phi2", MN), ("omega1", MMINUS)):
        spec = make_spec(g, fid, make_rng(4, fid))
        rep = verify_isoparametric_system(spec, sample_frames(g, host, 30, make_rng(4, host)), 1e-8)
        assert rep.passed, rep.details


def test_phi2_gradient_line_22(g22):
    # |grad phi2|^2 = 4(1 - (3/2) phi2^2) when c0 = -1/3
    spec = make_spec(g22, "phi2", make_rng(5, "p"))
    fld = spec.field()
    for fr in sample_frames(g22, MN, 20, make_rng(5, "fr")):
        u = fld.value(fr.x)
        gr = tangential_gradient(fld, fr)
        assert abs(gr @ gr - 4 * (1 - 1.5 * u * u)) < 1e-8


def test_isoparametric_rejects_other_functions(g13):
    with pytest.raises(InvalidArgument):
        verify_isoparametric_system(make_spec(g13, "phi1", 1), [], 1e-8)


def test_omega1_critical_on_V(g22):
    P = random_sphere_element(g22.sys, make_rng(6, "V"))
    x = eigenspace_vector(P.P, 1, make_rng(6, "x"))
    spec = EigenfunctionSpec("omega1", g22, P=P)
    assert eval_eigenfunction(spec, x) == pytest.approx(1.0, abs=1e-14)
    assert np.linalg.norm(tangential_gradient(spec.field(), tangent_frame(g22, x, MMINUS))) < 1e-12


def test_eval_examples(g22):
    rng = make_rng(7, "eval")
    P = random_sphere_element(g22.sys, rng)
    y = h_map(g22, sample_Mplus(g22, rng), P.P, 1)
    assert eval_eigenfunction(EigenfunctionSpec("phi2", g22, P=P), y) == pytest.approx(math.sqrt(2 / 3), abs=1e-10)
    x = sample_Mn(g22, rng)
    q = rng.standard_normal(8)
    q -= (q @ x) * x
    q /= np.linalg.norm(q)
    assert abs(eval_eigenfunction(EigenfunctionSpec("phi1", g22, q=q), x)) < 1e-15
    with pytest.raises(WrongVariety):
        eval_eigenfunction(EigenfunctionSpec("omega1", g22, P=P), x)


def test_spec_validation(g13):
    with pytest.raises(InvalidArgument):
        EigenfunctionSpec("phi4", g13, q=np.ones(6))
    with pytest.raises(InvalidArgument):
        EigenfunctionSpec("phi2", g13)
    with pytest.raises(InvalidArgument):
        EigenfunctionSpec("omega2", g13)


def test_generic_points_avoid_varieties(g22):
    rng = make_rng(8, "gen")
    for _ in range(20):
        q = draw_generic_point(g22, rng)
        assert genericity_margin(g22, q, [1.0, -1.0, g22.c0]) > 1e-3


def test_tangency_claim(g22):
    frames = sample_frames(g22, MMINUS, 50, make_rng(9, "t"))
    P = random_sphere_element(g22.sys, make_rng(9, "P"))
    assert verify_tangency_claim(g22, frames, P, 1e-9).passed
    # on V_+ the vector y vanishes identically
    x = eigenspace_vector(P.P, 1, make_rng(9, "v"))
    y = P.P @ x - (x @ P.P @ x) * x
    assert np.max(np.abs(y)) < 1e-15
    # with P equal to the point's own Clifford element, omega1 = 1 and y = 0
    _, a = g22.quad_forms(x)
    own = sphere_element(g22.sys, a)
    assert max(tangency_residuals(g22, tangent_frame(g22, x, MMINUS), own.P)) < 1e-14


def test_xi_identities(geoms):
    for g in geoms.values():
        rng = make_rng(10, "xi")
        P = random_sphere_element(g.sys, rng).P
        for _ in range(50):
            x = sample_sphere(g, rng) if rng.random() < 0.5 else sample_Mn(g, rng)
            first, second = xi_identity_residuals(g, P, x)
            assert first < 1e-8 and second < 1e-8


def test_phi2_range(g32):
    P = random_sphere_element(g32.sys, make_rng(11, "r")).P
    rng = make_rng(11, "pts")
    vals = [abs(float(x @ P @ x)) for x in (sample_Mn(g32, rng) for _ in range(2000))]
    assert max(vals) <= g32.phi2_max + 1e-8


def test_counterexample_ordering():
    assert counterexample_ordering(1, 5)["omega_order_reversed"] is True
    assert counterexample_ordering(1, 3)["omega_order_reversed"] is False
    row = counterexample_ordering(2, 2)
    assert row["Mn"][0] == (6, "8 points") and row["Mminus"][1] == (5, "4 points")
    assert FkmGeometry.from_mk(1, 5).dim_Mminus == 5
