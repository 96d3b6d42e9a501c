import math

import numpy as np
import pytest

from fkmlab.calculus import (ClusteringAmbiguity, cluster_spectrum, expected_principal_curvatures, fkm_field,
                             intrinsic_laplacian, laplacian_cascade, laplacian_fd, level_mean_curvature,
                             linear_field, mean_curvature_closed_form, normal_height_field,
                             principal_curvatures, quadratic_field, shape_matrix, shape_operator,
                             tangential_gradient, two_laplacian_residual)
from fkmlab.clifford import random_sphere_element
from fkmlab.errors import FocalDegeneracy
from fkmlab.fkm import MMINUS, MN, FkmGeometry
from fkmlab.spectra import phi2_gradient_closed_form
from fkmlab.varieties import (h_map, make_rng, project_to_constraints, sample_Mminus, sample_Mn, sample_Mplus,
                              sample_sphere, tangent_frame)


def mn_frames(g, count, seed):
    rng = make_rng(seed, "calc")
    return [tangent_frame(g, sample_Mn(g, rng), MN) for _ in range(count)]


def test_tangential_gradient_of_linear_field(g22):
    q = sample_sphere(g22, 1)
    fld = linear_field("phi1", q)
    for fr in mn_frames(g22, 10, 1):
        grad = tangential_gradient(fld, fr)
        x, xi = fr.x, fr.normal
        assert np.max(np.abs(grad - (q - (q @ x) * x - (q @ xi) * xi))) < 1e-12
        assert np.max(np.abs(fr.basis.T @ grad - fr.basis.T @ q)) < 1e-12
        assert abs(grad @ x) < 1e-10 and abs(grad @ xi) < 1e-10


def test_phi2_gradient_closed_form(geoms):
    for g in geoms.values():
        P = random_sphere_element(g.sys, make_rng(2, "P")).P
        fld = quadratic_field("phi2", P)
        for fr in mn_frames(g, 10, 2):
            assert np.max(np.abs(tangential_gradient(fld, fr) - phi2_gradient_closed_form(g, P, fr.x))) < 1e-9


def test_constant_field_has_zero_gradient(g13):
    fld = linear_field("zero", np.zeros(6))
    fr = mn_frames(g13, 1, 3)[0]
    assert np.all(tangential_gradient(fld, fr) == 0)


@pytest.mark.parametrize("mk", [(1, 3), (2, 2), (3, 2)])
def test_laplacian_routes_agree(geoms, mk):
    g = geoms[mk]
    rng = make_rng(4, "routes")
    q = sample_sphere(g, rng)
    P = random_sphere_element(g.sys, rng).P
    for fld in (linear_field("phi1", q), quadratic_field("phi2", P)):
        for fr in mn_frames(g, 5, 4):
            lap = intrinsic_laplacian(fld, fr)
            assert abs(lap - laplacian_cascade(fld, fr)) < 1e-10
            assert abs(lap - laplacian_fd(fld, fr)) < 1e-4
    fld = quadratic_field("omega1", P, MMINUS)
    for _ in range(5):
        fr = tangent_frame(g, sample_Mminus(g, rng)[0], MMINUS)
        lap = intrinsic_laplacian(fld, fr)
        assert abs(lap - laplacian_cascade(fld, fr)) < 1e-10
        assert abs(lap - laplacian_fd(fld, fr)) < 1e-4


def test_two_laplacian_relation(g32):
    rng = make_rng(5, "two")
    q = sample_sphere(g32, rng)
    P = random_sphere_element(g32.sys, rng).P
    fields = [linear_field("phi1", q), quadratic_field("phi2", P), fkm_field(g32)]
    for _ in range(200):
        x = sample_sphere(g32, rng)
        for fld in fields:
            assert two_laplacian_residual(fld, x) < 1e-8


def test_normal_height_hessian_is_symmetric(g22):
    fld = normal_height_field("phi3", g22, sample_sphere(g22, 6))
    x = sample_Mn(g22, 6)
    H = fld.hess(x)
    assert np.array_equal(H, H.T)


def test_principal_curvatures_13(g13):
    fr = mn_frames(g13, 1, 7)[0]
    pc = principal_curvatures(g13, fr)
    assert pc.multiplicities == [1, 1, 1, 1]
    expected = [1 + math.sqrt(2), math.sqrt(2) - 1, 1 - math.sqrt(2), -1 - math.sqrt(2)]
    assert np.max(np.abs(np.array(pc.values) - expected)) < 1e-10


def test_principal_curvature_multiplicities(g22, g32):
    assert principal_curvatures(g22, mn_frames(g22, 1, 8)[0]).multiplicities == [2, 1, 2, 1]
    assert principal_curvatures(g32, mn_frames(g32, 1, 8)[0]).multiplicities == [3, 4, 3, 4]


def test_theta1_fit_from_spectrum(geoms):
    # recover theta1 from the largest principal curvature and compare with arccos(c0)/4
    for g in geoms.values():
        pc = principal_curvatures(g, mn_frames(g, 1, 9)[0])
        theta = math.atan2(1.0, pc.values[0])
        assert abs(theta - math.acos(g.c0) / 4) < 1e-10


@pytest.mark.parametrize("mk", [(1, 3), (2, 2), (3, 2)])
def test_shape_operator_invariants(geoms, mk):
    g = geoms[mk]
    spectra = []
    for fr in mn_frames(g, 50, 10):
        S = shape_matrix(g, fr)
        assert np.max(np.abs(S - S.T)) < 1e-8
        assert abs(np.trace(S)) < 1e-8
        assert abs(np.sum(S * S) - 3 * g.n) < 1e-6
        spectra.append(np.sort(np.linalg.eigvalsh(S)))
        v = fr.basis[:, 0]
        Av = shape_operator(g, fr, v)
        assert abs(Av @ fr.x) < 1e-12 and abs(Av @ fr.normal) < 1e-10
    spectra = np.array(spectra)
    assert np.max(spectra.max(axis=0) - spectra.min(axis=0)) < 1e-7
    assert np.max(np.abs(spectra[0][::-1] - expected_principal_curvatures(g).raw)) < 1e-6


def test_clustering():
    pc = cluster_spectrum(np.array([2.0, 1.0, 1.0 + 1e-12, -1.0]))
    assert pc.multiplicities == [1, 2, 1]
    with pytest.raises(ClusteringAmbiguity):
        cluster_spectrum(np.array([1.0, 1.0 + 1e-7]))


def test_mean_curvature_closed_form_values(g22):
    for t in (0.1, 0.5, -0.7):
        assert mean_curvature_closed_form(g22, t) == pytest.approx(3 * t / math.sqrt(1 - 1.5 * t * t), rel=1e-14)
    assert mean_curvature_closed_form(g22, 0.0) == 0.0
    assert mean_curvature_closed_form(FkmGeometry.from_mk(1, 3), 0.4) == 0.0


def test_level_mean_curvature(g22, g13):
    rng = make_rng(11, "mc")
    P = random_sphere_element(g22.sys, rng).P
    for t in (-0.6, 0.0, 0.25, 0.7):
        x = project_to_constraints(g22, sample_Mn(g22, rng), P, t)
        h = level_mean_curvature(g22, tangent_frame(g22, x, MN), P)
        if t == 0.0:
            assert abs(h) < 1e-10
        else:
            assert abs(h - mean_curvature_closed_form(g22, t)) / abs(mean_curvature_closed_form(g22, t)) < 1e-5
    P13 = random_sphere_element(g13.sys, rng).P
    x = project_to_constraints(g13, sample_Mn(g13, rng), P13, 0.5)
    assert abs(level_mean_curvature(g13, tangent_frame(g13, x, MN), P13)) < 1e-6


def test_level_mean_curvature_rejects_focal_leaf(g22):
    rng = make_rng(12, "focal")
    P = random_sphere_element(g22.sys, rng).P
    y = h_map(g22, sample_Mplus(g22, rng), P, 1)
    with pytest.raises(FocalDegeneracy):
        level_mean_curvature(g22, tangent_frame(g22, y, MN), P)
