import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fkmlab.errors import FocalDegeneracy, InvalidArgument
from fkmlab.fkm import MMINUS, MN, MPLUS, FkmGeometry, membership, membership_residual
from fkmlab.varieties import make_rng, sample_sphere


def e(i, d):
    v = np.zeros(d)
    v[i] = 1.0
    return v


def test_constants():
    g = FkmGeometry.from_mk(1, 3)
    assert (g.n, g.m_plus, g.m_minus, g.c0, g.g) == (4, 1, 1, 0.0, 4)
    assert FkmGeometry.from_mk(2, 2).c0 == pytest.approx(-1.0 / 3.0, abs=1e-15)
    assert FkmGeometry.from_mk(3, 2).c0 == pytest.approx(1.0 / 7.0, abs=1e-15)
    g15 = FkmGeometry.from_mk(1, 5)
    assert (g15.l, g15.n, g15.c0) == (5, 8, 0.5)


def test_F_examples(g13):
    assert g13.F(e(0, 6)) == -1.0
    assert g13.F((e(0, 6) + e(4, 6)) / math.sqrt(2)) == pytest.approx(1.0, abs=1e-15)
    assert g13.F(np.zeros(6)) == 0.0


def test_membership_examples(g13):
    assert membership_residual(g13, e(0, 6), MMINUS) == 0.0
    x = (e(0, 6) + e(4, 6)) / math.sqrt(2)
    assert not membership(g13, x, MN).passed
    assert membership(g13, x, MPLUS).passed
    with pytest.raises(InvalidArgument):
        membership_residual(g13, x, "Torus")


@pytest.mark.parametrize("mk", [(1, 3), (2, 2), (3, 2)])
def test_derivatives_against_finite_differences(geoms, mk):
    g = geoms[mk]
    rng = make_rng(5, "fd")
    for _ in range(5):
        x = rng.standard_normal(g.dim)
        h = 1e-5
        E = np.eye(g.dim) * h
        grad_fd = np.array([(g.F(x + d) - g.F(x - d)) / (2 * h) for d in E])
        hess_fd = np.column_stack([(g.grad_F(x + d) - g.grad_F(x - d)) / (2 * h) for d in E])
        scale = max(1.0, float(x @ x) ** 1.5)
        assert np.max(np.abs(grad_fd - g.grad_F(x))) / scale < 1e-8
        assert np.max(np.abs(hess_fd - g.hess_F(x))) / scale < 1e-6


def test_gradient_at_e1(g13):
    # <P_0 e1, e1> = 1 and P_0 e1 = e1, so grad F = 4 e1 - 8 e1
    assert np.allclose(g13.grad_F(e(0, 6)), -4.0 * e(0, 6), atol=0)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([(1, 3), (2, 2), (3, 2)]), st.floats(0.3, 3.0))
def test_euler_and_symmetries(seed, mk, scale):
    g = FkmGeometry.from_mk(*mk)
    x = sample_sphere(g, np.random.default_rng(seed)) * scale
    F = g.F(x)
    assert abs(float(g.grad_F(x) @ x) - 4.0 * F) < 1e-12 * max(1.0, scale**4)
    assert abs(g.F(-x) - F) < 1e-12 * max(1.0, scale**4)
    for P in g.sys.matrices:
        assert abs(g.F(P @ x) - F) < 1e-10 * max(1.0, scale**4)


def test_spherical_gradient_identity(geoms):
    for g in geoms.values():
        rng = make_rng(11, "sg")
        for _ in range(300):
            x = sample_sphere(g, rng)
            F = g.F(x)
            N = g.spherical_grad(x)
            assert abs(float(N @ N) - 16.0 * (1.0 - F * F)) < 1e-9
            assert -1.0 - 1e-14 <= F <= 1.0 + 1e-14


def test_xi_is_unit_and_tangent(g22):
    rng = make_rng(3, "xi")
    for _ in range(50):
        x = sample_sphere(g22, rng)
        xi = g22.xi(x)
        assert abs(np.linalg.norm(xi) - 1.0) < 1e-10
        assert abs(xi @ x) < 1e-10


def test_xi_errors(g13):
    with pytest.raises(FocalDegeneracy):
        g13.xi((e(0, 6) + e(4, 6)) / math.sqrt(2))
    with pytest.raises(FocalDegeneracy):
        g13.xi(e(0, 6))
    with pytest.raises(InvalidArgument):
        g13.xi(2.0 * e(1, 6))


def test_xi_jacobian_against_finite_differences(g32):
    rng = make_rng(4, "jac")
    x = sample_sphere(g32, rng)

    def unit_field(y):
        N = g32.grad_F(y) - 4.0 * g32.F(y) * y
        return N / np.linalg.norm(N)

    h = 1e-6
    J = np.column_stack([(unit_field(x + d) - unit_field(x - d)) / (2 * h) for d in np.eye(g32.dim) * h])
    assert np.max(np.abs(J - g32.xi_jacobian(x))) < 1e-7
