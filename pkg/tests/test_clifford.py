import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fkmlab.clifford import (CliffordSystem, build_clifford_system, check_fkm_pair, clifford_residuals, delta,
                             random_sphere_element, sphere_element, verify_clifford)
from fkmlab.errors import InvalidArgument, InvalidFkmPair


@pytest.mark.parametrize("m, expected", [(1, 1), (2, 2), (3, 4), (4, 4), (5, 8), (8, 8), (9, 16), (11, 64), (17, 256)])
def test_delta_table(m, expected):
    assert delta(m) == expected


def test_delta_rejects_zero():
    with pytest.raises(InvalidArgument):
        delta(0)


def test_m1_system_is_the_standard_pair():
    s = build_clifford_system(1, 3)
    I = np.eye(3)
    Z = np.zeros((3, 3))
    assert np.array_equal(s.matrices[0], np.block([[I, Z], [Z, -I]]))
    assert np.array_equal(s.matrices[1], np.block([[Z, I], [I, Z]]))
    assert s.l == 3 and s.dim == 6


@pytest.mark.parametrize("m", range(1, 11))
def test_axioms_hold_exactly(m):
    k = 1
    while k * delta(m) - m - 1 <= 0:
        k += 1
    s = build_clifford_system(m, k)
    res = clifford_residuals(s)
    assert max(res.values()) < 1e-12
    assert verify_clifford(s).passed


def test_entries_are_exact_signs():
    for m, k in [(2, 2), (3, 2), (6, 1)]:
        vals = np.unique(build_clifford_system(m, k).stack)
        assert set(vals) <= {-1.0, 0.0, 1.0}


def test_invalid_pairs():
    with pytest.raises(InvalidFkmPair):
        build_clifford_system(1, 2)
    with pytest.raises(InvalidArgument):
        build_clifford_system(0, 3)
    with pytest.raises(InvalidArgument):
        check_fkm_pair(2, 0)


def test_construction_is_deterministic():
    a, b = build_clifford_system(3, 2), build_clifford_system(3, 2)
    assert all(np.array_equal(x, y) for x, y in zip(a.matrices, b.matrices))


def test_perturbed_system_fails():
    s = build_clifford_system(1, 3)
    P1 = s.matrices[1].copy()
    P1[0, 3] += 1e-6
    bad = CliffordSystem(s.m, s.k, s.l, (s.matrices[0], P1))
    rep = verify_clifford(bad, 1e-12)
    assert not rep.passed
    assert rep.max_residual > 1e-7


def test_sphere_element_examples():
    s = build_clifford_system(1, 3)
    assert np.array_equal(sphere_element(s, [1.0, 0.0]).P, s.matrices[0])
    P = sphere_element(s, np.array([1.0, 1.0]) / np.sqrt(2)).P
    assert np.max(np.abs(P @ P - np.eye(6))) < 1e-12
    assert abs(np.trace(P)) < 1e-12
    with pytest.raises(InvalidArgument):
        sphere_element(s, [0.0, 0.0])
    # renormalized when close to unit
    e = sphere_element(s, [1.0 + 1e-10, 0.0])
    assert abs(np.linalg.norm(e.a) - 1.0) < 1e-15


def test_inner_product_makes_generators_orthonormal():
    s = build_clifford_system(2, 2)
    G = np.array([s.coefficients(P) for P in s.matrices])
    assert np.allclose(G, np.eye(3), atol=0)


def test_json_round_trip():
    s = build_clifford_system(2, 2)
    t = CliffordSystem.from_dict(s.to_dict())
    assert all(np.array_equal(x, y) for x, y in zip(s.matrices, t.matrices))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([(1, 3), (2, 2), (3, 2), (5, 1)]))
def test_sphere_elements_are_involutions(seed, mk):
    s = build_clifford_system(*mk)
    rng = np.random.default_rng(seed)
    A = random_sphere_element(s, rng)
    B0 = random_sphere_element(s, rng)
    b = B0.a - (B0.a @ A.a) * A.a
    if np.linalg.norm(b) < 1e-6:
        return
    B = s.combine(b / np.linalg.norm(b))
    assert np.max(np.abs(A.P @ A.P - np.eye(s.dim))) < 1e-12
    assert np.max(np.abs(A.P @ B + B @ A.P)) < 1e-12
    w = np.linalg.eigvalsh(A.P)
    assert np.sum(w > 0) == s.l and np.max(np.abs(np.abs(w) - 1)) < 1e-12
