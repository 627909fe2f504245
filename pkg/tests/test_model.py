import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import eigh

from duoscale import (ChainSystem, DecompositionFailure, DegenerateSpectrum, InvalidArgument,
                      NonlinearSpring, build_chain, generalized_eigh, modal_decompose,
                      modal_project, modal_reconstruct, nonlinear_force, nonlinear_potential,
                      nonresonance_report)
from duoscale.model import jacobi_eigh


def chain(n=3, p=1, c=1.0, d=1.0, eps=0.1, **kw):
    return build_chain(n, 1.0, 1.0, NonlinearSpring(c, d, eps, p), **kw)


def test_spring_rejects_bad_parameters():
    with pytest.raises(InvalidArgument):
        NonlinearSpring(epsilon=0.0)
    with pytest.raises(InvalidArgument):
        NonlinearSpring(p=0)


def test_build_chain_matrices():
    s = chain(4)
    assert np.array_equal(s.mass_matrix, np.eye(4))
    assert s.stiffness_matrix[0, 0] == 2.0 and s.stiffness_matrix[0, 1] == -1.0
    assert s.stiffness_matrix[0, 2] == 0.0


def test_chain_validation():
    spring = NonlinearSpring(0, 1, 0.1, 3)
    with pytest.raises(InvalidArgument):
        build_chain(2, 1.0, 1.0, spring)
    with pytest.raises(InvalidArgument):
        ChainSystem(np.eye(2), np.array([[2.0, -1.0], [-0.5, 2.0]]), NonlinearSpring())
    with pytest.raises(InvalidArgument):
        build_chain(2, 1.0, 1.0, NonlinearSpring(), damping=-1.0)


def test_nonlinear_force_wall_spring():
    s = chain(3, p=1, c=0.0, d=0.1, eps=0.1)
    f = nonlinear_force(s, np.array([1.0, 5.0, 7.0]))
    assert np.allclose(f, [1.0, 0.0, 0.0])


def test_nonlinear_force_interior_spring_is_potential_gradient():
    # g = u_2 - u_1 = 1 with c = 0, d/eps = 2: T = 2, +T at node 2, -T at node 1
    s = chain(3, p=2, c=0.0, d=0.2, eps=0.1)
    f = nonlinear_force(s, np.array([0.0, 1.0, 0.0]))
    assert np.allclose(f, [-2.0, 2.0, 0.0])


@given(st.lists(st.floats(-1, 1), min_size=4, max_size=4), st.integers(1, 4))
@settings(max_examples=50, deadline=None)
def test_force_matches_finite_difference_of_potential(u, p):
    s = chain(4, p=p, c=0.7, d=0.3, eps=0.2)
    u = np.array(u)
    h = 1e-6
    grad = np.array([(nonlinear_potential(s, u + h * e) - nonlinear_potential(s, u - h * e)) / (2 * h)
                     for e in np.eye(4)])
    assert np.allclose(nonlinear_force(s, u), grad, atol=1e-6)


def test_jacobi_matches_numpy():
    rng = np.random.default_rng(3)
    A = rng.normal(size=(6, 6))
    A = A + A.T
    w, V = jacobi_eigh(A)
    assert np.allclose(np.sort(w), np.linalg.eigvalsh(A), atol=1e-12)
    assert np.allclose(A @ V, V * w, atol=1e-11)


@given(st.integers(2, 7), st.floats(0.5, 3.0), st.floats(0.5, 3.0))
@settings(max_examples=20, deadline=None)
def test_generalized_eigh_against_scipy(n, m, k):
    rng = np.random.default_rng(n)
    M = np.diag(m * (1.0 + rng.random(n)))
    K = k * (2.0 * np.eye(n) - np.eye(n, k=1) - np.eye(n, k=-1))
    lam, Phi = generalized_eigh(K, M)
    assert np.allclose(lam, eigh(K, M, eigvals_only=True), rtol=1e-11)
    assert np.allclose(Phi.T @ M @ Phi, np.eye(n), atol=1e-11)
    assert np.allclose(K @ Phi, M @ Phi * lam, atol=1e-10)


def test_uniform_chain_frequencies_analytic():
    n = 9
    basis = modal_decompose(chain(n))
    k = np.arange(1, n + 1)
    assert np.allclose(basis.frequencies, 2.0 * np.sin(k * np.pi / (2 * (n + 1))), atol=1e-12)
    # sign convention: largest-magnitude entry positive
    for j in range(n):
        col = basis.modes[:, j]
        assert col[np.argmax(np.abs(col))] > 0


def test_one_dof_frequency():
    basis = modal_decompose(build_chain(1, 2.0, 4.0, NonlinearSpring()))
    assert basis.frequencies[0] == pytest.approx(math.sqrt(8.0 / 2.0))
    assert basis.modes[0, 0] == pytest.approx(1.0 / math.sqrt(2.0))


def test_gaps_match_mode_differences():
    basis = modal_decompose(chain(5, p=3))
    assert np.allclose(basis.gaps, basis.modes[2] - basis.modes[1])


def test_indefinite_stiffness_rejected():
    s = ChainSystem(np.eye(2), np.array([[1.0, 2.0], [2.0, 1.0]]), NonlinearSpring())
    with pytest.raises(DecompositionFailure):
        modal_decompose(s)


def test_degenerate_spectrum_rejected():
    s = ChainSystem(np.eye(2), np.eye(2), NonlinearSpring())
    with pytest.raises(DegenerateSpectrum):
        modal_decompose(s)


@given(st.lists(st.floats(-2, 2), min_size=5, max_size=5))
@settings(max_examples=30, deadline=None)
def test_project_reconstruct_roundtrip(u):
    s = build_chain(5, 1.5, 0.7, NonlinearSpring())
    basis = modal_decompose(s)
    u = np.array(u)
    assert np.allclose(modal_reconstruct(basis, modal_project(basis, s.mass_matrix, u)), u,
                       atol=1e-12)


def test_nonresonance_report_flags_near_ratios():
    basis = modal_decompose(chain(3))
    # omega_3 / omega_1 = (2 + sqrt 2)... / (2 - sqrt 2) ratio of sines ~ 2.414
    assert nonresonance_report(basis, 1e-3) == []
    hits = nonresonance_report(basis, 0.5)
    assert hits and all(h.k != 1 or h.ratio > 0 for h in hits)
