import numpy as np
import pytest
from hypothesis import given, strategies as st
from numpy.testing import assert_allclose

from reelbeam.errors import InvalidInputError, NotPsdError
from reelbeam.linalg import (check_hermitian, eig_hermitian, herm, is_unitary, numeric_rank, psd_factor,
                             rotation_matrix)

seeds = st.integers(0, 2**32 - 1)


def rand_herm(rng, n):
    a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return 0.5 * (a + herm(a))


def rand_psd(rng, n, r):
    b = rng.standard_normal((n, r)) + 1j * rng.standard_normal((n, r))
    return b @ herm(b)


def test_eig_identity():
    dec = eig_hermitian(np.eye(3))
    assert_allclose(dec.values, [1, 1, 1])
    assert_allclose(herm(dec.vectors) @ dec.vectors, np.eye(3), atol=1e-12)


def test_eig_diagonal_is_sorted_permutation():
    dec = eig_hermitian(np.diag([0.0, 5.0, -1.0]))
    assert_allclose(dec.values, [5, 0, -1])
    assert_allclose(np.abs(dec.vectors), np.eye(3)[:, [1, 0, 2]], atol=1e-12)


def test_eig_projector(rng):
    h = rng.standard_normal(5) + 1j * rng.standard_normal(5)
    h /= np.linalg.norm(h)
    assert_allclose(eig_hermitian(np.outer(h, h.conj())).values, [1, 0, 0, 0, 0], atol=1e-12)


def test_eig_phase_convention(rng):
    dec = eig_hermitian(rand_herm(rng, 6))
    for k in range(6):
        col = dec.vectors[:, k]
        first = col[np.flatnonzero(np.abs(col) > 1e-12)[0]]
        assert abs(first.imag) < 1e-12 and first.real > 0


def test_eig_rejects_non_hermitian():
    with pytest.raises(InvalidInputError):
        eig_hermitian(np.array([[1.0, 2.0], [0.0, 1.0]]))


@given(seeds, st.integers(1, 10))
def test_eig_reconstruction_and_orthonormality(seed, n):
    rng = np.random.default_rng(seed)
    h = rand_herm(rng, n)
    dec = eig_hermitian(h)
    assert np.all(np.diff(dec.values) <= 0)
    assert_allclose(herm(dec.vectors) @ dec.vectors, np.eye(n), atol=1e-10)
    assert np.linalg.norm(h - (dec.vectors * dec.values) @ herm(dec.vectors)) <= 1e-9 * np.linalg.norm(h)


@given(seeds, st.integers(2, 8))
def test_unitary_similarity_keeps_spectrum(seed, n):
    rng = np.random.default_rng(seed)
    x = rand_herm(rng, n)
    u = rotation_matrix(rng.standard_normal(n) + 1j * rng.standard_normal(n))
    assert_allclose(eig_hermitian(herm(u) @ x @ u).values, eig_hermitian(x).values, atol=1e-9)


def test_rotation_axis_aligned():
    u = rotation_matrix(np.array([1.0, 0, 0]))
    assert_allclose(u[:, 0], [1, 0, 0])
    assert_allclose(np.abs(u), np.eye(3), atol=1e-12)


def test_rotation_two_dimensional():
    u = rotation_matrix(np.array([1.0, 1.0]) / np.sqrt(2), n_t=2)
    assert_allclose(u[:, 0], np.array([1, 1]) / np.sqrt(2))
    assert abs(np.vdot(u[:, 0], u[:, 1])) < 1e-12
    assert_allclose(np.linalg.norm(u[:, 1]), 1.0)


def test_rotation_nulls_trailing_entries(rng):
    h = rng.standard_normal(8) + 1j * rng.standard_normal(8)
    u = rotation_matrix(h, n_t=8)
    row = np.conj(h) @ u
    assert np.max(np.abs(row[1:])) <= 1e-10 * np.linalg.norm(h)
    assert_allclose(row[0], np.linalg.norm(h))


def test_rotation_errors():
    with pytest.raises(InvalidInputError):
        rotation_matrix(np.zeros(4))
    with pytest.raises(InvalidInputError):
        rotation_matrix(np.ones(3), n_t=4)


@given(seeds, st.integers(1, 12))
def test_rotation_is_unitary(seed, n):
    rng = np.random.default_rng(seed)
    h = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    u = rotation_matrix(h)
    assert np.linalg.norm(herm(u) @ u - np.eye(n)) <= 1e-10
    assert_allclose(u[:, 0], h / np.linalg.norm(h), atol=1e-12)
    assert is_unitary(u)


def test_psd_factor_examples(rng):
    assert_allclose(psd_factor(np.eye(2)) @ herm(psd_factor(np.eye(2))), np.eye(2), atol=1e-12)
    assert psd_factor(np.zeros((3, 3))).shape == (3, 0)
    v = rng.standard_normal(4) + 1j * rng.standard_normal(4)
    b = psd_factor(np.outer(v, v.conj()))
    assert b.shape == (4, 1)
    assert_allclose(np.linalg.norm(b), np.linalg.norm(v))
    phase = b[:, 0] / v
    assert_allclose(phase, phase[0] * np.ones(4), atol=1e-10)


def test_psd_factor_rejects_indefinite():
    with pytest.raises(NotPsdError) as err:
        psd_factor(np.diag([1.0, -0.5]))
    assert err.value.eigenvalue == pytest.approx(-0.5)
    with pytest.raises(InvalidInputError):
        psd_factor(np.eye(2), tol=0.0)


@given(seeds, st.integers(1, 8), st.integers(0, 8))
def test_psd_factor_reconstructs(seed, n, r):
    rng = np.random.default_rng(seed)
    x = rand_psd(rng, n, min(r, n))
    b = psd_factor(x)
    assert np.linalg.norm(b @ herm(b) - x) <= 10 * 1e-10 * max(np.linalg.norm(x), 1e-300) + 1e-12
    if np.trace(x).real > 0:
        assert b.shape[1] == numeric_rank(x, 1e-10)


def test_numeric_rank_examples():
    assert numeric_rank(np.diag([1.0, 0.5, 1e-9])) == 2
    assert numeric_rank(np.eye(4)) == 4
    assert numeric_rank(np.zeros((3, 3))) == 0


def test_numeric_rank_tie_counts():
    # eigenvalues (a, b) with b exactly fraction * (a + b)
    frac = 0.25
    x = np.diag([3.0, 1.0])
    assert 1.0 == frac * np.trace(x)
    assert numeric_rank(x, frac) == 2
    assert numeric_rank(x, np.nextafter(frac, 1.0)) == 1


def test_numeric_rank_bad_fraction():
    with pytest.raises(InvalidInputError):
        numeric_rank(np.eye(2), 0.0)


def test_check_hermitian_tolerance():
    a = np.array([[1.0, 1 + 1j], [1 - 1j, 2.0]])
    check_hermitian(a + 1e-14)
    with pytest.raises(InvalidInputError):
        check_hermitian(a + np.array([[0, 1e-6], [0, 0]]))
