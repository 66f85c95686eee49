import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from polsarblf import hermitian as hm
from polsarblf.acceptance import charpoly_eigvals
from polsarblf.speckle import ZONE_MATRICES

from conftest import hpd_matrices, random_hpd


@pytest.mark.parametrize("zone", sorted(ZONE_MATRICES))
def test_eigenvalues_match_cubic_roots(zone):
    m = ZONE_MATRICES[zone]
    np.testing.assert_allclose(hm.eigvalsh(m), charpoly_eigvals(m), rtol=1e-9, atol=0)


def test_zone1_eigenvalues_closed_form():
    # roots of the characteristic cubic, computed independently
    np.testing.assert_allclose(hm.eigvalsh(ZONE_MATRICES[1]), [9.46915681, 1.20869577, 0.54214742], atol=1e-7)


def test_eig_reconstructs_and_is_orthonormal(rng):
    ms = np.stack([random_hpd(rng) for _ in range(200)])
    es = hm.eig_hermitian(ms)
    np.testing.assert_allclose(es.reconstruct(), ms, atol=1e-12 * np.abs(ms).max())
    gram = np.einsum("nki,nkj->nij", es.vectors.conj(), es.vectors)
    np.testing.assert_allclose(gram, np.broadcast_to(np.eye(3), gram.shape), atol=1e-13)
    assert np.all(np.diff(es.values, axis=-1) <= 0)


def test_eigenvector_phase_convention(rng):
    es = hm.eig_hermitian(random_hpd(rng))
    for k in range(3):
        v = es.vectors[:, k]
        big = np.argmax(np.abs(v))
        assert v[big].imag == 0.0 and v[big].real > 0


def test_eigvals3_agrees_with_full_solver(rng):
    for _ in range(50):
        m = random_hpd(rng)
        l0, l1, l2, ok = hm.eigvals3(m)
        assert ok
        np.testing.assert_allclose([l0, l1, l2], hm.eigvalsh(m), rtol=1e-12, atol=1e-13)


def test_diagonal_and_repeated_eigenvalues():
    np.testing.assert_array_equal(hm.eigvalsh(np.diag([1.0, 3.0, 2.0]).astype(complex)), [3.0, 2.0, 1.0])
    es = hm.eig_hermitian(2.0 * np.eye(3, dtype=complex))
    np.testing.assert_array_equal(es.values, [2.0, 2.0, 2.0])


def test_non_finite_input_raises():
    m = np.eye(3, dtype=complex)
    m[0, 1] = np.nan
    with pytest.raises(ValueError):
        hm.eig_hermitian(m)


@given(hpd_matrices())
def test_log_exp_round_trip(m):
    np.testing.assert_allclose(hm.matrix_exp(hm.matrix_log(m)), m, rtol=0, atol=1e-9 * np.abs(m).max())


@given(hpd_matrices())
def test_sqrt_squares_back(m):
    r = hm.matrix_sqrt(m)
    np.testing.assert_allclose(r @ r.conj().T, m, atol=1e-10 * np.abs(m).max())


@given(hpd_matrices(), st.floats(-2.0, 2.0))
def test_power_adds_exponents(m, p):
    np.testing.assert_allclose(
        hm.matrix_power(m, p) @ hm.matrix_power(m, 1.0 - p), m, atol=1e-8 * np.abs(m).max() * max(1.0, hm.condition_number(m))
    )


def test_sqrt_accepts_rank_deficient():
    m = np.diag([4.0, 0.0, 0.0]).astype(complex)
    r = hm.matrix_sqrt(m)
    np.testing.assert_allclose(r @ r.conj().T, m, atol=1e-15)


def test_log_rejects_singular():
    with pytest.raises(hm.NotPositiveDefinite):
        hm.matrix_log(np.diag([1.0, 1.0, 0.0]).astype(complex))


def test_inverse_rejects_singular():
    with pytest.raises(np.linalg.LinAlgError):
        hm.matrix_inv(np.diag([1.0, 0.0, 0.0]).astype(complex))


def test_condition_number():
    assert hm.condition_number(np.diag([1.0, 0.0, 0.0]).astype(complex)) == np.inf
    assert hm.condition_number(np.diag([1.0, 1.0, 1e-7]).astype(complex)) == pytest.approx(1e7)


def test_hermitianize_and_elements():
    m = hm.from_elements(1.0, 2.0, 3.0, 1 + 1j, 2 - 1j, 0.5j)
    assert hm.is_hermitian(m)
    assert hm.upper_elements(m) == (1.0, 2.0, 3.0, 1 + 1j, 2 - 1j, 0.5j)
    skew = m + np.triu(np.ones((3, 3)), 1) * 1e-3
    assert not hm.is_hermitian(skew)
    assert hm.is_hermitian(hm.hermitianize(skew))
