from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bellkit.linalg import (
    I2,
    J,
    SIGMA_X,
    SIGMA_Y,
    SIGMA_Z,
    dagger,
    haar_unitary,
    null_space,
    orthonormal_complement,
    phi_embed,
    psd_sqrt,
    qadjoint,
    qconj,
    qmatmul,
    qmul,
    quaternion_conjugator,
    quaternion_residual,
    quaternion_scalar,
    real_orthonormal_basis,
    real_span_dimension,
    realify,
    schmidt_decompose,
    schmidt_rank,
    swap_factors,
    takagi_symmetric_unitary,
    tensor,
    unitary_residual,
    youla_antisymmetric_unitary,
)


def random_matrix(rng, d, e=None):
    e = d if e is None else e
    return rng.standard_normal((d, e)) + 1j * rng.standard_normal((d, e))


def test_tensor_matches_named_observables():
    x1 = np.diag([1, 1, -1, -1]).astype(complex)
    assert np.array_equal(tensor(SIGMA_Z, I2), x1)
    assert np.array_equal(tensor(I2, I2), np.eye(4))
    x3 = tensor(SIGMA_Y, SIGMA_Z)
    expected = np.zeros((4, 4), dtype=complex)
    expected[0, 2], expected[1, 3], expected[2, 0], expected[3, 1] = -1j, 1j, 1j, -1j
    assert np.array_equal(x3, expected)


def test_tensor_associative_and_bilinear():
    rng = np.random.default_rng(0)
    a, b, c = random_matrix(rng, 2), random_matrix(rng, 3), random_matrix(rng, 2)
    assert np.max(np.abs(tensor(tensor(a, b), c) - tensor(a, tensor(b, c)))) < 1e-12
    a2 = random_matrix(rng, 2)
    lhs = tensor(2.5 * a + a2, b)
    rhs = 2.5 * tensor(a, b) + tensor(a2, b)
    assert np.max(np.abs(lhs - rhs)) < 1e-12


def test_swap_factors_exchanges_kron_order():
    rng = np.random.default_rng(1)
    a, b = random_matrix(rng, 2), random_matrix(rng, 3)
    p = swap_factors(2, 3)
    assert np.allclose(p @ np.kron(a, b) @ p.T, np.kron(b, a))


def test_schmidt_examples():
    phi4 = np.eye(4).reshape(-1) / 2
    sf = schmidt_decompose(phi4, 4, 4)
    assert np.allclose(sf.coefficients, [0.5] * 4)
    prod = np.zeros(4)
    prod[0] = 1
    assert np.allclose(schmidt_decompose(prod, 2, 2).coefficients, [1.0])
    v = np.zeros((4, 4))
    v[0, 0] = v[1, 1] = v[2, 2] = 1 / np.sqrt(3)
    sf = schmidt_decompose(v.reshape(-1), 4, 4)
    assert sf.rank == 3
    assert np.allclose(sf.coefficients, [1 / np.sqrt(3)] * 3)


def test_schmidt_rejects_bad_input():
    with pytest.raises(ValueError):
        schmidt_decompose(np.ones(5), 2, 2)
    with pytest.raises(ValueError):
        schmidt_decompose(np.ones(4), 2, 2)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 5), st.integers(1, 5), st.integers(0, 2**32 - 1))
def test_schmidt_reconstructs(da, db, seed):
    rng = np.random.default_rng(seed)
    v = random_matrix(rng, da * db, 1).ravel()
    v /= np.linalg.norm(v)
    sf = schmidt_decompose(v, da, db)
    assert np.linalg.norm(sf.reconstruct() - v) <= 1e-10
    assert abs(np.sum(sf.coefficients**2) - 1) < 1e-12
    for fam in (sf.left, sf.right):
        assert np.max(np.abs(dagger(fam) @ fam - np.eye(sf.rank))) < 1e-10
    assert schmidt_rank(v, da, db) == sf.rank


@pytest.mark.parametrize(
    "u",
    [np.eye(3, dtype=complex), SIGMA_X, np.diag([1j, -1j])],
    ids=["identity", "sigma_x", "diag_i"],
)
def test_takagi_examples(u):
    w = takagi_symmetric_unitary(u)
    assert np.max(np.abs(w.T @ w - u)) < 1e-12
    assert unitary_residual(w) < 1e-12


def test_takagi_random_symmetric_unitaries():
    rng = np.random.default_rng(2)
    for _ in range(100):
        d = int(rng.integers(1, 9))
        v = haar_unitary(d, rng)
        dvec = np.exp(1j * rng.uniform(0, 2 * np.pi, d))
        u = v.T @ np.diag(dvec) @ v
        w = takagi_symmetric_unitary(u)
        assert np.max(np.abs(w.T @ w - u)) <= 1e-10
        assert unitary_residual(w) <= 1e-10


def test_takagi_degenerate_spectrum():
    rng = np.random.default_rng(3)
    v = haar_unitary(6, rng)
    u = v.T @ np.diag([1, 1, 1, -1, -1, 1j]) @ v
    w = takagi_symmetric_unitary(u)
    assert np.max(np.abs(w.T @ w - u)) < 1e-10


def test_takagi_rejects_non_symmetric():
    rng = np.random.default_rng(4)
    with pytest.raises(ValueError):
        takagi_symmetric_unitary(haar_unitary(3, rng))
    with pytest.raises(ValueError):
        takagi_symmetric_unitary(2 * np.eye(2))


def test_youla_antisymmetric_unitaries():
    rng = np.random.default_rng(5)
    for n in range(1, 5):
        v = haar_unitary(2 * n, rng)
        k = quaternion_conjugator(n)
        u = v.T @ k @ v
        w = youla_antisymmetric_unitary(u)
        assert np.max(np.abs(w.T @ k @ w - u)) < 1e-10
        assert unitary_residual(w) < 1e-10
    with pytest.raises(ValueError):
        youla_antisymmetric_unitary(np.eye(3))


def test_phi_embed_units():
    i = np.zeros((1, 1, 4))
    i[0, 0] = quaternion_scalar(a1=1)
    assert np.allclose(phi_embed(i), np.diag([1j, -1j]))
    j = np.zeros((1, 1, 4))
    j[0, 0] = quaternion_scalar(a2=1)
    assert np.allclose(phi_embed(j), [[0, 1], [-1, 0]])
    k = np.zeros((1, 1, 4))
    k[0, 0] = quaternion_scalar(a3=1)
    pk = phi_embed(k)
    assert np.allclose(np.conj(pk), J @ pk @ dagger(J))


def test_quaternion_units_multiply_like_quaternions():
    one, i, j, k = np.eye(4)
    assert np.allclose(qmul(i, j), k)
    assert np.allclose(qmul(j, i), -k)
    assert np.allclose(qmul(i, i), -one)
    assert np.allclose(qmul(qmul(i, j), k), -one)
    assert np.allclose(qconj(qmul(i, j)), qmul(qconj(j), qconj(i)))


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 4), st.integers(0, 2**32 - 1))
def test_phi_embed_is_star_homomorphism(n, seed):
    rng = np.random.default_rng(seed)
    p, q = rng.standard_normal((n, n, 4)), rng.standard_normal((n, n, 4))
    assert np.max(np.abs(phi_embed(qmatmul(p, q)) - phi_embed(p) @ phi_embed(q))) < 1e-12
    assert np.max(np.abs(phi_embed(qadjoint(p)) - dagger(phi_embed(p)))) < 1e-12
    x = phi_embed(p)
    k = quaternion_conjugator(n)
    assert np.max(np.abs(np.conj(x) - k @ x @ dagger(k))) < 1e-12
    assert quaternion_residual(x) < 1e-12


def test_quaternion_residual_detects_generic_matrix():
    rng = np.random.default_rng(6)
    assert quaternion_residual(random_matrix(rng, 4)) > 0.1
    assert quaternion_residual(np.eye(3)) == float("inf")


def test_real_orthonormal_basis_examples():
    assert len(real_orthonormal_basis([I2, 2 * I2])) == 1
    assert len(real_orthonormal_basis([I2, 1j * I2])) == 2
    basis = real_orthonormal_basis([SIGMA_X, SIGMA_Y, SIGMA_Z, I2])
    assert len(basis) == 4
    gram = realify(np.stack(basis)) @ realify(np.stack(basis)).T
    assert np.allclose(gram, np.eye(4))


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 4), st.integers(1, 12), st.integers(0, 2**32 - 1))
def test_real_basis_length_matches_rank_oracle(d, m, seed):
    rng = np.random.default_rng(seed)
    k = int(rng.integers(1, m + 1))
    seeds = [random_matrix(rng, d) for _ in range(k)]
    coeffs = rng.standard_normal((m, k))
    mats = [sum(c * s for c, s in zip(row, seeds)) for row in coeffs]
    oracle = np.linalg.matrix_rank(np.stack([np.concatenate([x.real.ravel(), x.imag.ravel()]) for x in mats]))
    assert len(real_orthonormal_basis(mats)) == oracle == real_span_dimension(mats)


def test_null_space_and_complement():
    rng = np.random.default_rng(7)
    a = random_matrix(rng, 3, 5)
    ns = null_space(a)
    assert ns.shape == (5, 2)
    assert np.max(np.abs(a @ ns)) < 1e-12
    q = haar_unitary(5, rng)[:, :2]
    comp = orthonormal_complement(q)
    full = np.concatenate([q, comp], axis=1)
    assert unitary_residual(full) < 1e-12


def test_psd_sqrt_squares_back():
    rng = np.random.default_rng(8)
    a = random_matrix(rng, 4)
    p = a @ dagger(a)
    r = psd_sqrt(p)
    assert np.max(np.abs(r @ r - p)) < 1e-10
    assert np.max(np.abs(r - dagger(r))) < 1e-12
