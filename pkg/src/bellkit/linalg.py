"""Dense complex matrix kernel and the quaternion embedding.

Every operator in the package is a plain ``numpy`` complex array. Tensor
products follow ``np.kron``: the first factor carries the most significant
index, so ``tensor(sigma_y, sigma_z)`` reproduces the usual entry table of
``sigma_y (x) sigma_z``.

Quaternion matrices are stored as real arrays of shape ``(n, n, 4)`` holding
the components ``(a0, a1, a2, a3)`` of ``a0 + a1 i + a2 j + a3 k``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from typing import Iterable, Sequence

import numpy as np

TOL = 1e-9

I2 = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
J = np.array([[0, -1], [1, 0]], dtype=complex)

# Phi images of the quaternion units 1, i, j, k.
_PHI_UNITS = np.array(
    [
        [[1, 0], [0, 1]],
        [[1j, 0], [0, -1j]],
        [[0, 1], [-1, 0]],
        [[0, 1j], [1j, 0]],
    ],
    dtype=complex,
)


def tensor(*mats: np.ndarray) -> np.ndarray:
    """Kronecker product of one or more matrices (or vectors)."""
    if not mats:
        raise ValueError("tensor needs at least one factor")
    return reduce(np.kron, [np.asarray(m, dtype=complex) for m in mats])


def direct_sum(*mats: np.ndarray) -> np.ndarray:
    mats = [np.atleast_2d(np.asarray(m, dtype=complex)) for m in mats]
    rows = sum(m.shape[0] for m in mats)
    cols = sum(m.shape[1] for m in mats)
    out = np.zeros((rows, cols), dtype=complex)
    r = c = 0
    for m in mats:
        out[r : r + m.shape[0], c : c + m.shape[1]] = m
        r += m.shape[0]
        c += m.shape[1]
    return out


def dagger(a: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(a, -1, -2))


def op_norm(a: np.ndarray) -> float:
    return float(np.linalg.norm(a, 2)) if np.size(a) else 0.0


def hermitian_residual(a: np.ndarray) -> float:
    return float(np.max(np.abs(a - dagger(a)), initial=0.0))


def unitary_residual(u: np.ndarray) -> float:
    """max |U*U - I| entrywise; works for isometries (tall matrices) too."""
    gram = dagger(u) @ u
    return float(np.max(np.abs(gram - np.eye(gram.shape[0])), initial=0.0))


def is_unitary(u: np.ndarray, tol: float = TOL) -> bool:
    return u.shape[0] == u.shape[1] and unitary_residual(u) <= tol


def is_hermitian(a: np.ndarray, tol: float = TOL) -> bool:
    return a.shape[0] == a.shape[1] and hermitian_residual(a) <= tol


def hermitian_sign(h: np.ndarray) -> np.ndarray:
    """Unitary part of the polar decomposition of a hermitian matrix.

    Eigenvalues equal to zero are sent to +1.
    """
    h = (h + dagger(h)) / 2
    w, v = np.linalg.eigh(h)
    s = np.where(w >= 0, 1.0, -1.0)
    return (v * s) @ dagger(v)


def psd_sqrt(a: np.ndarray) -> np.ndarray:
    a = (a + dagger(a)) / 2
    w, v = np.linalg.eigh(a)
    return (v * np.sqrt(np.clip(w, 0.0, None))) @ dagger(v)


def null_space(m: np.ndarray, tol: float = TOL) -> np.ndarray:
    """Orthonormal columns spanning the numerical kernel of ``m``.

    A singular value counts as zero when it is below ``tol * max(1, s_max)``.
    """
    n = m.shape[1]
    if m.shape[0] == 0:
        return np.eye(n, dtype=m.dtype)
    _, s, vh = np.linalg.svd(m, full_matrices=True)
    scale = max(1.0, s[0] if s.size else 0.0)
    rank = int(np.sum(s > tol * scale))
    return dagger(vh[rank:])


def orthonormal_complement(cols: np.ndarray) -> np.ndarray:
    """Columns completing the orthonormal columns of ``cols`` to a unitary."""
    d, k = cols.shape
    if k == d:
        return np.zeros((d, 0), dtype=complex)
    proj = np.eye(d) - cols @ dagger(cols)
    w, v = np.linalg.eigh((proj + dagger(proj)) / 2)
    return v[:, np.argsort(w)[::-1][: d - k]]


# ----------------------------------------------------------------- Schmidt


@dataclass(frozen=True)
class SchmidtForm:
    coefficients: np.ndarray
    left: np.ndarray  # columns are left Schmidt vectors
    right: np.ndarray  # columns are right Schmidt vectors

    @property
    def rank(self) -> int:
        return len(self.coefficients)

    def reconstruct(self) -> np.ndarray:
        return np.einsum("i,ai,bi->ab", self.coefficients, self.left, self.right).ravel()


def schmidt_decompose(v: np.ndarray, dim_a: int, dim_b: int, tol: float = TOL) -> SchmidtForm:
    v = np.asarray(v, dtype=complex).ravel()
    if v.size != dim_a * dim_b:
        raise ValueError(f"vector of length {v.size} does not split as {dim_a}x{dim_b}")
    if abs(np.linalg.norm(v) - 1.0) > tol:
        raise ValueError(f"state is not normalized (norm {np.linalg.norm(v):.3e})")
    u, s, vh = np.linalg.svd(v.reshape(dim_a, dim_b))
    r = int(np.sum(s > tol))
    return SchmidtForm(coefficients=s[:r].copy(), left=u[:, :r].copy(), right=vh[:r].T.copy())


def schmidt_rank(v: np.ndarray, dim_a: int, dim_b: int, tol: float = TOL) -> int:
    s = np.linalg.svd(np.asarray(v, dtype=complex).reshape(dim_a, dim_b), compute_uv=False)
    return int(np.sum(s > tol))


# ------------------------------------------------------------------ Takagi


def _antiunitary_frame(u: np.ndarray, sign: int) -> np.ndarray:
    """Orthonormal frame adapted to the antiunitary ``tau(v) = U conj(v)``.

    ``sign=+1`` (``U`` symmetric, ``tau**2 = 1``): returns columns ``w_k``
    with ``tau(w_k) = w_k``.
    ``sign=-1`` (``U`` antisymmetric, ``tau**2 = -1``): returns ``d/2``
    columns ``a_k`` such that ``{a_k, tau(a_k)}`` is orthonormal.
    """
    d = u.shape[0]

    def tau(v):
        return u @ np.conj(v)

    found: list[np.ndarray] = []

    def residual(v):
        for _ in range(2):
            for w in found:
                v = v - (np.vdot(w, v)) * w
        return v

    for j in range(d):
        if len(found) == d:
            break
        e = np.zeros(d, dtype=complex)
        e[j] = 1.0
        if sign > 0:
            cands = [e + tau(e), 1j * e + tau(1j * e)]
        else:
            cands = [e]
        for c in cands:
            v = residual(c)
            if sign > 0:
                v = (v + tau(v)) / 2
            nrm = np.linalg.norm(v)
            if nrm < 1e-6:
                continue
            v = v / nrm
            if sign > 0:
                found.append(v)
            else:
                t = residual(tau(v))
                found.append(v)
                found.append(t / np.linalg.norm(t))
            if len(found) == d:
                break
    if len(found) != d:
        raise np.linalg.LinAlgError("failed to build an adapted frame")
    if sign > 0:
        return np.stack(found, axis=1)
    return np.stack(found[0::2], axis=1)


def takagi_symmetric_unitary(u: np.ndarray, tol: float = TOL) -> np.ndarray:
    """Unitary ``W`` with ``W.T @ W == U`` for a symmetric unitary ``U``.

    The rows of ``W`` are an orthonormal basis of vectors fixed by the
    antiunitary involution ``v -> U conj(v)``; this needs no eigenvalue
    clustering and is exact for degenerate spectra such as ``U = Id``.
    """
    u = np.asarray(u, dtype=complex)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        raise ValueError("Takagi factorization needs a square matrix")
    if unitary_residual(u) > tol:
        raise ValueError("input is not unitary")
    if np.max(np.abs(u - u.T), initial=0.0) > tol:
        raise ValueError("input is not symmetric")
    return _antiunitary_frame((u + u.T) / 2, +1).T


def youla_antisymmetric_unitary(u: np.ndarray, tol: float = TOL) -> np.ndarray:
    """Unitary ``W`` with ``W.T @ (J (x) Id) @ W == U`` for an antisymmetric unitary ``U``."""
    u = np.asarray(u, dtype=complex)
    d = u.shape[0]
    if u.ndim != 2 or d != u.shape[1] or d % 2:
        raise ValueError("needs a square matrix of even size")
    if unitary_residual(u) > tol:
        raise ValueError("input is not unitary")
    if np.max(np.abs(u + u.T), initial=0.0) > tol:
        raise ValueError("input is not antisymmetric")
    u = (u - u.T) / 2
    # With V = W*, the columns satisfy v_(1,k) = conj(U v_(0,k)), so the
    # frame must be adapted to the involution v -> conj(U) conj(v).
    a = _antiunitary_frame(np.conj(u), -1)
    v = np.concatenate([a, np.conj(u @ a)], axis=1)
    return dagger(v)


# -------------------------------------------------------------- quaternions


def quaternion_matrix(components: np.ndarray) -> np.ndarray:
    """Validate/convert an ``(n, n, 4)`` component array."""
    q = np.asarray(components, dtype=float)
    if q.ndim != 3 or q.shape[0] != q.shape[1] or q.shape[2] != 4:
        raise ValueError("quaternion matrix must have shape (n, n, 4)")
    return q


def qmul(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Hamilton product of quaternion arrays ``(..., 4)``."""
    a0, a1, a2, a3 = np.moveaxis(p, -1, 0)
    b0, b1, b2, b3 = np.moveaxis(q, -1, 0)
    return np.stack(
        [
            a0 * b0 - a1 * b1 - a2 * b2 - a3 * b3,
            a0 * b1 + a1 * b0 + a2 * b3 - a3 * b2,
            a0 * b2 - a1 * b3 + a2 * b0 + a3 * b1,
            a0 * b3 + a1 * b2 - a2 * b1 + a3 * b0,
        ],
        axis=-1,
    )


def qconj(q: np.ndarray) -> np.ndarray:
    return q * np.array([1.0, -1.0, -1.0, -1.0])


def qmatmul(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Product of two quaternion matrices ``(n, m, 4) @ (m, k, 4)``."""
    return qmul(p[:, :, None, :], q[None, :, :, :]).sum(axis=1)


def qadjoint(q: np.ndarray) -> np.ndarray:
    """Transpose combined with the symplectic involution of each entry."""
    return qconj(np.swapaxes(q, 0, 1))


def phi_embed(q: np.ndarray) -> np.ndarray:
    """The *-embedding of ``M_n(H)`` into ``M_2n(C)`` as ``Phi (x) Id_n``.

    The 2x2 quaternion factor is the most significant index, so the image
    ``X`` satisfies ``conj(X) = K X K*`` with ``K = quaternion_conjugator(n)``.
    """
    q = quaternion_matrix(q)
    return sum(np.kron(_PHI_UNITS[k], q[:, :, k]) for k in range(4))


def quaternion_conjugator(n: int) -> np.ndarray:
    """``J (x) Id_n``: the unitary implementing complex conjugation on ran Phi_n."""
    return np.kron(J, np.eye(n))


def quaternion_residual(x: np.ndarray) -> float:
    """Distance of ``x`` from ran Phi_n, measured by the conjugation identity."""
    if x.shape[0] % 2:
        return float("inf")
    k = quaternion_conjugator(x.shape[0] // 2)
    return float(np.max(np.abs(np.conj(x) - k @ x @ dagger(k))))


def quaternion_scalar(a0: float = 0.0, a1: float = 0.0, a2: float = 0.0, a3: float = 0.0) -> np.ndarray:
    return np.array([a0, a1, a2, a3], dtype=float)


def swap_factors(da: int, db: int) -> np.ndarray:
    """Permutation ``P`` with ``P (A (x) B) P^T = B (x) A`` for ``A`` of size ``da``."""
    p = np.zeros((da * db, da * db))
    for i in range(da):
        for j in range(db):
            p[j * da + i, i * db + j] = 1.0
    return p


# ------------------------------------------------ real-linear orthonormality


def realify(mats: np.ndarray) -> np.ndarray:
    """Stack real and imaginary parts: ``(m, d, d) -> (m, 2 d^2)``."""
    mats = np.asarray(mats, dtype=complex)
    flat = mats.reshape(mats.shape[0], -1)
    return np.concatenate([flat.real, flat.imag], axis=1)


def unrealify(vecs: np.ndarray, shape: tuple[int, int]) -> np.ndarray:
    half = vecs.shape[1] // 2
    return (vecs[:, :half] + 1j * vecs[:, half:]).reshape((vecs.shape[0],) + shape)


def real_orthonormal_basis(mats: Iterable[np.ndarray], tol: float = TOL) -> list[np.ndarray]:
    """Orthonormal basis (for ``<A, B> = Re Tr A*B``) of the real span of ``mats``."""
    mats = [np.asarray(m, dtype=complex) for m in mats]
    if not mats:
        return []
    shape = mats[0].shape
    if any(m.shape != shape for m in mats):
        raise ValueError("all matrices must share one shape")
    basis: list[np.ndarray] = []
    for v in realify(np.stack(mats)):
        for _ in range(2):
            for b in basis:
                v = v - (b @ v) * b
        nrm = np.linalg.norm(v)
        if nrm > tol * max(1.0, np.sqrt(len(v))):
            basis.append(v / nrm)
    if not basis:
        return []
    return list(unrealify(np.stack(basis), shape))


def real_span_dimension(mats: Sequence[np.ndarray], tol: float = TOL) -> int:
    """Rank of the stacked real coordinate vectors (independent of Gram-Schmidt)."""
    if len(mats) == 0:
        return 0
    return int(np.linalg.matrix_rank(realify(np.stack(mats)), tol=tol * 1e3))


# ---------------------------------------------------------- random helpers


def haar_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    ph = np.diag(r) / np.abs(np.diag(r))
    return q * ph


def haar_orthogonal(d: int, rng: np.random.Generator) -> np.ndarray:
    q, r = np.linalg.qr(rng.standard_normal((d, d)))
    return q * np.sign(np.diag(r))


def random_hermitian(d: int, rng: np.random.Generator) -> np.ndarray:
    z = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    return (z + dagger(z)) / 2


def random_unit_vector(d: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    return v / np.linalg.norm(v)
