"""Small families of projections generating ``M_n(H)`` as a real algebra.

Families are written down as quaternion matrices and embedded with
``phi_embed``; all checks run on the ``2n x 2n`` complex images.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .algebra import Field, StructureType, TypeTag, close_algebra, is_irreducible, structure_type
from .linalg import TOL, dagger, phi_embed, qconj, qmul, quaternion_residual

MAX_N = 16

ONE = np.array([1.0, 0, 0, 0])
QI = np.array([0, 1.0, 0, 0])
QJ = np.array([0, 0, 1.0, 0])


@dataclass
class ProjectionFamily:
    n: int
    projections: list[np.ndarray]
    quaternion_projections: list[np.ndarray]
    expected_real_dim: int = field(init=False)

    def __post_init__(self):
        self.expected_real_dim = 4 * self.n * self.n

    def projection_residual(self) -> float:
        return max(
            max(float(np.max(np.abs(p @ p - p))), float(np.max(np.abs(p - dagger(p))))) for p in self.projections
        )

    def embedding_residual(self) -> float:
        return max(quaternion_residual(p) for p in self.projections)


def _real_block(n: int, blocks: dict[tuple[int, int], float]) -> np.ndarray:
    q = np.zeros((n, n, 4))
    for (i, j), val in blocks.items():
        q[i, j, 0] = val
    return q


def quaternion_outer(v: np.ndarray, scale: float) -> np.ndarray:
    """``scale * v v*`` for a quaternion column ``v`` of shape ``(n, 4)``."""
    return scale * qmul(v[:, None, :], qconj(v)[None, :, :])


def _column_from_row(row: list[np.ndarray]) -> np.ndarray:
    # the family is specified through v*, so v is the entrywise conjugate of that row
    return qconj(np.array(row))


def angle_block(theta: float) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c * c, c * s], [c * s, s * s]])


def quaternion_family(n: int) -> list[np.ndarray]:
    """The generating projections as ``(n, n, 4)`` quaternion arrays."""
    if n < 2:
        raise ValueError("projection families need n >= 2")
    if n == 2:
        p1 = _real_block(2, {(0, 0): 1.0})
        p2 = _real_block(2, {(i, j): 0.5 for i in range(2) for j in range(2)})
        out = [p1, p2]
        for unit in (QI, QJ):
            p = np.zeros((2, 2, 4))
            p[0, 0, 0] = p[1, 1, 0] = 0.5
            p[0, 1] = -0.5 * unit
            p[1, 0] = 0.5 * unit
            out.append(p)
        return out
    if n == 3:
        p1 = _real_block(3, {(0, 0): 1.0})
        p2 = _real_block(3, {(i, j): 0.5 for i in range(2) for j in range(2)})
        v1 = np.array([ONE, QI, ONE])
        v2 = np.array([ONE, QJ, ONE])
        return [p1, p2, quaternion_outer(v1, 1 / 3), quaternion_outer(v2, 1 / 3)]
    half = n // 2
    p1 = np.zeros((n, n, 4))
    p2 = np.zeros((n, n, 4))
    for l in range(1, half + 1):
        k = 2 * (l - 1)
        p1[k, k, 0] = 1.0
        p2[k : k + 2, k : k + 2, 0] = angle_block(np.pi / (l + 2))
    row = [ONE, QI, ONE, QJ] + [ONE] * (n - 4)
    v = _column_from_row(row)
    return [p1, p2, quaternion_outer(v, 1 / n)]


def projections_quaternion(n: int) -> ProjectionFamily:
    if n < 2:
        raise ValueError("projection families need n >= 2")
    qs = quaternion_family(n)
    return ProjectionFamily(n, [phi_embed(q) for q in qs], qs)


def literal_half_angle_p2(n: int) -> np.ndarray:
    """The angle-block matrix with an extra factor 1/2 on every block (not idempotent)."""
    half = n // 2
    p = np.zeros((n, n))
    for l in range(1, half + 1):
        k = 2 * (l - 1)
        p[k : k + 2, k : k + 2] = 0.5 * angle_block(np.pi / (l + 2))
    return p


@dataclass
class GenerationReport:
    n: int
    real_dim: int
    expected_real_dim: int
    structure: StructureType
    irreducible: bool
    generations: int
    passed: bool


def verify_generation(fam: ProjectionFamily, tol: float = TOL) -> GenerationReport:
    if fam.n > MAX_N:
        raise ValueError(f"n = {fam.n} exceeds the cap of {MAX_N}")
    cl = close_algebra(fam.projections, Field.REAL, tol)
    irr = is_irreducible(fam.projections, tol)
    st = structure_type(fam.projections, tol) if irr else StructureType(TypeTag.COMPLEX)
    passed = cl.real_dim == fam.expected_real_dim and st.tag is TypeTag.QUATERNION and irr
    return GenerationReport(fam.n, cl.real_dim, fam.expected_real_dim, st, irr, cl.generations, passed)


@dataclass
class NegativeReport:
    first_three_real_dim: int
    without_i_projection_real_dim: int
    all_four_real_dim: int
    passed: bool


def negative_check_three_projections_n2(tol: float = TOL) -> NegativeReport:
    ps = projections_quaternion(2).projections
    first_three = close_algebra(ps[:3], Field.REAL, tol).real_dim
    drop_i = close_algebra([ps[0], ps[1], ps[3]], Field.REAL, tol).real_dim
    all_four = close_algebra(ps, Field.REAL, tol).real_dim
    passed = first_three <= 8 and drop_i < 16 and all_four == 16
    return NegativeReport(first_three, drop_i, all_four, passed)


# ---------------------------------------------------------------- Jordan


@dataclass
class JordanBlocks:
    unitary: np.ndarray
    block_sizes: list[int]
    residual: float


def _is_projection(p: np.ndarray, tol: float) -> bool:
    return bool(np.max(np.abs(p @ p - p)) <= tol and np.max(np.abs(p - dagger(p))) <= tol)


def _range_basis(p: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh((p + dagger(p)) / 2)
    return v[:, w > 0.5]


def jordan_pair_blocks(p: np.ndarray, q: np.ndarray, tol: float = 1e-8) -> JordanBlocks:
    """Unitary ``U`` making ``U P U*`` and ``U Q U*`` block diagonal with real 1x1 and 2x2 blocks.

    The 2x2 blocks come from the eigenvectors ``u`` of ``PQP`` on ``ran P``
    with eigenvalue strictly between 0 and 1, paired with the unit vector
    along ``Qu - <u, Qu> u``; everything else splits into 1x1 blocks.
    """
    p = np.asarray(p, dtype=complex)
    q = np.asarray(q, dtype=complex)
    if p.shape != q.shape or not _is_projection(p, 1e-8) or not _is_projection(q, 1e-8):
        raise ValueError("jordan_pair_blocks needs two projections of equal size")
    d = p.shape[0]
    rp = _range_basis(p)
    cols: list[np.ndarray] = []
    sizes: list[int] = []
    if rp.shape[1]:
        w, v = np.linalg.eigh(dagger(rp) @ q @ rp)
        for k in range(len(w)):
            u = rp @ v[:, k]
            c2 = w[k]
            if tol < c2 < 1 - tol:
                perp = q @ u - c2 * u
                cols += [u, perp / np.linalg.norm(perp)]
                sizes.append(2)
            else:
                cols.append(u)
                sizes.append(1)
    # the rest lies in ker P and is invariant under Q
    used = np.stack(cols, axis=1) if cols else np.zeros((d, 0), dtype=complex)
    rest_proj = np.eye(d) - used @ dagger(used)
    w, v = np.linalg.eigh((rest_proj + dagger(rest_proj)) / 2)
    rest = v[:, w > 0.5]
    if rest.shape[1]:
        qw, qv = np.linalg.eigh(dagger(rest) @ q @ rest)
        for k in range(rest.shape[1]):
            cols.append(rest @ qv[:, k])
            sizes.append(1)
    basis = np.stack(cols, axis=1)
    u = dagger(basis)
    residual = _block_residual(u, [p, q], sizes)
    return JordanBlocks(u, sizes, residual)


def _block_residual(u: np.ndarray, mats, sizes) -> float:
    mask = np.zeros((u.shape[0],) * 2, dtype=bool)
    k = 0
    for s in sizes:
        mask[k : k + s, k : k + s] = True
        k += s
    out = float(np.max(np.abs(dagger(u) @ u - np.eye(u.shape[0]))))
    for m in mats:
        y = u @ m @ dagger(u)
        out = max(out, float(np.max(np.abs(y[~mask]), initial=0.0)), float(np.max(np.abs(y.imag))))
    return out
