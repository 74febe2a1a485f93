"""Finite-dimensional unital *-algebras generated by matrix families.

Everything here works on lists of square complex matrices. An algebra is
represented by an orthonormal basis for the real (``Re Tr A*B``) or
complex (``Tr A*B``) Frobenius inner product together with one spanning word
per basis element, so callers can recover which products were needed.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np
import scipy.linalg

from .linalg import (
    TOL,
    dagger,
    null_space,
    quaternion_residual,
    takagi_symmetric_unitary,
    unitary_residual,
    youla_antisymmetric_unitary,
)

MEMBERSHIP_TOL = 1e-7
CLUSTER_GAP = 1e-7


class Field(str, Enum):
    REAL = "Real"
    COMPLEX = "Complex"


class TypeTag(str, Enum):
    REAL = "RealType"
    COMPLEX = "ComplexType"
    QUATERNION = "QuaternionType"


class ReducibleError(ValueError):
    """Raised when an operation needs an irreducible family."""

    def __init__(self, message: str, decomposition: "BlockDecomposition | None" = None):
        super().__init__(message)
        self.decomposition = decomposition


class WrongTypeError(ValueError):
    pass


def _as_family(gens: Sequence[np.ndarray]) -> list[np.ndarray]:
    mats = [np.asarray(g, dtype=complex) for g in gens]
    if not mats:
        raise ValueError("need at least one generator")
    d = mats[0].shape[0]
    if any(m.shape != (d, d) for m in mats):
        raise ValueError("generators must be square and of equal size")
    return mats


def star_closed(gens: Sequence[np.ndarray], tol: float = TOL) -> list[np.ndarray]:
    """Generators together with the adjoints of the non-hermitian ones."""
    out = []
    for g in gens:
        out.append(g)
        if np.max(np.abs(g - dagger(g)), initial=0.0) > tol:
            out.append(dagger(g))
    return out


# -------------------------------------------------------------------- closure


@dataclass
class AlgebraClosure:
    d: int
    field: Field
    basis: list[np.ndarray]
    real_dim: int
    contains_i_identity: bool
    words: list[tuple[int, ...]] = field(default_factory=list)
    generations: int = 0

    @property
    def dim(self) -> int:
        """Dimension over the closure's own field."""
        return self.real_dim if self.field is Field.REAL else self.real_dim // 2

    def coordinates(self, x: np.ndarray) -> np.ndarray:
        return _vec(np.asarray(x, dtype=complex)[None], self.field)[0]

    def residual(self, x: np.ndarray) -> float:
        """Frobenius distance from ``x`` to the span of the closure."""
        q = _vec(np.stack(self.basis), self.field)
        v = self.coordinates(x)
        r = v - q.T @ (np.conj(q) @ v)
        return float(np.linalg.norm(r))

    def contains(self, x: np.ndarray, tol: float = MEMBERSHIP_TOL) -> bool:
        return self.residual(x) <= tol * max(1.0, float(np.linalg.norm(x)))


def _vec(mats: np.ndarray, fld: Field) -> np.ndarray:
    flat = mats.reshape(mats.shape[0], -1)
    if fld is Field.REAL:
        return np.concatenate([flat.real, flat.imag], axis=1)
    return flat


def _unvec(vecs: np.ndarray, d: int, fld: Field) -> list[np.ndarray]:
    if fld is Field.REAL:
        half = vecs.shape[1] // 2
        vecs = vecs[:, :half] + 1j * vecs[:, half:]
    return list(vecs.reshape(-1, d, d))


def close_algebra(
    gens: Sequence[np.ndarray],
    field: Field | str = Field.REAL,
    tol: float = TOL,
    stop_at_i: bool = False,
) -> AlgebraClosure:
    """Unital *-algebra over ``field`` generated by ``gens``.

    Generation ``L`` multiplies the words accepted in generation ``L - 1`` on
    the left by every generator (or adjoint); the candidates are projected
    onto the complement of the current span and the genuinely new directions
    are selected by a pivoted QR. The loop stops after the first generation
    that adds nothing. With ``stop_at_i`` the loop also stops as soon as
    ``i Id`` lies in the span (the closure is then incomplete but the
    ``contains_i_identity`` flag is already decided).
    """
    fld = Field(field)
    mats = star_closed(_as_family(gens), tol)
    d = mats[0].shape[0]
    eye = np.eye(d, dtype=complex)

    q = _vec(eye[None], fld) / np.sqrt(d)  # rows are orthonormal
    words: list[tuple[int, ...]] = [()]
    frontier = [((), eye)]
    ivec = _vec((1j * eye)[None], fld)[0] / np.sqrt(d)

    def has_i(q):
        r = ivec - q.T @ (np.conj(q) @ ivec)
        return np.linalg.norm(r) <= MEMBERSHIP_TOL

    generation = 0
    last_growth = 0
    while frontier:
        if stop_at_i and fld is Field.REAL and has_i(q):
            break
        generation += 1
        cand_words = [w + (k,) for w, _ in frontier for k in range(len(mats))]
        cand = np.stack([g @ m for _, m in frontier for g in mats])
        c = _vec(cand, fld)
        scale = max(1.0, float(np.max(np.linalg.norm(c, axis=1))))
        for _ in range(2):
            c = c - (c @ q.T.conj()) @ q if fld is Field.COMPLEX else c - (c @ q.T) @ q
        _, r, piv = scipy.linalg.qr(c.T, mode="economic", pivoting=True)
        diag = np.abs(np.diag(r))
        k = int(np.sum(diag > tol * scale * 10))
        if k == 0:
            break
        chosen = piv[:k]
        new, _ = np.linalg.qr(c[chosen].T)
        new = new.T
        # one more orthogonalization pass keeps the basis orthonormal to 1e-15
        new = new - ((new @ q.T.conj()) @ q if fld is Field.COMPLEX else (new @ q.T) @ q)
        new, _ = np.linalg.qr(new.T)
        q = np.concatenate([q, new.T], axis=0)
        words.extend(cand_words[i] for i in chosen)
        frontier = [(cand_words[i], cand[i]) for i in chosen]
        last_growth = generation

    dim = q.shape[0]
    real_dim = dim if fld is Field.REAL else 2 * dim
    return AlgebraClosure(
        d=d,
        field=fld,
        basis=_unvec(q, d, fld),
        real_dim=real_dim,
        contains_i_identity=True if fld is Field.COMPLEX else bool(has_i(q)),
        words=words,
        generations=last_growth,
    )


def is_irreducible(gens: Sequence[np.ndarray], tol: float = TOL) -> bool:
    """True iff the complex *-algebra generated by ``gens`` is all of ``M_d(C)``."""
    gens = _as_family(gens)
    d = gens[0].shape[0]
    return close_algebra(gens, Field.COMPLEX, tol).real_dim == 2 * d * d


def commutant(gens: Sequence[np.ndarray], tol: float = TOL) -> list[np.ndarray]:
    """Orthonormal complex basis of the commutant of the generated *-algebra."""
    mats = star_closed(_as_family(gens), tol)
    d = mats[0].shape[0]
    eye = np.eye(d)
    # row-major vec: vec(T X) = (I (x) X^T) vec T, vec(X T) = (X (x) I) vec T
    system = np.concatenate([np.kron(eye, x.T) - np.kron(x, eye) for x in mats], axis=0)
    ns = null_space(system, tol=tol * 10)
    return [ns[:, k].reshape(d, d) for k in range(ns.shape[1])]


# ------------------------------------------------------------ decomposition


@dataclass
class Block:
    isometry: np.ndarray
    generators: list[np.ndarray]

    @property
    def dim(self) -> int:
        return self.isometry.shape[1]


@dataclass
class BlockDecomposition:
    blocks: list[Block]

    def __len__(self) -> int:
        return len(self.blocks)

    def reassembly_residual(self) -> float:
        d = self.blocks[0].isometry.shape[0]
        total = sum(b.isometry @ dagger(b.isometry) for b in self.blocks)
        return float(np.max(np.abs(total - np.eye(d))))


def _eigen_groups(w: np.ndarray, gap: float = CLUSTER_GAP) -> list[np.ndarray]:
    groups = [[0]]
    for i in range(1, len(w)):
        if w[i] - w[i - 1] > gap * max(1.0, abs(w[i])):
            groups.append([i])
        else:
            groups[-1].append(i)
    return [np.array(g) for g in groups]


def block_decompose(
    gens: Sequence[np.ndarray], tol: float = TOL, seed: int = 0, _depth: int = 0
) -> BlockDecomposition:
    """Split the ambient space into blocks on which ``gens`` act irreducibly."""
    mats = _as_family(gens)
    d = mats[0].shape[0]
    comm = commutant(mats, tol)
    if len(comm) <= 1 or _depth > d:
        return BlockDecomposition([Block(np.eye(d, dtype=complex), mats)])
    rng = np.random.default_rng(seed + _depth)
    h = sum(rng.standard_normal() * (c + dagger(c)) + rng.standard_normal() * 1j * (c - dagger(c)) for c in comm)
    h = (h + dagger(h)) / 2
    w, v = np.linalg.eigh(h)
    groups = _eigen_groups(w)
    if len(groups) == 1:
        # commutant is abelian-degenerate along this direction; retry with another draw
        return block_decompose(mats, tol, seed + 7919, _depth + 1)
    blocks = []
    for g in groups:
        iso = v[:, g]
        restricted = [dagger(iso) @ x @ iso for x in mats]
        sub = block_decompose(restricted, tol, seed, _depth + 1)
        for b in sub.blocks:
            blocks.append(Block(iso @ b.isometry, b.generators))
    return BlockDecomposition(blocks)


# --------------------------------------------------------- structure types


@dataclass
class StructureType:
    tag: TypeTag
    intertwiner: np.ndarray | None = None
    indicator: int | None = None
    real_dim: int | None = None

    def __str__(self) -> str:
        return self.tag.value


def intertwiner_space(gens: Sequence[np.ndarray], tol: float = TOL) -> np.ndarray:
    """Basis (columns, row-major vec) of ``{T : T X = conj(X) T}`` over the *-closed family."""
    mats = star_closed(_as_family(gens), tol)
    d = mats[0].shape[0]
    eye = np.eye(d)
    system = np.concatenate([np.kron(eye, x.T) - np.kron(np.conj(x), eye) for x in mats], axis=0)
    return null_space(system, tol=tol * 10)


def indicator_of(t: np.ndarray, tol: float = 1e-6) -> int:
    """Sign ``lambda`` with ``T conj(T) = lambda |c|^2 Id`` for an intertwiner ``T``.

    Invariant under ``T -> c T`` for any nonzero complex ``c``.
    """
    d = t.shape[0]
    alpha = np.trace(dagger(t) @ t).real / d
    u = t / np.sqrt(alpha)
    val = np.trace(u @ np.conj(u)) / d
    lam = 1 if val.real >= 0 else -1
    if abs(val - lam) > tol:
        raise np.linalg.LinAlgError(f"U conj(U) is not +-Id (trace/d = {val:.3e})")
    return lam


def _fix_phase(u: np.ndarray) -> np.ndarray:
    flat = u.ravel()
    k = int(np.argmax(np.abs(flat) > 1e-6 * np.max(np.abs(flat))))
    ph = flat[k] / abs(flat[k])
    return u / ph


def antiunitary_intertwiner(gens: Sequence[np.ndarray], tol: float = TOL) -> tuple[np.ndarray, int] | None:
    """Unitary ``U`` with ``U X U* = conj(X)`` for all generators, plus its indicator.

    Returns ``None`` when no such ``U`` exists. The phase is fixed so that
    the first non-negligible entry of ``U`` is real and positive.
    """
    mats = _as_family(gens)
    if not is_irreducible(mats, tol):
        raise ReducibleError("generators are reducible", block_decompose(mats, tol))
    d = mats[0].shape[0]
    ns = intertwiner_space(mats, tol)
    if ns.shape[1] == 0:
        return None
    if ns.shape[1] > 1:
        raise np.linalg.LinAlgError("intertwiner space is not one-dimensional")
    t = ns[:, 0].reshape(d, d)
    gram = dagger(t) @ t
    alpha = np.trace(gram).real / d
    u = t / np.sqrt(alpha)
    if unitary_residual(u) > 1e-6:
        raise np.linalg.LinAlgError("intertwiner is not proportional to a unitary")
    # polar projection removes residual noise
    w, _, vh = np.linalg.svd(u)
    u = _fix_phase(w @ vh)
    return u, indicator_of(u)


def structure_type(gens: Sequence[np.ndarray], tol: float = TOL) -> StructureType:
    found = antiunitary_intertwiner(gens, tol)
    if found is None:
        return StructureType(TypeTag.COMPLEX)
    u, lam = found
    return StructureType(TypeTag.REAL if lam == 1 else TypeTag.QUATERNION, u, lam)


def realize_real_basis(gens: Sequence[np.ndarray], tol: float = TOL) -> np.ndarray:
    """Unitary ``W`` making every ``W X W*`` real, for real-type families."""
    st = structure_type(gens, tol)
    if st.tag is not TypeTag.REAL:
        raise WrongTypeError(f"family has structure type {st.tag.value}, not RealType")
    u = st.intertwiner
    return takagi_symmetric_unitary((u + u.T) / 2, tol=1e-6)


def realize_quaternion_basis(gens: Sequence[np.ndarray], tol: float = TOL) -> np.ndarray:
    """Unitary ``W`` putting every ``W X W*`` in the range of the quaternion embedding."""
    mats = _as_family(gens)
    if mats[0].shape[0] % 2:
        raise WrongTypeError("quaternion type needs even dimension")
    st = structure_type(mats, tol)
    if st.tag is not TypeTag.QUATERNION:
        raise WrongTypeError(f"family has structure type {st.tag.value}, not QuaternionType")
    u = st.intertwiner
    return youla_antisymmetric_unitary((u - u.T) / 2, tol=1e-6)


def realization_residual(w: np.ndarray, gens: Sequence[np.ndarray], kind: TypeTag) -> float:
    out = 0.0
    for x in gens:
        y = w @ x @ dagger(w)
        r = float(np.max(np.abs(y.imag))) if kind is TypeTag.REAL else quaternion_residual(y)
        out = max(out, r)
    return out


def max_imag_trace(gens: Sequence[np.ndarray], max_len: int = 6) -> tuple[float, tuple[int, ...]]:
    """Largest ``|Im Tr(word)|`` over all words up to ``max_len`` and the word attaining it."""
    mats = _as_family(gens)
    d = mats[0].shape[0]
    best, best_word = 0.0, ()
    frontier = [((), np.eye(d, dtype=complex))]
    for _ in range(max_len):
        nxt = []
        for w, m in frontier:
            for k, g in enumerate(mats):
                p = g @ m
                val = abs(np.trace(p).imag)
                if val > best:
                    best, best_word = val, w + (k,)
                nxt.append((w + (k,), p))
        frontier = nxt
    return best, best_word


def all_words(n_letters: int, max_len: int):
    for length in range(max_len + 1):
        yield from itertools.product(range(n_letters), repeat=length)


def word_product(gens: Sequence[np.ndarray], word: Sequence[int]) -> np.ndarray:
    d = gens[0].shape[0]
    out = np.eye(d, dtype=complex)
    for k in word:
        out = gens[k] @ out
    return out
