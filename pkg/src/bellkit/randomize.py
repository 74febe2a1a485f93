"""Random strategies and planted generator families for property tests."""

from __future__ import annotations

import numpy as np

from .linalg import (
    dagger,
    direct_sum,
    haar_unitary,
    phi_embed,
    qadjoint,
    qmatmul,
    quaternion_conjugator,
    random_unit_vector,
)
from .strategy import Strategy

KINDS = ("real", "complex", "quaternion")


def _inv_sqrt(s: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh((s + dagger(s)) / 2)
    return (v / np.sqrt(w)) @ dagger(v)


def normalize_povm(gs: list[np.ndarray]) -> tuple[np.ndarray, ...]:
    """``S^{-1/2} G_a S^{-1/2}`` with ``S = sum G_a``; keeps any *-subalgebra the ``G_a`` live in."""
    s_inv = _inv_sqrt(sum(gs))
    out = []
    for g in gs:
        e = s_inv @ g @ s_inv
        out.append((e + dagger(e)) / 2)
    return tuple(out)


def random_povm(d: int, n: int, rng: np.random.Generator, rank: int | None = None) -> tuple[np.ndarray, ...]:
    k = d if rank is None else rank
    gs = []
    for _ in range(n):
        a = rng.standard_normal((d, k)) + 1j * rng.standard_normal((d, k))
        gs.append(a @ dagger(a))
    return normalize_povm(gs)


def random_real_povm(d: int, n: int, rng: np.random.Generator) -> tuple[np.ndarray, ...]:
    gs = []
    for _ in range(n):
        a = rng.standard_normal((d, d))
        gs.append((a @ a.T).astype(complex))
    return normalize_povm(gs)


def random_pvm(d: int, n: int, rng: np.random.Generator) -> tuple[np.ndarray, ...]:
    """Projective measurement with ``n`` outcomes; every outcome gets rank >= 1 when ``d >= n``."""
    u = haar_unitary(d, rng)
    if d >= n:
        cuts = np.sort(rng.choice(np.arange(1, d), size=n - 1, replace=False)) if n > 1 else np.array([], int)
    else:
        cuts = np.sort(rng.integers(0, d + 1, size=n - 1))
    edges = [0, *cuts.tolist(), d]
    out = []
    for a in range(n):
        cols = u[:, edges[a] : edges[a + 1]]
        out.append(cols @ dagger(cols))
    return tuple(out)


def random_quaternion_psd(m: int, rng: np.random.Generator) -> np.ndarray:
    a = rng.standard_normal((m, m, 4))
    return phi_embed(qmatmul(a, qadjoint(a)))


def random_quaternion_povm(m: int, n: int, rng: np.random.Generator) -> tuple[np.ndarray, ...]:
    """POVM on ``C^{2m}`` whose effects all lie in the range of the quaternion embedding."""
    return normalize_povm([random_quaternion_psd(m, rng) for _ in range(n)])


def random_state(da: int, db: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    if rank is None:
        return random_unit_vector(da * db, rng)
    u = haar_unitary(da, rng)[:, :rank]
    v = haar_unitary(db, rng)[:, :rank]
    s = rng.uniform(0.2, 1.0, size=rank)
    s = s / np.linalg.norm(s)
    return np.einsum("k,ik,jk->ij", s, u, v).reshape(-1)


def random_strategy(
    dims: tuple[int, int],
    rng: np.random.Generator,
    n_inputs: tuple[int, int] = (2, 2),
    n_outcomes: int = 2,
    projective: bool = False,
    state_rank: int | None = None,
) -> Strategy:
    def fam(d, k, prefix):
        make = random_pvm if projective else random_povm
        return {f"{prefix}{i}": make(d, n_outcomes, rng) for i in range(k)}

    return Strategy(
        random_state(dims[0], dims[1], rng, state_rank),
        dims[0],
        dims[1],
        fam(dims[0], n_inputs[0], "x"),
        fam(dims[1], n_inputs[1], "y"),
    )


def support_preserving_strategy(
    dims: tuple[int, int], rank: int, rng: np.random.Generator, projective: bool = False
) -> Strategy:
    """Schmidt rank ``rank`` with effects block diagonal along support (+) complement."""
    da, db = dims
    ua, ub = haar_unitary(da, rng), haar_unitary(db, rng)
    s = rng.uniform(0.2, 1.0, size=rank)
    s = s / np.linalg.norm(s)
    psi = np.einsum("k,ik,jk->ij", s, ua[:, :rank], ub[:, :rank]).reshape(-1)

    def effects(d, u):
        make = random_pvm if projective else random_povm
        top = make(rank, 2, rng)
        if d == rank:
            return tuple(u @ t @ dagger(u) for t in top)
        bottom = make(d - rank, 2, rng)
        return tuple(u @ direct_sum(t, b) @ dagger(u) for t, b in zip(top, bottom))

    alice = {f"x{i}": effects(da, ua) for i in range(2)}
    bob = {f"y{i}": effects(db, ub) for i in range(2)}
    return Strategy(psi, da, db, alice, bob)


# --------------------------------------------------------- planted families


def planted_generators(kind: str, d: int, rng: np.random.Generator, count: int = 3) -> list[np.ndarray]:
    """Random conjugates of real, generic complex, or quaternion-embedded hermitian families.

    Traceless hermitian 2x2 quaternion matrices anticommute like a Clifford
    family, so fewer than four of them generate a proper subalgebra;
    quaternion families therefore get at least four members.
    """
    v = haar_unitary(d, rng)
    if kind == "real":
        mats = []
        for _ in range(count):
            a = rng.standard_normal((d, d))
            mats.append((a + a.T).astype(complex))
    elif kind == "complex":
        mats = []
        for _ in range(count):
            a = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
            mats.append(a + dagger(a))
        # a complex family must not admit an antiunitary symmetry
        mats.append(1j * (mats[0] @ mats[1] - mats[1] @ mats[0]) + mats[0] @ mats[0] @ mats[1])
        mats[-1] = mats[-1] + dagger(mats[-1])
    elif kind == "quaternion":
        if d % 2:
            raise ValueError("quaternion families need even d")
        m = d // 2
        mats = []
        for _ in range(max(count, 4)):
            a = rng.standard_normal((m, m, 4))
            mats.append(phi_embed((a + qadjoint(a)) / 2))
    else:
        raise ValueError(f"unknown kind {kind!r}")
    return [v @ x @ dagger(v) for x in mats]


def planted_measurements(kind: str, d: int, rng: np.random.Generator, n_inputs: int = 2, n_outcomes: int = 3):
    """POVMs whose effects share one structure type, together with the basis change used.

    Returns ``(family, V, U)`` where the untwisted family is real or
    quaternion-embedded and ``U`` is the antiunitary intertwiner of the
    twisted one (``None`` for complex families).
    """
    v = haar_unitary(d, rng)
    fam = {}
    for i in range(n_inputs):
        if kind == "real":
            effs = random_real_povm(d, n_outcomes, rng)
        elif kind == "quaternion":
            effs = random_quaternion_povm(d // 2, n_outcomes, rng)
        elif kind == "complex":
            effs = random_povm(d, n_outcomes, rng)
        else:
            raise ValueError(f"unknown kind {kind!r}")
        fam[i] = tuple(v @ e @ dagger(v) for e in effs)
    if kind == "real":
        u = np.conj(v) @ dagger(v)
    elif kind == "quaternion":
        u = np.conj(v) @ quaternion_conjugator(d // 2) @ dagger(v)
    else:
        u = None
    return fam, v, u


def planted_strategy(
    kind_a: str,
    kind_b: str,
    dims: tuple[int, int],
    rng: np.random.Generator,
    self_conjugate_state: bool = False,
    n_inputs: int = 2,
    n_outcomes: int = 3,
) -> Strategy:
    """Strategy with planted local structure types.

    With ``self_conjugate_state`` the state is ``phi + T* conj(phi)`` for
    ``T = U_A (x) U_B``, which satisfies ``T psi = conj(psi)`` whenever
    ``T`` is symmetric (both parties real or both quaternion).
    """
    fa, _, ua = planted_measurements(kind_a, dims[0], rng, n_inputs, n_outcomes)
    fb, _, ub = planted_measurements(kind_b, dims[1], rng, n_inputs, n_outcomes)
    phi = random_unit_vector(dims[0] * dims[1], rng)
    if self_conjugate_state:
        if ua is None or ub is None:
            raise ValueError("self-conjugate states need real or quaternion parties")
        t = np.kron(ua, ub)
        phi = phi + dagger(t) @ np.conj(phi)
        phi = phi / np.linalg.norm(phi)
    alice = {f"x{k}": e for k, e in fa.items()}
    bob = {f"y{k}": e for k, e in fb.items()}
    return Strategy(phi, dims[0], dims[1], alice, bob)


def observable_from_projection(p: np.ndarray) -> np.ndarray:
    return 2 * p - np.eye(p.shape[0])


def complex_mixture(
    t: Strategy,
    aux0: np.ndarray,
    aux1: np.ndarray,
    aux_dims: tuple[int, int],
    rng: np.random.Generator,
):
    """A strategy ``S`` built from ``t (x) aux0 |00> + conj(t) (x) aux1 |11>`` and hidden by local unitaries.

    Returns ``(S, witness)`` where the witness certifies ``S -> t`` as a
    complex local dilation.
    """
    from .dilation import DilationWitness

    ha, hb = aux_dims
    ta, tb = t.dims
    a0 = np.asarray(aux0, dtype=complex).reshape(ha, hb)
    a1 = np.asarray(aux1, dtype=complex).reshape(ha, hb)
    m = t.coefficient_matrix
    big = np.zeros((ta, ha, 2, tb, hb, 2), dtype=complex)
    big[:, :, 0, :, :, 0] = np.einsum("ij,kl->ikjl", m, a0)
    big[:, :, 1, :, :, 1] = np.einsum("ij,kl->ikjl", np.conj(m), a1)
    da, db = ta * ha * 2, tb * hb * 2
    va, vb = haar_unitary(da, rng), haar_unitary(db, rng)
    state = va @ big.reshape(da, db) @ vb.T
    p0, p1 = np.diag([1.0, 0.0]), np.diag([0.0, 1.0])

    def lift(fam, h, v):
        out = {}
        for k, es in fam.items():
            out[k] = tuple(
                v @ (np.kron(np.kron(e, np.eye(h)), p0) + np.kron(np.kron(np.conj(e), np.eye(h)), p1)) @ dagger(v)
                for e in es
            )
        return out

    s = Strategy(state.reshape(-1), da, db, lift(t.alice, ha, va), lift(t.bob, hb, vb))
    return s, DilationWitness(dagger(va), dagger(vb), a0.reshape(-1), a1.reshape(-1), aux_dims)
