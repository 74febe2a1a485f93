"""Local dilations, complex local dilations and the constructions around them.

A witness for ``S -> S~`` (``S`` physical, ``S~`` canonical) holds local
isometries ``U_A : H_A -> H_A~ (x) H_A^ (x) H_A'``, where the last factor is
the two-dimensional flag register for complex dilations and is absent
(dimension 1) for standard ones. Output factors are ordered exactly as
written, most significant first.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .linalg import TOL, SIGMA_Z, dagger, orthonormal_complement, psd_sqrt, unitary_residual
from .strategy import (
    MINUS_I,
    PLUS_I,
    Strategy,
    StrategyError,
    reduced_states,
    validate,
)


class DilationError(ValueError):
    """Shape or normalization problems in a witness."""


class NotSupportPreserving(ValueError):
    def __init__(self, message: str, commutator: float):
        super().__init__(message)
        self.commutator = commutator


@dataclass
class DilationWitness:
    u_a: np.ndarray
    u_b: np.ndarray
    aux0: np.ndarray
    aux1: np.ndarray
    aux_dims: tuple[int, int]

    def __post_init__(self):
        self.u_a = np.asarray(self.u_a, dtype=complex)
        self.u_b = np.asarray(self.u_b, dtype=complex)
        self.aux0 = np.asarray(self.aux0, dtype=complex).ravel()
        self.aux1 = np.asarray(self.aux1, dtype=complex).ravel()
        da, db = self.aux_dims
        if self.aux0.size != da * db or self.aux1.size != da * db:
            raise DilationError("auxiliary vectors do not match aux_dims")

    def aux_norm(self) -> float:
        return float(np.vdot(self.aux0, self.aux0).real + np.vdot(self.aux1, self.aux1).real)

    def isometry_residual(self) -> float:
        return max(unitary_residual(self.u_a), unitary_residual(self.u_b))


@dataclass
class ResidualReport:
    state_residual: float
    alice: dict[tuple[str, int], float]
    bob: dict[tuple[str, int], float]
    isometry_residual: float
    tolerance: float
    max_residual: float = field(init=False)
    passed: bool = field(init=False)

    def __post_init__(self):
        self.max_residual = max(
            [self.state_residual, self.isometry_residual, *self.alice.values(), *self.bob.values()]
        )
        self.passed = self.max_residual <= self.tolerance


def _check_labels(s: Strategy, t: Strategy):
    for side in ("A", "B"):
        fs, ft = s.party(side), t.party(side)
        if list(fs) != list(ft) or any(len(fs[k]) != len(ft[k]) for k in fs):
            raise DilationError(f"party {side}: input/outcome structure differs between the strategies")


def _residuals(s: Strategy, t: Strategy, w: DilationWitness, reg: int, tol: float) -> ResidualReport:
    _check_labels(s, t)
    ha, hb = w.aux_dims
    ta, tb = t.dims
    if w.u_a.shape != (ta * ha * reg, s.dim_a) or w.u_b.shape != (tb * hb * reg, s.dim_b):
        raise DilationError(
            f"witness shapes {w.u_a.shape}, {w.u_b.shape} do not fit "
            f"{s.dims} -> {t.dims} with ancilla {w.aux_dims} and register {reg}"
        )
    if abs(w.aux_norm() - 1.0) > max(tol, 1e-9):
        raise DilationError(f"auxiliary states have total norm {w.aux_norm():.6f}, expected 1")
    if reg == 1 and np.linalg.norm(w.aux1) > tol:
        raise DilationError("standard dilations need aux1 = 0")

    aux0 = w.aux0.reshape(ha, hb)
    aux1 = w.aux1.reshape(ha, hb)
    m = s.coefficient_matrix

    def lhs(op_a, op_b):
        # (U_A op_a (x) U_B op_b) psi, reshaped to the canonical index order
        v = (w.u_a @ op_a) @ m @ (w.u_b @ op_b).T
        return v.reshape(ta, ha, reg, tb, hb, reg)

    def rhs(op_a, op_b):
        mt = t.coefficient_matrix
        main = op_a @ mt @ op_b.T
        out = np.zeros((ta, ha, reg, tb, hb, reg), dtype=complex)
        out[:, :, 0, :, :, 0] = np.einsum("ij,kl->ikjl", main, aux0)
        if reg == 2:
            conj = np.conj(op_a) @ np.conj(mt) @ np.conj(op_b).T
            out[:, :, 1, :, :, 1] = np.einsum("ij,kl->ikjl", conj, aux1)
        return out

    ia, ib, ita, itb = np.eye(s.dim_a), np.eye(s.dim_b), np.eye(ta), np.eye(tb)
    state = float(np.linalg.norm(lhs(ia, ib) - rhs(ita, itb)))
    alice = {}
    for x in s.alice:
        for a, (e, et) in enumerate(zip(s.alice[x], t.alice[x])):
            alice[(x, a)] = float(np.linalg.norm(lhs(e, ib) - rhs(et, itb)))
    bob = {}
    for y in s.bob:
        for b, (f, ft) in enumerate(zip(s.bob[y], t.bob[y])):
            bob[(y, b)] = float(np.linalg.norm(lhs(ia, f) - rhs(ita, ft)))
    return ResidualReport(state, alice, bob, w.isometry_residual(), tol)


def check_local_dilation(s: Strategy, t: Strategy, w: DilationWitness, tol: float = TOL) -> ResidualReport:
    """Residuals of ``U psi = psi~ aux`` and the two measurement relations."""
    return _residuals(s, t, w, 1, tol)


def check_complex_local_dilation(
    s: Strategy, t: Strategy, w: DilationWitness, tol: float = TOL
) -> ResidualReport:
    """Residuals of the complex local dilation relations with flag register ``A'B'``."""
    return _residuals(s, t, w, 2, tol)


def identity_witness(s: Strategy) -> DilationWitness:
    return DilationWitness(np.eye(s.dim_a), np.eye(s.dim_b), [1.0], [0.0], (1, 1))


def standard_to_complex(w: DilationWitness) -> DilationWitness:
    """Append the flag register in state ``|0>`` to a standard witness."""
    e0 = np.array([[1.0], [0.0]])
    return DilationWitness(np.kron(w.u_a, e0), np.kron(w.u_b, e0), w.aux0, np.zeros_like(w.aux0), w.aux_dims)


# --------------------------------------------------------- real simulation


def _register_isometry(d: int) -> np.ndarray:
    """``|+i> v -> v |0>`` and ``|-i> v -> v |1>`` from ``C^2 (x) C^d`` to ``C^d (x) C^1 (x) C^2``."""
    u = np.zeros((d * 2, 2 * d), dtype=complex)
    branches = (PLUS_I, MINUS_I)
    for i in range(d):
        for flag, s in enumerate(branches):
            for r in range(2):
                u[i * 2 + flag, r * d + i] = np.conj(s[r])
    return u


def real_simulation_dilation_witness(s: Strategy) -> DilationWitness:
    """Witness for ``real_simulation(s) -> s`` as a complex local dilation."""
    h = 1 / np.sqrt(2)
    return DilationWitness(_register_isometry(s.dim_a), _register_isometry(s.dim_b), [h], [h], (1, 1))


def _conjugation_fixers(aux: np.ndarray, ha: int, hb: int) -> tuple[np.ndarray, np.ndarray]:
    """Local unitaries ``u, v`` with ``(u (x) v) conj(aux) = aux``."""
    uu, _, vh = np.linalg.svd(aux.reshape(ha, hb))
    return uu @ uu.T, vh.T @ vh


def lift_to_real_simulations(w: DilationWitness, dims_s: tuple[int, int], dims_t: tuple[int, int]) -> DilationWitness:
    """Standard witness for ``S_R -> S~_R`` built from a complex witness for ``S -> S~``.

    Each side applies ``P+ (x) V + P- (x) conj(V)``, then flips the
    ``|+-i>`` register when the flag reads 1, and finally undoes the
    conjugation that the ``|-i>`` branch put on the auxiliary state. The
    new ancilla is ``A^ (x) A'``.
    """
    ha, hb = w.aux_dims
    aux0, aux1 = w.aux0.reshape(ha, hb), w.aux1.reshape(ha, hb)
    fix0 = _conjugation_fixers(aux0, ha, hb)
    fix1 = _conjugation_fixers(aux1, ha, hb)
    projs = (np.outer(PLUS_I, np.conj(PLUS_I)), np.outer(MINUS_I, np.conj(MINUS_I)))

    def side(v, d_in, d_t, h, party):
        vt = v.reshape(d_t, h, 2, d_in)
        out = np.zeros((2, d_t, h, 2, 2, d_in), dtype=complex)  # [r, t, h, flag; r_in, i]
        for k, (p, branch) in enumerate(zip(projs, (vt, np.conj(vt)))):
            out += np.einsum("rs,thfi->rthfsi", p, branch)
        # flip the register when the flag is 1
        out[:, :, :, 1] = np.einsum("rq,qthsi->rthsi", SIGMA_Z, out[:, :, :, 1])
        # conjugation fixers, controlled on (register branch, flag)
        for flag, fixers, branch in ((0, fix0, 1), (1, fix1, 0)):
            u = fixers[party]
            p = projs[branch]
            block = out[:, :, :, flag]
            corrected = np.einsum("rq,hg,qtgsi->rthsi", p, u, block)
            untouched = np.einsum("rq,qthsi->rthsi", np.eye(2) - p, block)
            out[:, :, :, flag] = corrected + untouched
        return out.reshape(2 * d_t * h * 2, 2 * d_in)

    u_a = side(w.u_a, dims_s[0], dims_t[0], ha, 0)
    u_b = side(w.u_b, dims_s[1], dims_t[1], hb, 1)
    aux = np.zeros((ha, 2, hb, 2), dtype=complex)
    aux[:, 0, :, 0] = aux0
    aux[:, 1, :, 1] = aux1
    return DilationWitness(u_a, u_b, aux.reshape(-1), np.zeros(aux.size), (2 * ha, 2 * hb))


# ---------------------------------------------------------- direct sums


@dataclass
class DirectSumWitness:
    """Witness in direct-sum form: ``U_A : H_A -> (A~ (x) A^_0) (+) (A~ (x) A^_1)``."""

    u_a: np.ndarray
    u_b: np.ndarray
    aux0: np.ndarray
    aux1: np.ndarray
    aux0_dims: tuple[int, int]
    aux1_dims: tuple[int, int]
    canonical_dims: tuple[int, int]


def direct_sum_to_register(w: DirectSumWitness) -> DilationWitness:
    """Re-express a direct-sum witness with the ``|00>, |11>`` flag register."""
    ta, tb = w.canonical_dims
    ha = max(w.aux0_dims[0], w.aux1_dims[0])
    hb = max(w.aux0_dims[1], w.aux1_dims[1])

    def side(u, t, dims0, dims1, h):
        d_in = u.shape[1]
        n0 = t * dims0
        out = np.zeros((t, h, 2, d_in), dtype=complex)
        out[:, :dims0, 0] = u[:n0].reshape(t, dims0, d_in)
        out[:, :dims1, 1] = u[n0:].reshape(t, dims1, d_in)
        return out.reshape(t * h * 2, d_in)

    def pad(aux, dims):
        out = np.zeros((ha, hb), dtype=complex)
        out[: dims[0], : dims[1]] = np.asarray(aux).reshape(dims)
        return out.reshape(-1)

    return DilationWitness(
        side(w.u_a, ta, w.aux0_dims[0], w.aux1_dims[0], ha),
        side(w.u_b, tb, w.aux0_dims[1], w.aux1_dims[1], hb),
        pad(w.aux0, w.aux0_dims),
        pad(w.aux1, w.aux1_dims),
        (ha, hb),
    )


def real_simulation_direct_sum_witness(s: Strategy) -> DirectSumWitness:
    """The real-simulation witness in direct-sum form (branches ``|+i>`` and ``|-i>``)."""

    def side(d):
        u = np.zeros((2 * d, 2 * d), dtype=complex)
        for flag, br in enumerate((PLUS_I, MINUS_I)):
            u[flag * d : (flag + 1) * d] = np.kron(np.conj(br)[None, :], np.eye(d))
        return u

    h = 1 / np.sqrt(2)
    return DirectSumWitness(side(s.dim_a), side(s.dim_b), [h], [h], (1, 1), (1, 1), s.dims)


# -------------------------------------------------------------- Naimark


def _is_projective_family(fam, tol) -> bool:
    return all(np.max(np.abs(e @ e - e)) <= tol for es in fam.values() for e in es)


def _naimark_party(fam, d):
    m = max(len(es) for es in fam.values())
    big = d * m
    embed = np.zeros((big, d), dtype=complex)
    embed[np.arange(d) * m, np.arange(d)] = 1.0  # v -> v (x) e_0
    out = {}
    for label, effs in fam.items():
        v = np.zeros((d, m, d), dtype=complex)
        for a, e in enumerate(effs):
            v[:, a, :] = psd_sqrt(e)
        v = v.reshape(big, d)
        # unitary U with U (v (x) e_0) = V v: columns (i, 0) are V e_i
        rest = orthonormal_complement(v)
        u = np.zeros((big, big), dtype=complex)
        u[:, np.arange(d) * m] = v
        others = [k for k in range(big) if k % m != 0]
        u[:, others] = rest
        projs = []
        for a in range(m):
            mask = np.zeros(m)
            mask[a] = 1.0
            projs.append(dagger(u) @ np.kron(np.eye(d), np.diag(mask)) @ u)
        n = len(effs)
        merged = projs[: n - 1] + [sum(projs[n - 1 :])]
        out[label] = tuple(merged)
    return out, embed, big


def naimark_dilate(s: Strategy, tol: float = TOL) -> Strategy:
    """Projective strategy with the same correlation, on ``H (x) C^m`` per side.

    ``m`` is the largest outcome count of the party. Parties whose
    measurements are already projective are left as they are.
    """
    new = {}
    isos = []
    dims = []
    for side, d in (("A", s.dim_a), ("B", s.dim_b)):
        fam = s.party(side)
        if _is_projective_family(fam, tol):
            new[side] = fam
            isos.append(np.eye(d))
            dims.append(d)
        else:
            f, iso, big = _naimark_party(fam, d)
            new[side] = f
            isos.append(iso)
            dims.append(big)
    if dims == list(s.dims):
        return s
    state = isos[0] @ s.coefficient_matrix @ isos[1].T
    return Strategy(state.reshape(-1), dims[0], dims[1], new["A"], new["B"])


# ---------------------------------------------------------- restriction


def support_isometries(s: Strategy, tol: float = TOL) -> tuple[np.ndarray, np.ndarray]:
    out = []
    for rho in reduced_states(s):
        w, v = np.linalg.eigh((rho + dagger(rho)) / 2)
        out.append(v[:, w > tol][:, ::-1])
    return out[0], out[1]


def restrict_to_support(s: Strategy, tol: float = TOL) -> Strategy:
    """Cut both local spaces down to the supports of the reduced states."""
    rep = validate(s, tol)
    if not rep.valid:
        raise StrategyError("; ".join(rep.errors))
    if not rep.support_preserving:
        raise NotSupportPreserving(
            f"strategy is not support preserving (commutator {rep.residuals['support_commutator']:.3e})",
            rep.residuals["support_commutator"],
        )
    if rep.full_rank:
        return s
    va, vb = support_isometries(s, tol)
    state = dagger(va) @ s.coefficient_matrix @ np.conj(vb)
    state = state / np.linalg.norm(state)

    def cut(fam, v):
        out = {}
        for k, es in fam.items():
            out[k] = tuple((lambda x: (x + dagger(x)) / 2)(dagger(v) @ e @ v) for e in es)
        return out

    return Strategy(state.reshape(-1), va.shape[1], vb.shape[1], cut(s.alice, va), cut(s.bob, vb))


def restriction_witnesses(s: Strategy, tol: float = TOL) -> tuple[DilationWitness, DilationWitness]:
    """Witnesses for ``s -> s_res`` and ``s_res -> s``.

    The first maps the support onto ``H_res (x) |0>`` and parks the
    orthogonal complement in the remaining ancilla levels.
    """
    if validate(s, tol).full_rank:
        return identity_witness(s), identity_witness(s)
    va, vb = support_isometries(s, tol)

    def folding(v):
        d, r = v.shape
        if r == d:
            return dagger(v), 1
        perp = orthonormal_complement(v)
        k = 1 + -(-(d - r) // r)
        u = np.zeros((r, k, d), dtype=complex)
        u[:, 0, :] = dagger(v)
        tail = np.zeros((r * (k - 1), d), dtype=complex)
        tail[: d - r] = dagger(perp)
        u[:, 1:, :] = tail.reshape(k - 1, r, d).transpose(1, 0, 2)
        return u.reshape(r * k, d), k

    ua, ka = folding(va)
    ub, kb = folding(vb)
    aux = np.zeros(ka * kb, dtype=complex)
    aux[0] = 1.0
    forward = DilationWitness(ua, ub, aux, np.zeros_like(aux), (ka, kb))
    backward = DilationWitness(va, vb, [1.0], [0.0], (1, 1))
    # the restricted state is defined up to the phase convention of restrict_to_support
    return forward, backward


def ancilla_extension(s: Strategy, ancilla: np.ndarray, dims: tuple[int, int]) -> tuple[Strategy, DilationWitness]:
    """``s`` tensored with an ancilla state on which every effect acts trivially, and the witness back to ``s``."""
    ha, hb = dims
    anc = np.asarray(ancilla, dtype=complex).reshape(ha, hb)
    big = np.einsum("ij,kl->ikjl", s.coefficient_matrix, anc).reshape(s.dim_a * ha, s.dim_b * hb)
    ext = Strategy(
        big.reshape(-1),
        s.dim_a * ha,
        s.dim_b * hb,
        {k: tuple(np.kron(e, np.eye(ha)) for e in es) for k, es in s.alice.items()},
        {k: tuple(np.kron(f, np.eye(hb)) for f in fs) for k, fs in s.bob.items()},
    )
    w = DilationWitness(np.eye(s.dim_a * ha), np.eye(s.dim_b * hb), anc.reshape(-1), np.zeros(ha * hb), (ha, hb))
    return ext, w
