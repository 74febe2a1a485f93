"""Realness ladder for irreducible strategies.

For one strategy the classifier decides, with explicit witnesses:

* the structure type of each party's measurement algebra;
* self-conjugacy, i.e. local unitaries ``U_A, U_B`` with
  ``U E U* = conj(E)`` and ``(U_A (x) U_B)|psi> = |conj psi>``;
* realness, i.e. local bases in which every operator and the state are real;
* moment reality, both by sweeping word moments and by an algebra
  membership test.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .algebra import (
    Field,
    ReducibleError,
    StructureType,
    TypeTag,
    block_decompose,
    close_algebra,
    is_irreducible,
    structure_type,
)
from .linalg import TOL, dagger, takagi_symmetric_unitary
from .strategy import (
    Strategy,
    StrategyError,
    generate_words,
    local_unitary,
    observable_word_operator,
    structural_errors,
    word_operator,
)

MOMENT_TOL = 1e-7
DEFAULT_PAIR_BUDGET = 20_000_000


class BudgetExceeded(RuntimeError):
    pass


@dataclass
class SelfConjugacyWitness:
    u_a: np.ndarray
    u_b: np.ndarray
    phase: complex
    residuals: dict[str, float]

    @property
    def max_residual(self) -> float:
        return max(self.residuals.values())


@dataclass
class MomentCounterexample:
    word_a: tuple
    word_b: tuple
    value: complex
    kind: str  # "povm" or "observable"


@dataclass
class RealnessReport:
    irreducible: bool
    alice_type: StructureType
    bob_type: StructureType
    self_conjugate: bool
    witness: SelfConjugacyWitness | None
    schmidt_real: bool
    real_bases: tuple[np.ndarray, np.ndarray] | None
    moment_real_direct: bool
    counterexample: MomentCounterexample | None
    moment_real_algebraic: bool
    observable_counterexample: MomentCounterexample | None = None
    verdict: str = ""
    notes: list[str] = field(default_factory=list)

    @property
    def indicator_a(self) -> int | None:
        return self.alice_type.indicator

    @property
    def indicator_b(self) -> int | None:
        return self.bob_type.indicator


def _check_input(s: Strategy, tol: float):
    errors, _ = structural_errors(s, tol)
    if errors:
        raise StrategyError("; ".join(errors))


def _require_irreducible(s: Strategy, tol: float):
    bad = {}
    for side in ("A", "B"):
        effs = s.effects(side)
        if not is_irreducible(effs, tol):
            bad[side] = block_decompose(effs, tol)
    if bad:
        err = ReducibleError(f"strategy is reducible on side(s) {', '.join(bad)}")
        err.decomposition = bad
        raise err


# ------------------------------------------------------------ witnesses


def state_map(s: Strategy, u_a: np.ndarray, u_b: np.ndarray) -> np.ndarray:
    """``(U_A (x) U_B)|psi>`` as a flat vector."""
    return (u_a @ s.coefficient_matrix @ u_b.T).reshape(-1)


def witness_residuals(s: Strategy, u_a: np.ndarray, u_b: np.ndarray) -> dict[str, float]:
    ra = max(float(np.max(np.abs(u_a @ e @ dagger(u_a) - np.conj(e)))) for e in s.effects("A"))
    rb = max(float(np.max(np.abs(u_b @ f @ dagger(u_b) - np.conj(f)))) for f in s.effects("B"))
    rs = float(np.linalg.norm(state_map(s, u_a, u_b) - np.conj(s.state)))
    return {"alice": ra, "bob": rb, "state": rs}


def _witness_from_types(s: Strategy, ta: StructureType, tb: StructureType, tol: float):
    if ta.intertwiner is None or tb.intertwiner is None:
        return None
    u_a, u_b = ta.intertwiner, tb.intertwiner
    # the intertwiners are unique up to phase; the product phase is fixed by the state
    z = np.vdot(np.conj(s.state), state_map(s, u_a, u_b))
    if abs(abs(z) - 1.0) > np.sqrt(tol):
        return None
    phase = np.conj(z) / abs(z)
    u_a = phase * u_a
    res = witness_residuals(s, u_a, u_b)
    if max(res.values()) > max(tol, 1e-9) * 10:
        return None
    return SelfConjugacyWitness(u_a, u_b, complex(phase), res)


def self_conjugacy_witness(s: Strategy, tol: float = TOL) -> SelfConjugacyWitness | None:
    _check_input(s, tol)
    _require_irreducible(s, tol)
    ta = structure_type(s.effects("A"), tol)
    tb = structure_type(s.effects("B"), tol)
    return _witness_from_types(s, ta, tb, tol)


# ---------------------------------------------------------------- moments


def _order_key(len_a: np.ndarray, len_b: np.ndarray):
    return len_a[:, None] + len_b[None, :], np.broadcast_to(len_a[:, None], (len(len_a), len(len_b)))


def _first_offender(values: np.ndarray, len_a: np.ndarray, len_b: np.ndarray, threshold: float):
    bad = np.abs(values.imag) > threshold
    if not bad.any():
        return None
    total, la = _order_key(len_a, len_b)
    ia, ib = np.nonzero(bad)
    # canonical order: total length, then Alice's length, then enumeration index
    order = np.lexsort((ib, ia, la[ia, ib], total[ia, ib]))
    k = order[0]
    return int(ia[k]), int(ib[k])


def _moment_table(s: Strategy, ops_a: Sequence[np.ndarray], ops_b: Sequence[np.ndarray]) -> np.ndarray:
    m = s.coefficient_matrix
    ca = np.einsum("ji,kjl,lm->kim", np.conj(m), np.stack(ops_a), m)
    return np.einsum("kij,lij->kl", ca, np.stack(ops_b))


def _closure_words(s: Strategy, side: str, tol: float) -> list[tuple]:
    fam = s.party(side)
    letters = [(x, a) for x, es in fam.items() for a in range(len(es))]
    cl = close_algebra([e for es in fam.values() for e in es], Field.REAL, tol)
    # all effects are hermitian, so the *-closed generator list is the effect list itself
    return [tuple(letters[k] for k in w) for w in cl.words]


def moment_real_direct(
    s: Strategy,
    max_len: int = 0,
    tol: float = TOL,
    threshold: float = MOMENT_TOL,
    budget: int = DEFAULT_PAIR_BUDGET,
) -> tuple[bool, MomentCounterexample | None]:
    """Check that every higher moment is real.

    ``max_len > 0`` sweeps all POVM words up to that length on each side;
    ``max_len = 0`` sweeps the spanning words of each party's real
    *-algebra, which is exhaustive because moments are real-bilinear.
    """
    _check_input(s, tol)
    if max_len > 0:
        words_a = list(generate_words({x: len(e) for x, e in s.alice.items()}, max_len))
        words_b = list(generate_words({y: len(f) for y, f in s.bob.items()}, max_len))
    else:
        words_a = _closure_words(s, "A", tol)
        words_b = _closure_words(s, "B", tol)
    if len(words_a) * len(words_b) > budget:
        raise BudgetExceeded(f"{len(words_a)} x {len(words_b)} word pairs exceed the budget of {budget}")
    ops_a = [word_operator(s.alice, w, s.dim_a) for w in words_a]
    ops_b = [word_operator(s.bob, w, s.dim_b) for w in words_b]
    values = _moment_table(s, ops_a, ops_b)
    hit = _first_offender(
        values, np.array([len(w) for w in words_a]), np.array([len(w) for w in words_b]), threshold
    )
    if hit is None:
        return True, None
    ia, ib = hit
    return False, MomentCounterexample(tuple(words_a[ia]), tuple(words_b[ib]), complex(values[ia, ib]), "povm")


def observable_moment_counterexample(
    s: Strategy, max_len: int = 3, threshold: float = MOMENT_TOL
) -> MomentCounterexample | None:
    """First observable-word pair (canonical order) with a non-real moment."""
    if not s.is_dichotomic():
        return None

    def words(labels):
        out = [()]
        frontier = [()]
        for _ in range(max_len):
            frontier = [w + (x,) for w in frontier for x in labels]
            out.extend(frontier)
        return out

    words_a, words_b = words(list(s.alice)), words(list(s.bob))
    ops_a = [observable_word_operator(s, "A", w) for w in words_a]
    ops_b = [observable_word_operator(s, "B", w) for w in words_b]
    values = _moment_table(s, ops_a, ops_b)
    hit = _first_offender(
        values, np.array([len(w) for w in words_a]), np.array([len(w) for w in words_b]), threshold
    )
    if hit is None:
        return None
    ia, ib = hit
    return MomentCounterexample(words_a[ia], words_b[ib], complex(values[ia, ib]), "observable")


def schmidt_rotation(s: Strategy) -> tuple[Strategy, np.ndarray, np.ndarray]:
    """Express ``s`` in its Schmidt bases; returns the rotated strategy and the local unitaries."""
    u, _, vh = np.linalg.svd(s.coefficient_matrix)
    ua, ub = dagger(u), np.conj(vh)
    return local_unitary(s, ua, ub), ua, ub


def moment_real_algebraic(s: Strategy, tol: float = TOL) -> bool:
    """Decide moment reality by an algebra membership test.

    All moments are real exactly when ``i Id`` is outside the real unital
    *-algebra generated by ``E (x) Id``, ``Id (x) F`` and the rank-one
    projection onto the state. The state projection must be included:
    without it the test also rejects strategies such as Pauli ``X, Z`` on
    both sides of ``(|00> + i|11>)/sqrt 2``, whose algebra is real while a
    moment equals ``i``.
    """
    _check_input(s, tol)
    _require_irreducible(s, tol)
    rot, _, _ = schmidt_rotation(s)
    ia, ib = np.eye(rot.dim_a), np.eye(rot.dim_b)
    gens = [np.kron(e, ib) for e in rot.effects("A")]
    gens += [np.kron(ia, f) for f in rot.effects("B")]
    gens.append(np.outer(rot.state, np.conj(rot.state)))
    cl = close_algebra(gens, Field.REAL, tol, stop_at_i=True)
    return not cl.contains_i_identity


# --------------------------------------------------------------- verdicts


def classify_strategy(s: Strategy, tol: float = TOL, observable_len: int = 3) -> RealnessReport:
    _check_input(s, tol)
    _require_irreducible(s, tol)
    ta = structure_type(s.effects("A"), tol)
    tb = structure_type(s.effects("B"), tol)
    witness = _witness_from_types(s, ta, tb, tol)

    real_bases = None
    schmidt_real = False
    notes = []
    if witness is not None and ta.tag is TypeTag.REAL and tb.tag is TypeTag.REAL:
        u_a = witness.u_a
        w_a = takagi_symmetric_unitary((u_a + u_a.T) / 2, tol=1e-6)
        w_b = takagi_symmetric_unitary((witness.u_b + witness.u_b.T) / 2, tol=1e-6)
        phi = state_map(s, w_a, w_b)
        k = int(np.argmax(np.abs(phi)))
        phi = phi * np.conj(phi[k]) / abs(phi[k])
        imag = max(
            float(np.max(np.abs(phi.imag))),
            max(float(np.max(np.abs((w_a @ e @ dagger(w_a)).imag))) for e in s.effects("A")),
            max(float(np.max(np.abs((w_b @ f @ dagger(w_b)).imag))) for f in s.effects("B")),
        )
        if imag <= 1e-8:
            schmidt_real = True
            real_bases = (w_a, w_b)
        else:
            notes.append(f"realizing bases leave imaginary parts of size {imag:.3e}")

    direct, cex = moment_real_direct(s, 0, tol)
    algebraic = moment_real_algebraic(s, tol)
    if direct != algebraic:
        notes.append("direct and algebraic moment-reality tests disagree")
    obs_cex = observable_moment_counterexample(s, observable_len) if not direct else None

    if schmidt_real:
        verdict = "Real"
    elif witness is not None:
        verdict = "SelfConjugateNotReal"
    else:
        verdict = "Complex"
    return RealnessReport(
        irreducible=True,
        alice_type=ta,
        bob_type=tb,
        self_conjugate=witness is not None,
        witness=witness,
        schmidt_real=schmidt_real,
        real_bases=real_bases,
        moment_real_direct=direct,
        counterexample=cex,
        moment_real_algebraic=algebraic,
        observable_counterexample=obs_cex,
        verdict=verdict,
        notes=notes,
    )


@dataclass
class BlockVerdict:
    block_a: int
    block_b: int
    weight: float
    report: RealnessReport | None


def block_strategy(s: Strategy, iso_a: np.ndarray, iso_b: np.ndarray) -> tuple[Strategy | None, float]:
    m = dagger(iso_a) @ s.coefficient_matrix @ np.conj(iso_b)
    w = float(np.linalg.norm(m) ** 2)
    if w <= TOL:
        return None, w
    fam = lambda f, v: {k: tuple(dagger(v) @ e @ v for e in es) for k, es in f.items()}
    sub = Strategy(m.reshape(-1) / np.sqrt(w), iso_a.shape[1], iso_b.shape[1], fam(s.alice, iso_a), fam(s.bob, iso_b))
    return sub, w


def classify_blocks(s: Strategy, tol: float = TOL) -> list[BlockVerdict]:
    """Per-block verdicts for a possibly reducible strategy (no global verdict)."""
    _check_input(s, tol)
    da = block_decompose(s.effects("A"), tol)
    db = block_decompose(s.effects("B"), tol)
    out = []
    for i, ba in enumerate(da.blocks):
        for j, bb in enumerate(db.blocks):
            sub, w = block_strategy(s, ba.isometry, bb.isometry)
            out.append(BlockVerdict(i, j, w, classify_strategy(sub, tol) if sub is not None else None))
    return out


def report_to_dict(r: RealnessReport) -> dict:
    from .io import matrix_to_json

    def cex(c):
        if c is None:
            return None
        return {
            "kind": c.kind,
            "word_A": [list(l) if isinstance(l, tuple) else l for l in c.word_a],
            "word_B": [list(l) if isinstance(l, tuple) else l for l in c.word_b],
            "value": [c.value.real, c.value.imag],
        }

    return {
        "verdict": r.verdict,
        "alice_type": r.alice_type.tag.value,
        "bob_type": r.bob_type.tag.value,
        "indicator_A": r.indicator_a,
        "indicator_B": r.indicator_b,
        "self_conjugate": r.self_conjugate,
        "witness": None
        if r.witness is None
        else {
            "U_A": matrix_to_json(r.witness.u_a),
            "U_B": matrix_to_json(r.witness.u_b),
            "phase": [r.witness.phase.real, r.witness.phase.imag],
            "residuals": r.witness.residuals,
        },
        "schmidt_real": r.schmidt_real,
        "real_bases": None
        if r.real_bases is None
        else {"W_A": matrix_to_json(r.real_bases[0]), "W_B": matrix_to_json(r.real_bases[1])},
        "moment_real_direct": r.moment_real_direct,
        "moment_real_algebraic": r.moment_real_algebraic,
        "counterexample": cex(r.counterexample),
        "observable_counterexample": cex(r.observable_counterexample),
        "notes": r.notes,
    }
