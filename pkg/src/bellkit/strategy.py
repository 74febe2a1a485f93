"""Bipartite strategies: a pure state plus local POVM families.

A strategy lives on ``H_A (x) H_B``; the state vector is stored in the
``np.kron`` ordering, so reshaping it to ``(dim_a, dim_b)`` gives the
coefficient matrix ``M`` with ``<psi| A (x) B |psi> = Tr(M* A M B^T)``.

Words are sequences of ``(input, outcome)`` letters listed in the order the
operators are applied: the first letter acts first, so the word
``[(x1, a1), (x2, a2)]`` is the product ``E_{x2 a2} E_{x1 a1}``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .linalg import TOL, dagger, hermitian_residual, schmidt_rank, tensor

Label = str
Letter = tuple[Label, int]
Word = Sequence[Letter]

PLUS_I = np.array([1.0, 1.0j]) / np.sqrt(2)
MINUS_I = np.array([1.0, -1.0j]) / np.sqrt(2)


class StrategyError(ValueError):
    """Raised for malformed strategies or words."""


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Strategy:
    """Immutable bipartite strategy.

    ``alice`` and ``bob`` map input labels to the tuple of POVM effects; the
    outcome of an effect is its position in the tuple.
    """

    state: np.ndarray
    dim_a: int
    dim_b: int
    alice: Mapping[Label, tuple[np.ndarray, ...]]
    bob: Mapping[Label, tuple[np.ndarray, ...]]

    def __post_init__(self):
        state = _frozen(np.ravel(self.state))
        if state.size != self.dim_a * self.dim_b:
            raise StrategyError(
                f"state has {state.size} amplitudes, expected {self.dim_a}*{self.dim_b}"
            )
        object.__setattr__(self, "state", state)
        for side, d in (("alice", self.dim_a), ("bob", self.dim_b)):
            fam = {}
            for label, effects in dict(getattr(self, side)).items():
                effs = tuple(_frozen(e) for e in effects)
                if not effs:
                    raise StrategyError(f"{side} input {label!r} has no effects")
                for e in effs:
                    if e.shape != (d, d):
                        raise StrategyError(
                            f"{side} input {label!r} has an effect of shape {e.shape}, expected {(d, d)}"
                        )
                fam[str(label)] = effs
            object.__setattr__(self, side, fam)
        arrays = [self.state] + [e for fam in (self.alice, self.bob) for es in fam.values() for e in es]
        if not all(np.all(np.isfinite(a)) for a in arrays):
            raise StrategyError("strategy contains non-finite entries")

    @property
    def dims(self) -> tuple[int, int]:
        return (self.dim_a, self.dim_b)

    @property
    def coefficient_matrix(self) -> np.ndarray:
        return self.state.reshape(self.dim_a, self.dim_b)

    def party(self, side: str) -> Mapping[Label, tuple[np.ndarray, ...]]:
        if side in ("A", "alice"):
            return self.alice
        if side in ("B", "bob"):
            return self.bob
        raise StrategyError(f"unknown party {side!r}")

    def effects(self, side: str) -> list[np.ndarray]:
        """All effects of one party, in label order."""
        return [e for es in self.party(side).values() for e in es]

    def observable(self, side: str, label: Label) -> np.ndarray:
        """``E_0 - E_1`` for a two-outcome input."""
        effs = self.party(side)[label]
        if len(effs) != 2:
            raise StrategyError(f"input {label!r} is not dichotomic")
        return effs[0] - effs[1]

    def is_dichotomic(self) -> bool:
        return all(len(es) == 2 for fam in (self.alice, self.bob) for es in fam.values())

    def replace(self, *, state=None, alice=None, bob=None, dims=None) -> "Strategy":
        da, db = dims if dims is not None else self.dims
        return Strategy(
            state=self.state if state is None else state,
            dim_a=da,
            dim_b=db,
            alice=self.alice if alice is None else alice,
            bob=self.bob if bob is None else bob,
        )


def from_observables(
    state: np.ndarray,
    dims: tuple[int, int],
    alice: Mapping[Label, np.ndarray],
    bob: Mapping[Label, np.ndarray],
) -> Strategy:
    """Strategy whose inputs are ±1 observables; outcome 0 is ``(I + A)/2``."""

    def pvms(obs, d):
        eye = np.eye(d)
        return {k: ((eye + a) / 2, (eye - a) / 2) for k, a in obs.items()}

    return Strategy(state, dims[0], dims[1], pvms(alice, dims[0]), pvms(bob, dims[1]))


# ------------------------------------------------------------------ predicates


@dataclass
class PredicateReport:
    valid: bool
    full_rank: bool
    support_preserving: bool
    zero_projective: bool
    projective: bool
    irreducible_a: bool
    irreducible_b: bool
    residuals: dict[str, float] = field(default_factory=dict)
    errors: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    def flags(self) -> dict[str, bool]:
        return {
            "valid": self.valid,
            "full_rank": self.full_rank,
            "support_preserving": self.support_preserving,
            "zero_projective": self.zero_projective,
            "projective": self.projective,
            "irreducible_A": self.irreducible_a,
            "irreducible_B": self.irreducible_b,
        }


def reduced_states(s: Strategy) -> tuple[np.ndarray, np.ndarray]:
    m = s.coefficient_matrix
    return m @ dagger(m), (dagger(m) @ m).T


def support_projector(rho: np.ndarray, tol: float = TOL) -> np.ndarray:
    w, v = np.linalg.eigh((rho + dagger(rho)) / 2)
    keep = v[:, w > tol]
    return keep @ dagger(keep)


def structural_errors(s: Strategy, tol: float = TOL) -> tuple[list[str], dict[str, float]]:
    errors = []
    res = {}
    norm_err = abs(np.linalg.norm(s.state) - 1.0)
    res["state_norm"] = norm_err
    if norm_err > tol:
        errors.append(f"state is not normalized (|norm - 1| = {norm_err:.3e})")
    herm = psd = comp = 0.0
    for side in ("A", "B"):
        d = s.dims[0] if side == "A" else s.dims[1]
        for label, effs in s.party(side).items():
            total = sum(effs)
            c = float(np.max(np.abs(total - np.eye(d))))
            comp = max(comp, c)
            if c > tol:
                errors.append(f"party {side} input {label!r}: effects sum to identity only up to {c:.3e}")
            for k, e in enumerate(effs):
                h = hermitian_residual(e)
                herm = max(herm, h)
                if h > tol:
                    errors.append(f"party {side} input {label!r} effect {k} is not hermitian ({h:.3e})")
                    continue
                m = float(np.min(np.linalg.eigvalsh((e + dagger(e)) / 2)))
                psd = max(psd, -m)
                if m < -tol:
                    errors.append(f"party {side} input {label!r} effect {k} is not positive (min eig {m:.3e})")
    res.update({"hermitian": herm, "positivity": psd, "completeness": comp})
    return errors, res


def validate(s: Strategy, tol: float = TOL) -> PredicateReport:
    """Compute the structural check and the predicate flags of a strategy.

    Full rank means both reduced states are invertible, i.e. the Schmidt
    rank equals both local dimensions; this keeps the implication
    "full rank => support preserving" true when ``dim_a != dim_b``.
    """
    from .algebra import is_irreducible

    errors, res = structural_errors(s, tol)
    warnings = []
    for side in ("A", "B"):
        for label, effs in s.party(side).items():
            for k, e in enumerate(effs):
                if np.max(np.abs(e)) <= tol:
                    warnings.append(f"party {side} input {label!r} effect {k} is zero")

    valid = not errors
    rank = schmidt_rank(s.state / max(np.linalg.norm(s.state), 1e-300), s.dim_a, s.dim_b, tol)
    full_rank = rank == s.dim_a == s.dim_b
    res["schmidt_rank"] = float(rank)

    rho_a, rho_b = reduced_states(s)
    pa, pb = support_projector(rho_a, tol), support_projector(rho_b, tol)
    comm = 0.0
    for p, side in ((pa, "A"), (pb, "B")):
        for e in s.effects(side):
            comm = max(comm, float(np.max(np.abs(p @ e - e @ p), initial=0.0)))
    res["support_commutator"] = comm

    zero = proj = 0.0
    for side, rho in (("A", rho_a), ("B", rho_b)):
        for e in s.effects(side):
            defect = e - e @ e
            proj = max(proj, float(np.max(np.abs(defect), initial=0.0)))
            zero = max(zero, abs(np.trace(defect @ rho)))
    res["zero_projective"] = float(zero)
    res["projective"] = proj

    irr_a = is_irreducible(s.effects("A"), tol=tol)
    irr_b = is_irreducible(s.effects("B"), tol=tol)

    return PredicateReport(
        valid=valid,
        full_rank=bool(full_rank),
        support_preserving=bool(comm <= tol),
        zero_projective=bool(zero <= tol),
        projective=bool(proj <= tol),
        irreducible_a=irr_a,
        irreducible_b=irr_b,
        residuals=res,
        errors=errors,
        warnings=warnings,
    )


# -------------------------------------------------------------- correlations


@dataclass(frozen=True)
class Correlation:
    """Conditional distribution ``p(a, b | x, y)`` keyed by ``(x, y, a, b)``."""

    table: dict[tuple[Label, Label, int, int], float]

    def __getitem__(self, key):
        return self.table[key]

    def __len__(self):
        return len(self.table)

    def keys(self):
        return self.table.keys()

    def items(self):
        return self.table.items()

    def max_difference(self, other: "Correlation") -> float:
        if set(self.table) != set(other.table):
            raise StrategyError("correlations have different keys")
        return max((abs(v - other.table[k]) for k, v in self.table.items()), default=0.0)

    def correlator(self, x: Label, y: Label) -> float:
        return sum(((-1) ** (a + b)) * p for (xx, yy, a, b), p in self.table.items() if (xx, yy) == (x, y))


class NumericalError(ArithmeticError):
    pass


def _sandwich(s: Strategy, a: np.ndarray) -> np.ndarray:
    m = s.coefficient_matrix
    return dagger(m) @ a @ m


def operator_moment(s: Strategy, a: np.ndarray, b: np.ndarray) -> complex:
    """``<psi| A (x) B |psi>`` for arbitrary local operators."""
    return complex(np.sum(_sandwich(s, a) * b))


def correlation(s: Strategy, tol: float = TOL) -> Correlation:
    table = {}
    for x, effs_a in s.alice.items():
        sandwiches = [_sandwich(s, e) for e in effs_a]
        for y, effs_b in s.bob.items():
            for a, c in enumerate(sandwiches):
                for b, f in enumerate(effs_b):
                    p = complex(np.sum(c * f))
                    if abs(p.imag) > tol:
                        raise NumericalError(f"p({a},{b}|{x},{y}) has imaginary part {p.imag:.3e}")
                    table[(x, y, a, b)] = p.real
    return Correlation(table)


_OUTCOME = re.compile(r"^[A-Za-z]*(\d+)$")


def parse_outcome(label) -> int:
    if isinstance(label, (int, np.integer)) and not isinstance(label, bool):
        return int(label)
    m = _OUTCOME.match(str(label))
    if not m:
        raise StrategyError(f"cannot read outcome label {label!r}")
    return int(m.group(1))


def word_operator(family: Mapping[Label, tuple[np.ndarray, ...]], word: Word, dim: int) -> np.ndarray:
    """Product of the word's effects, first letter applied first."""
    out = np.eye(dim, dtype=complex)
    for letter in word:
        try:
            x, a = letter
        except (TypeError, ValueError):
            raise StrategyError(f"malformed letter {letter!r}") from None
        if x not in family:
            raise StrategyError(f"unknown input label {x!r}")
        a = parse_outcome(a)
        if not 0 <= a < len(family[x]):
            raise StrategyError(f"input {x!r} has no outcome {a}")
        out = family[x][a] @ out
    return out


def observable_word_operator(s: Strategy, side: str, word: Sequence[Label]) -> np.ndarray:
    d = s.dims[0] if side in ("A", "alice") else s.dims[1]
    out = np.eye(d, dtype=complex)
    for x in word:
        if x not in s.party(side):
            raise StrategyError(f"unknown input label {x!r}")
        out = s.observable(side, x) @ out
    return out


def moment(s: Strategy, word_a: Word, word_b: Word) -> complex:
    """Higher moment ``<psi| E_{word_a} (x) F_{word_b} |psi>``."""
    return operator_moment(
        s, word_operator(s.alice, word_a, s.dim_a), word_operator(s.bob, word_b, s.dim_b)
    )


def observable_moment(s: Strategy, word_a: Sequence[Label], word_b: Sequence[Label]) -> complex:
    """Moment of products of the ±1 observables of dichotomic inputs."""
    return operator_moment(s, observable_word_operator(s, "A", word_a), observable_word_operator(s, "B", word_b))


# ---------------------------------------------------------------- transforms


def _map_effects(fam, fn):
    return {k: tuple(fn(e) for e in es) for k, es in fam.items()}


def conjugate(s: Strategy) -> Strategy:
    return s.replace(state=np.conj(s.state), alice=_map_effects(s.alice, np.conj), bob=_map_effects(s.bob, np.conj))


def real_simulation(s: Strategy) -> Strategy:
    """Real simulation on ``(C^2 (x) H_A) (x) (C^2 (x) H_B)``.

    The state is ``(|+i,+i>|psi> + |-i,-i>|conj psi>)/sqrt 2`` and each effect
    becomes ``|+i><+i| (x) E + |-i><-i| (x) conj(E)``. The qubit register
    is the most significant factor on each side.
    """
    da, db = s.dims
    psi = s.coefficient_matrix
    pp = np.einsum("r,s->rs", PLUS_I, PLUS_I)
    term = np.einsum("rs,ij->risj", pp, psi)
    state = np.sqrt(2) * term.real
    proj = np.outer(PLUS_I, np.conj(PLUS_I))

    def lift(e):
        return 2 * np.real(tensor(proj, e))

    return Strategy(
        state=state.reshape(-1),
        dim_a=2 * da,
        dim_b=2 * db,
        alice=_map_effects(s.alice, lift),
        bob=_map_effects(s.bob, lift),
    )


def real_part_strategy(s: Strategy, tol: float = TOL) -> Strategy:
    """Replace Bob's effects by their entrywise real parts.

    Requires the state and all of Alice's effects to be real; the resulting
    strategy then has the same correlation.
    """
    if np.max(np.abs(s.state.imag)) > tol:
        raise StrategyError("state is not real in the current basis")
    if any(np.max(np.abs(e.imag)) > tol for e in s.effects("A")):
        raise StrategyError("Alice's effects are not real in the current basis")
    return s.replace(bob=_map_effects(s.bob, lambda f: (f + np.conj(f)) / 2))


def local_unitary(s: Strategy, u_a: np.ndarray, u_b: np.ndarray) -> Strategy:
    """Conjugate by ``U_A (x) U_B``: state ``(U_A (x) U_B) psi`` and effects ``U E U*``."""
    m = u_a @ s.coefficient_matrix @ u_b.T
    return s.replace(
        state=m.reshape(-1),
        alice=_map_effects(s.alice, lambda e: u_a @ e @ dagger(u_a)),
        bob=_map_effects(s.bob, lambda f: u_b @ f @ dagger(u_b)),
    )


def generate_words(labels: Mapping[Label, int], max_len: int) -> Iterable[tuple[Letter, ...]]:
    """All POVM words up to ``max_len``, ordered by length then lexicographically."""
    letters = [(x, a) for x, n in labels.items() for a in range(n)]
    yield ()
    frontier: list[tuple[Letter, ...]] = [()]
    for _ in range(max_len):
        frontier = [w + (l,) for w in frontier for l in letters]
        yield from frontier
