"""The four-anticommuting-observables self-test and CHSH-type functionals.

Observables are ±1 hermitian unitaries turned into two-outcome PVMs with
outcome 0 on the +1 eigenspace, so a correlator is
``sum_{a,b} (-1)^(a+b) p(a,b|x,y)``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
import scipy.linalg

from .linalg import (
    I2,
    SIGMA_X,
    SIGMA_Y,
    SIGMA_Z,
    TOL,
    dagger,
    haar_unitary,
    hermitian_sign,
    op_norm,
    random_hermitian,
    tensor,
)
from .strategy import Strategy, StrategyError, correlation, from_observables

SQRT2 = np.sqrt(2.0)
PAIRS = list(itertools.combinations(range(1, 5), 2))

X1 = tensor(SIGMA_Z, I2)
X2 = tensor(SIGMA_X, I2)
X3 = tensor(SIGMA_Y, SIGMA_Z)
X4 = tensor(SIGMA_Y, SIGMA_Y)
QUATERNION_OBSERVABLES = (X1, X2, X3, X4)


def max_entangled(d: int) -> np.ndarray:
    return np.eye(d, dtype=complex).reshape(-1) / np.sqrt(d)


def bob_label(l: int, m: int, sign: str) -> str:
    return f"y{l}{m}{sign}"


def bob_quaternion_observables() -> dict[str, np.ndarray]:
    xs = QUATERNION_OBSERVABLES
    out = {}
    for l, m in PAIRS:
        out[bob_label(l, m, "+")] = (xs[l - 1] + xs[m - 1]).T / SQRT2
        out[bob_label(l, m, "-")] = (xs[l - 1] - xs[m - 1]).T / SQRT2
    return out


def build_quaternion_strategy() -> Strategy:
    alice = {f"x{k + 1}": x for k, x in enumerate(QUATERNION_OBSERVABLES)}
    return from_observables(max_entangled(4), (4, 4), alice, bob_quaternion_observables())


def build_chsh_strategy() -> Strategy:
    alice = {"x0": SIGMA_Z, "x1": SIGMA_X}
    bob = {"y0": (SIGMA_Z + SIGMA_X) / SQRT2, "y1": (SIGMA_Z - SIGMA_X) / SQRT2}
    return from_observables(max_entangled(2), (2, 2), alice, bob)


def build_pauli3_strategy() -> Strategy:
    paulis = {"X": SIGMA_X, "Y": SIGMA_Y, "Z": SIGMA_Z}
    return from_observables(max_entangled(2), (2, 2), paulis, paulis)


BUILTINS = {
    "quaternion": build_quaternion_strategy,
    "chsh": build_chsh_strategy,
    "pauli3": build_pauli3_strategy,
}


# ------------------------------------------------------------ functionals


@dataclass
class BellFunctional:
    coefficients: dict[tuple[str, str, int, int], float]
    offset: float = 0.0

    def __post_init__(self):
        if not all(np.isfinite(c) for c in self.coefficients.values()) or not np.isfinite(self.offset):
            raise ValueError("Bell functional coefficients must be finite")

    def __add__(self, other: "BellFunctional") -> "BellFunctional":
        coeffs = dict(self.coefficients)
        for k, v in other.coefficients.items():
            coeffs[k] = coeffs.get(k, 0.0) + v
        return BellFunctional(coeffs, self.offset + other.offset)

    def inputs(self) -> tuple[list[str], list[str]]:
        xs = sorted({k[0] for k in self.coefficients}, key=str)
        ys = sorted({k[1] for k in self.coefficients}, key=str)
        return xs, ys


def correlator_functional(weights: Mapping[tuple[str, str], float]) -> BellFunctional:
    """Functional ``sum w(x,y) <A_x B_y>`` for dichotomic inputs."""
    coeffs = {}
    for (x, y), w in weights.items():
        for a in (0, 1):
            for b in (0, 1):
                key = (x, y, a, b)
                coeffs[key] = coeffs.get(key, 0.0) + w * (-1) ** (a + b)
    return BellFunctional(coeffs)


def chsh_functional(a1="x0", a2="x1", b1="y0", b2="y1") -> BellFunctional:
    """``<(A1 + A2) B1 + (A1 - A2) B2>``."""
    return correlator_functional({(a1, b1): 1.0, (a2, b1): 1.0, (a1, b2): 1.0, (a2, b2): -1.0})


def block_chsh_functional(l: int, m: int) -> BellFunctional:
    return chsh_functional(f"x{l}", f"x{m}", bob_label(l, m, "+"), bob_label(l, m, "-"))


def six_chsh_functional() -> BellFunctional:
    total = BellFunctional({})
    for l, m in PAIRS:
        total = total + block_chsh_functional(l, m)
    return total


def zero_functional() -> BellFunctional:
    return BellFunctional({})


def bell_value(s: Strategy, f: BellFunctional, tol: float = TOL) -> float:
    p = correlation(s, tol)
    total = f.offset
    for key, c in f.coefficients.items():
        if key not in p.table:
            raise StrategyError(f"functional term {key} is not covered by the strategy")
        total += c * p.table[key]
    return float(total)


def bell_operator(s: Strategy, f: BellFunctional) -> np.ndarray:
    d = s.dim_a * s.dim_b
    out = f.offset * np.eye(d, dtype=complex)
    for (x, y, a, b), c in f.coefficients.items():
        out += c * np.kron(s.alice[x][a], s.bob[y][b])
    return out


def classical_bound(f: BellFunctional, alice: Mapping[str, int], bob: Mapping[str, int]) -> float:
    """Maximum over deterministic local strategies (exact enumeration on Alice's side)."""
    xs, ys = list(alice), list(bob)
    best = -np.inf
    for outs in itertools.product(*[range(alice[x]) for x in xs]):
        assign = dict(zip(xs, outs))
        val = f.offset
        for y in ys:
            val += max(
                sum(f.coefficients.get((x, y, assign[x], b), 0.0) for x in xs) for b in range(bob[y])
            )
        best = max(best, val)
    return float(best)


# ----------------------------------------------------------- spectral check


@dataclass
class EigenCheck:
    max_eigenvalue: float
    eigengap: float
    fidelity_with_phi4: float


def bell_operator_eigencheck() -> EigenCheck:
    w_op = tensor(X1, X1) + tensor(X2, X2) - tensor(X3, X3) + tensor(X4, X4)
    w, v = np.linalg.eigh(w_op)
    top = v[:, -1]
    fid = abs(np.vdot(max_entangled(4), top)) ** 2
    return EigenCheck(float(w[-1]), float(w[-1] - w[-2]), float(fid))


def anticommutation_residual(observables: Sequence[np.ndarray], tol: float = TOL) -> float:
    obs = [np.asarray(a, dtype=complex) for a in observables]
    for a in obs:
        if np.max(np.abs(a - dagger(a))) > tol or np.max(np.abs(a @ a - np.eye(a.shape[0]))) > tol:
            raise ValueError("observables must be hermitian unitaries")
    return max((op_norm(a @ b + b @ a) for a, b in itertools.combinations(obs, 2)), default=0.0)


# ------------------------------------------------------------------ see-saw


@dataclass
class Scenario:
    alice: dict[str, int]
    bob: dict[str, int]

    def require_dichotomic(self):
        if any(n != 2 for n in list(self.alice.values()) + list(self.bob.values())):
            raise ValueError("see-saw needs a dichotomic (two-outcome) scenario")


def quaternion_scenario() -> Scenario:
    return Scenario({f"x{k}": 2 for k in range(1, 5)}, {bob_label(l, m, s): 2 for l, m in PAIRS for s in "+-"})


def chsh_scenario() -> Scenario:
    return Scenario({"x0": 2, "x1": 2}, {"y0": 2, "y1": 2})


@dataclass
class SeesawResult:
    best_value: float
    best_strategy: Strategy
    restarts: int
    iterations: list[int]
    seed: int
    values: list[float] = field(default_factory=list)
    traces: list[list[float]] = field(default_factory=list)
    best_restart: int = 0


def _correlator_form(f: BellFunctional, scen: Scenario):
    """Rewrite ``f`` as ``k0 + sum alpha_x A_x + sum beta_y B_y + sum gamma_xy A_x B_y``."""
    xs, ys = list(scen.alice), list(scen.bob)
    xi, yi = {x: i for i, x in enumerate(xs)}, {y: j for j, y in enumerate(ys)}
    k0 = f.offset
    alpha, beta = np.zeros(len(xs)), np.zeros(len(ys))
    gamma = np.zeros((len(xs), len(ys)))
    for (x, y, a, b), c in f.coefficients.items():
        if x not in xi or y not in yi or a not in (0, 1) or b not in (0, 1):
            raise ValueError(f"functional term {(x, y, a, b)} is outside the scenario")
        sa, sb = (-1) ** a, (-1) ** b
        k0 += c / 4
        alpha[xi[x]] += c * sa / 4
        beta[yi[y]] += c * sb / 4
        gamma[xi[x], yi[y]] += c * sa * sb / 4
    return k0, alpha, beta, gamma


def _seed_observable(d: int, rng: np.random.Generator) -> np.ndarray:
    signs = np.where(np.arange(d) < (d + 1) // 2, 1.0, -1.0)
    u = haar_unitary(d, rng)
    return (u * signs) @ dagger(u)


def _operator(k0, alpha, beta, gamma, obs_a, obs_b, da, db):
    ia, ib = np.eye(da), np.eye(db)
    w = k0 * np.eye(da * db, dtype=complex)
    for i, a in enumerate(obs_a):
        w += alpha[i] * np.kron(a, ib)
    for j, b in enumerate(obs_b):
        w += beta[j] * np.kron(ia, b)
    for i, a in enumerate(obs_a):
        for j, b in enumerate(obs_b):
            if gamma[i, j]:
                w += gamma[i, j] * np.kron(a, b)
    return w


def _expectation(w, psi) -> float:
    return float(np.vdot(psi, w @ psi).real)


def _single_run(form, da, db, n_a, n_b, rng, max_iter, tol, monotone_tol):
    k0, alpha, beta, gamma = form
    obs_a = [_seed_observable(da, rng) for _ in range(n_a)]
    obs_b = [_seed_observable(db, rng) for _ in range(n_b)]
    w = _operator(k0, alpha, beta, gamma, obs_a, obs_b, da, db)
    evals, evecs = np.linalg.eigh(w)
    psi = evecs[:, -1]
    value = float(evals[-1])
    trace = [value]
    it = 0
    for it in range(1, max_iter + 1):
        m = psi.reshape(da, db)
        # Alice: G_x = M L_x^T M* with L_x = alpha_x Id + sum_y gamma_xy B_y
        for i in range(n_a):
            lx = alpha[i] * np.eye(db) + sum(gamma[i, j] * obs_b[j] for j in range(n_b))
            obs_a[i] = hermitian_sign(m @ lx.T @ dagger(m))
        # Bob: G_y = (M* K_y M)^T with K_y = beta_y Id + sum_x gamma_xy A_x
        for j in range(n_b):
            ky = beta[j] * np.eye(da) + sum(gamma[i, j] * obs_a[i] for i in range(n_a))
            obs_b[j] = hermitian_sign((dagger(m) @ ky @ m).T)
        w = _operator(k0, alpha, beta, gamma, obs_a, obs_b, da, db)
        evals, evecs = np.linalg.eigh(w)
        psi = evecs[:, -1]
        new = float(evals[-1])
        if new < value - monotone_tol:
            raise RuntimeError(f"see-saw value decreased from {value!r} to {new!r}")
        trace.append(new)
        improvement = new - value
        value = max(value, new)
        if improvement < tol:
            break
    return value, obs_a, obs_b, psi, it, trace


def seesaw_optimize(
    dims: tuple[int, int],
    scenario: Scenario,
    f: BellFunctional,
    seed: int = 0,
    restarts: int = 10,
    max_iter: int = 10_000,
    tol: float = 1e-12,
    monotone_tol: float = 1e-9,
) -> SeesawResult:
    """Alternating maximization of ``f`` over ±1 observables and the state.

    Every restart draws its own generator from ``SeedSequence(seed)``, so
    results do not depend on the order in which restarts run.
    """
    scenario.require_dichotomic()
    da, db = dims
    form = _correlator_form(f, scenario)
    n_a, n_b = len(scenario.alice), len(scenario.bob)
    children = np.random.SeedSequence(seed).spawn(restarts)
    best = None
    iterations, values, traces = [], [], []
    for r, child in enumerate(children):
        rng = np.random.default_rng(child)
        value, obs_a, obs_b, psi, it, trace = _single_run(form, da, db, n_a, n_b, rng, max_iter, tol, monotone_tol)
        iterations.append(it)
        values.append(value)
        traces.append(trace)
        if best is None or value > best[0]:
            best = (value, obs_a, obs_b, psi, r)
    value, obs_a, obs_b, psi, r = best
    strategy = from_observables(
        psi, dims, dict(zip(scenario.alice, obs_a)), dict(zip(scenario.bob, obs_b))
    )
    return SeesawResult(value, strategy, restarts, iterations, seed, values, traces, r)


# -------------------------------------------------------------- perturbation


def perturb_and_evaluate(
    s: Strategy, eps: float, seed: int = 0, f: BellFunctional | None = None
) -> float:
    """Bell value after rotating every measurement by ``exp(i eps H)``.

    Each input gets its own random hermitian ``H`` of unit operator norm;
    the rotated effects ``U E U*`` are again a PVM when ``E`` was one.
    """
    if not 0.0 <= eps <= 1.0:
        raise ValueError("eps must lie in [0, 1]")
    f = six_chsh_functional() if f is None else f
    rng = np.random.default_rng(seed)

    def rotate(fam, d):
        out = {}
        for label, effs in fam.items():
            h = random_hermitian(d, rng)
            h = h / op_norm(h)
            u = scipy.linalg.expm(1j * eps * h)
            out[label] = tuple(u @ e @ dagger(u) for e in effs)
        return out

    return bell_value(s.replace(alice=rotate(s.alice, s.dim_a), bob=rotate(s.bob, s.dim_b)), f)
