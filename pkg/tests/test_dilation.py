from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bellkit.dilation import (
    DilationError,
    DilationWitness,
    NotSupportPreserving,
    ancilla_extension,
    check_complex_local_dilation,
    check_local_dilation,
    direct_sum_to_register,
    identity_witness,
    lift_to_real_simulations,
    naimark_dilate,
    real_simulation_dilation_witness,
    real_simulation_direct_sum_witness,
    restrict_to_support,
    restriction_witnesses,
    standard_to_complex,
)
from bellkit.linalg import I2, J, SIGMA_X, SIGMA_Z, direct_sum, random_unit_vector
from bellkit.randomize import complex_mixture, random_povm, random_strategy, support_preserving_strategy
from bellkit.selftest import BUILTINS, build_chsh_strategy, build_quaternion_strategy
from bellkit.strategy import Strategy, conjugate, correlation, from_observables, real_simulation, validate


def random_aux(rng, ha, hb):
    a = rng.standard_normal(2 * ha * hb) + 1j * rng.standard_normal(2 * ha * hb)
    a /= np.linalg.norm(a)
    return a[: ha * hb], a[ha * hb :]


def test_identity_witness_passes():
    s = build_chsh_strategy()
    rep = check_local_dilation(s, s, identity_witness(s))
    assert rep.max_residual < 1e-14
    assert rep.passed


def test_ancilla_extension_passes_and_bad_witness_fails():
    rng = np.random.default_rng(0)
    s = random_strategy((2, 3), rng)
    ext, w = ancilla_extension(s, random_unit_vector(6, rng), (2, 3))
    assert check_local_dilation(ext, s, w).passed
    swapped = DilationWitness(w.u_a[::-1], w.u_b, w.aux0, w.aux1, w.aux_dims)
    rep = check_local_dilation(ext, s, swapped)
    assert not rep.passed
    assert rep.max_residual > 0.1


def test_shape_and_normalization_errors():
    s = build_chsh_strategy()
    with pytest.raises(DilationError):
        check_local_dilation(s, s, DilationWitness(np.eye(3), np.eye(2), [1.0], [0.0], (1, 1)))
    with pytest.raises(DilationError):
        check_local_dilation(s, s, DilationWitness(np.eye(2), np.eye(2), [0.5], [0.0], (1, 1)))
    with pytest.raises(DilationError):
        DilationWitness(np.eye(2), np.eye(2), [1.0, 0.0], [0.0], (1, 1))
    q = build_quaternion_strategy()
    with pytest.raises(DilationError):
        check_local_dilation(s, q, identity_witness(s))


def test_complex_check_reduces_to_standard_for_aux1_zero():
    rng = np.random.default_rng(1)
    s = random_strategy((2, 2), rng)
    ext, w = ancilla_extension(s, random_unit_vector(4, rng), (2, 2))
    std = check_local_dilation(ext, s, w)
    cplx = check_complex_local_dilation(ext, s, standard_to_complex(w))
    assert cplx.passed
    assert abs(std.max_residual - cplx.max_residual) < 1e-12


@pytest.mark.parametrize("name", sorted(BUILTINS))
def test_real_simulation_witness(name):
    s = BUILTINS[name]()
    sr = real_simulation(s)
    w = real_simulation_dilation_witness(s)
    rep = check_complex_local_dilation(sr, s, w)
    assert rep.max_residual <= 1e-10
    assert abs(np.vdot(w.aux0, w.aux0).real - 0.5) < 1e-15
    assert abs(np.vdot(w.aux1, w.aux1).real - 0.5) < 1e-15
    ds = direct_sum_to_register(real_simulation_direct_sum_witness(s))
    assert check_complex_local_dilation(sr, s, ds).max_residual <= 1e-10


def test_real_strategy_real_simulation_is_standard_dilation():
    s = build_chsh_strategy()
    sr = real_simulation(s)
    w = real_simulation_dilation_witness(s)
    # for real s both branches agree, so the flag register can be absorbed into the ancilla
    u_a = w.u_a.reshape(2, 2, 4).reshape(4, 4)
    u_b = w.u_b.reshape(2, 2, 4).reshape(4, 4)
    aux = np.zeros(4, dtype=complex)
    aux[0] = aux[3] = 1 / np.sqrt(2)
    rep = check_local_dilation(sr, s, DilationWitness(u_a, u_b, aux, np.zeros(4), (2, 2)))
    assert rep.passed


def test_conjugate_quaternion_strategy_dilates_through_intertwiner():
    q = build_quaternion_strategy()
    k = np.kron(I2, J)
    e0 = np.array([[1.0], [0.0]])
    w = DilationWitness(np.kron(k, e0), np.kron(k, e0), [1.0], [0.0], (1, 1))
    assert check_complex_local_dilation(conjugate(q), q, w).max_residual <= 1e-10
    e1 = np.array([[0.0], [1.0]])
    flagged = DilationWitness(np.kron(np.eye(4), e1), np.kron(np.eye(4), e1), [0.0], [1.0], (1, 1))
    assert check_complex_local_dilation(conjugate(q), q, flagged).passed


def test_naimark_examples():
    chsh = build_chsh_strategy()
    assert naimark_dilate(chsh) is chsh
    s = chsh.replace(alice={"x0": (np.eye(2) / 2, np.eye(2) / 2), "x1": chsh.alice["x1"]})
    n = naimark_dilate(s)
    assert n.dim_a == 4 and n.dim_b == 2
    assert validate(n).projective
    assert correlation(n).max_difference(correlation(s)) <= 1e-12
    kets = [np.array([np.cos(t), np.sin(t)]) for t in (0, 2 * np.pi / 3, 4 * np.pi / 3)]
    trine = tuple(2 / 3 * np.outer(v, v) for v in kets)
    t = Strategy(np.array([1, 0, 0, 1]) / np.sqrt(2), 2, 2, {"x": trine}, {"y": chsh.bob["y0"]})
    nt = naimark_dilate(t)
    assert nt.dim_a == 6
    assert validate(nt).projective
    assert correlation(nt).max_difference(correlation(t)) <= 1e-12


@settings(max_examples=20, deadline=None)
@given(st.integers(1, 3), st.integers(1, 3), st.integers(2, 4), st.integers(0, 2**32 - 1))
def test_naimark_random(da, db, n, seed):
    rng = np.random.default_rng(seed)
    s = random_strategy((da, db), rng, n_outcomes=n)
    s = s.replace(alice={**s.alice, "x9": random_povm(da, n + 1, rng)})
    nd = naimark_dilate(s)
    assert validate(nd).projective
    assert validate(nd).valid
    assert correlation(nd).max_difference(correlation(s)) <= 1e-12


def test_restrict_examples():
    chsh = build_chsh_strategy()
    assert restrict_to_support(chsh) is chsh
    psi = np.zeros(4)
    psi[0] = 1
    z = from_observables(psi, (2, 2), {"z": SIGMA_Z}, {"z": SIGMA_Z})
    r = restrict_to_support(z)
    assert r.dims == (1, 1)
    assert correlation(r).max_difference(correlation(z)) <= 1e-12
    padded_state = np.zeros((3, 3), dtype=complex)
    padded_state[:2, :2] = chsh.coefficient_matrix
    pad = lambda fam: {k: tuple(direct_sum(e, np.eye(1) * (i == 0)) for i, e in enumerate(es)) for k, es in fam.items()}
    padded = Strategy(padded_state.reshape(-1), 3, 3, pad(chsh.alice), pad(chsh.bob))
    rp = restrict_to_support(padded)
    assert rp.dims == (2, 2)
    assert validate(rp).full_rank
    assert correlation(rp).max_difference(correlation(padded)) <= 1e-12


def test_restrict_rejects_non_support_preserving():
    psi = np.zeros(4)
    psi[0] = 1
    s = from_observables(psi, (2, 2), {"x": SIGMA_X}, {"z": SIGMA_Z})
    with pytest.raises(NotSupportPreserving) as err:
        restrict_to_support(s)
    assert err.value.commutator > 0.1


@settings(max_examples=20, deadline=None)
@given(st.integers(2, 4), st.integers(2, 4), st.booleans(), st.integers(0, 2**32 - 1))
def test_restriction_and_witnesses(da, db, projective, seed):
    rng = np.random.default_rng(seed)
    r = int(rng.integers(1, min(da, db) + 1))
    s = support_preserving_strategy((da, db), r, rng, projective=projective)
    res = restrict_to_support(s)
    assert res.dims == (r, r)
    assert validate(res).full_rank
    assert correlation(res).max_difference(correlation(s)) <= 1e-12
    forward, backward = restriction_witnesses(s)
    assert check_local_dilation(s, res, forward).passed
    assert check_local_dilation(res, s, backward).passed


def test_lift_on_real_simulation_witnesses():
    for name, build in BUILTINS.items():
        s = build()
        sr = real_simulation(s)
        w = real_simulation_dilation_witness(s)
        lifted = lift_to_real_simulations(w, sr.dims, s.dims)
        assert check_local_dilation(real_simulation(sr), real_simulation(s), lifted).passed, name


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 2), st.integers(1, 2), st.integers(1, 3), st.integers(0, 2**32 - 1))
def test_lift_with_complex_ancillas(ha, hb, d, seed):
    rng = np.random.default_rng(seed)
    t = random_strategy((d, 2), rng, n_outcomes=2)
    aux0, aux1 = random_aux(rng, ha, hb)
    s, w = complex_mixture(t, aux0, aux1, (ha, hb), rng)
    assert check_complex_local_dilation(s, t, w).passed
    assert correlation(s).max_difference(correlation(t)) <= 1e-12
    lifted = lift_to_real_simulations(w, s.dims, t.dims)
    rep = check_local_dilation(real_simulation(s), real_simulation(t), lifted)
    assert rep.passed, rep.max_residual


def test_flags_agree_across_complex_dilations():
    rng = np.random.default_rng(2)
    for _ in range(10):
        t = support_preserving_strategy((3, 3), 2, rng)
        if rng.integers(0, 2):
            t = random_strategy((3, 3), rng, projective=True, state_rank=2)
        aux0, aux1 = random_aux(rng, 1, 2)
        s, w = complex_mixture(t, aux0, aux1, (1, 2), rng)
        assert check_complex_local_dilation(s, t, w).passed
        fs, ft = validate(s), validate(t)
        assert fs.support_preserving == ft.support_preserving
        assert fs.zero_projective == ft.zero_projective
