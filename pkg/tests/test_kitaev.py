import numpy as np
import pytest
from hypothesis import given, strategies as st

from zdclock.kitaev import (PLAQUETTE_FORM, VERTEX_FORM, ScopeError, apply_plaquette, apply_star,
                            build_h0, build_kitaev_plaquette_form, build_kitaev_state,
                            build_kitaev_vertex_form, deformed_state, fidelity_direct,
                            fidelity_exact, h0_dense, log_norm_function, norm_function,
                            stabilizer_residuals, string_expectation, verify_hbeta_similarity)
from zdclock.lattice import axis_path, build_lattice, plaquette_path
from zdclock.qudit import DenseState, DomainError, MemoryCapError, apply_z, inner
from zdclock.bridge import alternate_path, kitaev

LAT2 = build_lattice(2)


def literal_vertex_form(lat, d):
    """prod_v (1 + A_v + ... + A_v^{d-1}) |0...0>, applied operator by operator."""
    psi = DenseState.basis(d, lat.N, [0] * lat.N)
    for v in range(lat.V):
        acc = np.zeros_like(psi.amplitudes)
        for k in range(d):
            acc += apply_star(lat, psi, v, k).amplitudes
        psi = DenseState(d, lat.N, acc)
    return psi.normalized()


def literal_plaquette_form(lat, d):
    psi = DenseState(d, lat.N, np.ones(d ** lat.N))
    for p in range(lat.P):
        acc = np.zeros_like(psi.amplitudes)
        for k in range(d):
            acc += apply_plaquette(lat, psi, p, k).amplitudes
        psi = DenseState(d, lat.N, acc)
    return psi.normalized()


@pytest.mark.parametrize("d", [2, 3])
def test_vertex_form_matches_literal_operators(d):
    K = build_kitaev_vertex_form(LAT2, d)
    assert np.allclose(K.state.amplitudes, literal_vertex_form(LAT2, d).amplitudes, atol=1e-12)


def test_plaquette_form_matches_literal_operators():
    K = build_kitaev_plaquette_form(LAT2, 2)
    assert np.allclose(K.state.amplitudes, literal_plaquette_form(LAT2, 2).amplitudes, atol=1e-12)


@pytest.mark.parametrize("d,form,size", [(2, VERTEX_FORM, 8), (3, VERTEX_FORM, 27),
                                         (2, PLAQUETTE_FORM, 32), (3, PLAQUETTE_FORM, 3 ** 5)])
def test_support_sizes(d, form, size):
    K = build_kitaev_state(LAT2, d, form)
    assert K.support.size == size
    amps = np.abs(K.state.amplitudes[K.support])
    assert np.allclose(amps, amps[0])
    assert abs(K.state.norm() - 1) < 1e-12


@pytest.mark.parametrize("d", [2, 3, 5])
@pytest.mark.parametrize("form", [VERTEX_FORM, PLAQUETTE_FORM])
def test_stabilizers(d, form):
    res = stabilizer_residuals(build_kitaev_state(LAT2, d, form))
    assert res["plaquette"] <= 1e-10 and res["vertex"] <= 1e-10


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_stabilizers_random_orientation(seed):
    flip = np.random.default_rng(seed).random(8) < 0.5
    lat = build_lattice(2, flip=flip)
    for form in (VERTEX_FORM, PLAQUETTE_FORM):
        res = stabilizer_residuals(build_kitaev_state(lat, 3, form))
        assert max(res.values()) <= 1e-10


def test_stabilizer_check_detects_violation():
    K = build_kitaev_vertex_form(LAT2, 3)
    bad = apply_z(K.state, 0)       # creates charges at the ends of edge 0
    assert inner(bad, apply_star(LAT2, bad, 0)).real < 0.9


@pytest.mark.parametrize("d", [2, 3])
def test_form_overlap(d):
    a = build_kitaev_vertex_form(LAT2, d).state
    b = build_kitaev_plaquette_form(LAT2, d).state
    assert abs(abs(inner(a, b)) ** 2 - 1 / d ** 2) < 1e-12


def test_memory_cap_on_build():
    with pytest.raises(MemoryCapError):
        build_kitaev_vertex_form(LAT2, 3, cap=1000)
    with pytest.raises(ValueError):
        build_kitaev_state(LAT2, 2, "edge")


def test_deformed_state_examples():
    K = kitaev(3, 2)
    assert np.allclose(deformed_state(K, 0.0).amplitudes, K.state.amplitudes)
    beta = 0.37
    psi = deformed_state(K, beta).amplitudes[K.support]
    expect = np.exp(beta * K.support_bond_sum)            # square root of exp(2 beta C)
    assert np.allclose(psi / psi[0], expect / expect[0])
    K2 = kitaev(2, 2)
    assert abs(deformed_state(K2, 20.0).amplitudes[0]) ** 2 >= 1 - 1e-6
    with pytest.raises(DomainError):
        deformed_state(K, np.inf)


def test_deformed_state_large_beta_branch_is_continuous():
    K = kitaev(3, 2)
    a = deformed_state(K, 5.0).amplitudes
    b = deformed_state(K, 5.0 + 1e-12).amplitudes
    assert np.allclose(a, b, atol=1e-9)


def test_norm_function():
    K = kitaev(2, 2)
    assert abs(norm_function(K, 0.0) - 1) < 1e-14
    betas = np.linspace(0, 3, 61)
    z = norm_function(K, betas)
    assert np.all(np.diff(z) > 0)
    for d in (2, 3, 5):
        lz = log_norm_function(kitaev(d, 2), np.linspace(-2, 8, 101))
        assert np.all(lz[2:] - 2 * lz[1:-1] + lz[:-2] >= -1e-9)
    assert np.isfinite(log_norm_function(K, 400.0))


@given(beta=st.floats(0.1, 1.5), dbeta=st.floats(1e-3, 5e-2))
def test_fidelity_two_routes(beta, dbeta):
    K = kitaev(3, 2)
    f = fidelity_exact(K, beta, dbeta)
    assert f <= 1.0
    assert abs(f - fidelity_direct(K, beta, dbeta)) <= 1e-10


def test_fidelity_edge_cases():
    K = kitaev(3, 2)
    assert fidelity_exact(K, 0.5, 0.0) == 1.0
    with pytest.raises(DomainError):
        fidelity_exact(K, 0.5, -0.1)
    assert abs(fidelity_exact(K, 0.5, 1e-2) - fidelity_direct(K, 0.5, 1e-2)) <= 1e-10


def literal_string(K, beta, path):
    """<psi| (prod Z^tau + prod Z^-tau)/2 |psi> by applying Z operators one edge at a time."""
    psi = deformed_state(K, beta)
    plus, minus = psi, psi
    for e, t in path.steps:
        plus = apply_z(plus, int(e), int(t))
        minus = apply_z(minus, int(e), -int(t))
    return 0.5 * (inner(psi, plus) + inner(psi, minus))


@pytest.mark.parametrize("d", [2, 3, 5])
def test_string_operator_matches_literal(d):
    K = kitaev(d, 2)
    for l in range(1, 4):
        path = axis_path(K.lattice, 0, l)
        val = literal_string(K, 0.6, path)
        assert abs(val.imag) < 1e-12
        assert abs(val.real - string_expectation(K, 0.6, path)) < 1e-12


def test_string_examples():
    K = kitaev(3, 2)
    lat = K.lattice
    assert abs(string_expectation(K, 0.0, axis_path(lat, 0, 3))) < 1e-12
    for beta in (0.0, 0.4, 2.0):
        for p in range(lat.P):
            assert abs(string_expectation(K, beta, plaquette_path(lat, p)) - 1) < 1e-12


@pytest.mark.parametrize("d", [3, 5])
def test_string_path_independence(d):
    K = kitaev(d, 2)
    lat = K.lattice
    for l in range(1, lat.V):
        vals = [string_expectation(K, 0.7, p) for p in
                (axis_path(lat, 0, l), axis_path(lat, 0, l, x_first=False), alternate_path(lat, 0, l))]
        assert np.ptp(vals) < 1e-12


def test_h0_spectrum_and_ground_vectors():
    H = h0_dense(LAT2, 2)
    assert np.allclose(H, H.conj().T)
    evals = np.linalg.eigvalsh(H)
    assert abs(evals[0] + 16) < 1e-10
    assert int(np.sum(np.abs(evals - evals[0]) < 1e-8)) == 4
    op = build_h0(LAT2, 2)
    rng = np.random.default_rng(0)
    a = rng.normal(size=256) + 1j * rng.normal(size=256)
    b = rng.normal(size=256) + 1j * rng.normal(size=256)
    assert abs(np.vdot(a, op.matvec(b)) - np.conj(np.vdot(b, op.matvec(a)))) < 1e-10
    for form in (VERTEX_FORM, PLAQUETTE_FORM):
        psi = build_kitaev_state(LAT2, 2, form).state.amplitudes
        assert np.linalg.norm(op.matvec(psi) + 16 * psi) < 1e-10


def test_h0_dense_scope():
    with pytest.raises(ScopeError):
        h0_dense(LAT2, 3)


@pytest.mark.parametrize("beta", [0.0, 0.5])
def test_similarity(beta):
    rep = verify_hbeta_similarity(LAT2, 2, beta)
    assert rep.passed
    assert rep.degeneracy == 4 and abs(rep.ground_energy + 16) < 1e-10
    assert rep.max_spectrum_deviation <= 1e-6
