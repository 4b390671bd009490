import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

from zdclock.lattice import (LatticeError, OrientedPath, axis_path, build_lattice,
                             plaquette_path, plaquette_signs, vertex_signs)


@pytest.mark.parametrize("L,V,N,P", [(2, 4, 8, 4), (3, 9, 18, 9)])
def test_counts(L, V, N, P):
    lat = build_lattice(L)
    assert (lat.V, lat.N, lat.P) == (V, N, P)


@pytest.mark.parametrize("L", [1, 0, -3, 2.5])
def test_invalid_size(L):
    with pytest.raises(LatticeError):
        build_lattice(L)


@pytest.mark.parametrize("L", range(2, 9))
def test_incidence_invariants(L):
    lat = build_lattice(L)
    assert np.all(lat.tail != lat.head)
    assert np.all(np.bincount(lat.plaquette_edges.ravel(), minlength=lat.N) == 2)
    assert np.all(np.bincount(lat.star_edges.ravel(), minlength=lat.N) == 2)
    for row in np.concatenate([lat.plaquette_edges, lat.star_edges]):
        assert len(set(row.tolist())) == 4
    # each edge is +1 in its tail star and -1 in its head star
    for v in range(lat.V):
        for e, g in vertex_signs(lat, v):
            assert (lat.tail[e] == v) == (g == 1)
            assert (lat.head[e] == v) == (g == -1)
    # signs: two +1 and two -1 everywhere with the default orientation
    assert np.all(lat.plaquette_sigma.sum(axis=1) == 0)
    assert np.all(lat.star_gamma.sum(axis=1) == 0)
    assert lat.plaquette_sigma[:, :2].min() == 1 and lat.plaquette_sigma[:, 2:].max() == -1


@pytest.mark.parametrize("L", range(2, 7))
def test_plaquette_and_star_chains_close(L):
    lat = build_lattice(L)
    total = np.zeros(lat.N, dtype=np.int64)
    np.add.at(total, lat.plaquette_edges.ravel(), lat.plaquette_sigma.ravel())
    assert not total.any()
    total[:] = 0
    np.add.at(total, lat.star_edges.ravel(), lat.star_gamma.ravel())
    assert not total.any()


@given(L=st.integers(2, 7), d=st.integers(2, 7), seed=st.integers(0, 2 ** 32 - 1),
       flip_seed=st.integers(0, 2 ** 32 - 1))
def test_gradient_has_zero_flux(L, d, seed, flip_seed):
    flip = np.random.default_rng(flip_seed).random(2 * L * L) < 0.5
    lat = build_lattice(L, flip=flip)
    m = np.random.default_rng(seed).integers(-50, 50, size=lat.V)
    assert not lat.plaquette_flux(lat.gradient(m, d), d).any()


@given(L=st.integers(2, 7), k=st.integers(0, 48), l=st.integers(0, 48),
       flip_seed=st.integers(0, 2 ** 32 - 1))
def test_path_boundary(L, k, l, flip_seed):
    flip = np.random.default_rng(flip_seed).random(2 * L * L) < 0.5
    lat = build_lattice(L, flip=flip)
    k, l = k % lat.V, l % lat.V
    if k == l:
        with pytest.raises(LatticeError):
            axis_path(lat, k, l)
        return
    path = axis_path(lat, k, l)
    expect = np.zeros(lat.V, dtype=np.int64)
    expect[k] += 1
    expect[l] -= 1
    assert np.array_equal(lat.boundary(path.chain(lat.N)), expect)
    # consecutive steps share a vertex
    at = k
    for e, t in path.steps:
        assert (lat.tail[e] if t == 1 else lat.head[e]) == at
        at = lat.head[e] if t == 1 else lat.tail[e]
    assert at == l


def test_path_examples():
    lat = build_lattice(4)
    p = axis_path(lat, 0, 1)
    assert p.steps == ((lat.h_edge(0, 0), 1),)
    p = axis_path(lat, 1, 0)
    assert p.steps == ((lat.h_edge(0, 0), -1),)
    p = axis_path(lat, lat.vertex(0, 2), lat.vertex(2, 2))
    assert len(p.steps) == 2 and all(lat.axis[e] == 0 for e in p.edges)


def test_path_errors():
    lat = build_lattice(3)
    with pytest.raises(IndexError):
        axis_path(lat, 0, 99)
    with pytest.raises(LatticeError):
        axis_path(lat, 0, 1, x_steps=2)
    with pytest.raises(IndexError):
        plaquette_signs(lat, 9)
    with pytest.raises(IndexError):
        vertex_signs(lat, -1)
    with pytest.raises(LatticeError):
        OrientedPath(0, 1, ()) + OrientedPath(2, 3, ())


def test_plaquette_loop_is_closed():
    lat = build_lattice(3)
    for p in range(lat.P):
        loop = plaquette_path(lat, p)
        assert not lat.boundary(loop.chain(lat.N)).any()
        assert np.array_equal(loop.chain(lat.N)[lat.plaquette_edges[p]], lat.plaquette_sigma[p])


def _rank_mod_p(rows: np.ndarray, p: int) -> int:
    """Rank of an integer matrix over the prime field Z_p."""
    a = rows.copy() % p
    rank = 0
    for col in range(a.shape[1]):
        piv = next((r for r in range(rank, a.shape[0]) if a[r, col]), None)
        if piv is None:
            continue
        a[[rank, piv]] = a[[piv, rank]]
        a[rank] = a[rank] * pow(int(a[rank, col]), -1, p) % p
        for r in range(a.shape[0]):
            if r != rank and a[r, col]:
                a[r] = (a[r] - a[r, col] * a[rank]) % p
        rank += 1
    return rank


@pytest.mark.parametrize("L,p", [(2, 2), (3, 3), (3, 5), (4, 2)])
def test_path_differences_are_cycles(L, p):
    """Two paths with equal endpoints differ by plaquettes plus winding cycles (over Z_p)."""
    lat = build_lattice(L)
    plaq = np.zeros((lat.P, lat.N), dtype=np.int64)
    for q in range(lat.P):
        plaq[q, lat.plaquette_edges[q]] = lat.plaquette_sigma[q]
    cycle_space = np.vstack([plaq, lat.winding_cycles()])
    # the cycle space of the torus graph has dimension N - V + 1 = P - 1 + 2
    assert _rank_mod_p(cycle_space, p) == lat.N - lat.V + 1
    base_rank = _rank_mod_p(cycle_space, p)
    for k, l in itertools.islice(itertools.permutations(range(lat.V), 2), 12):
        a = axis_path(lat, k, l)
        b = axis_path(lat, k, l, x_first=False)
        loop = a + b.reversed()
        c = loop.chain(lat.N)
        assert not lat.boundary(c).any()
        assert _rank_mod_p(np.vstack([cycle_space, c]), p) == base_rank
