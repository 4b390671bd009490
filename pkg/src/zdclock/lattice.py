"""Periodic L x L square lattice with qudits on oriented edges.

Vertex ``(x, y)`` has id ``x + L*y``.  The horizontal edge leaving ``(x, y)``
towards ``(x+1, y)`` has id ``x + L*y``; the vertical edge towards ``(x, y+1)``
has id ``L*L + x + L*y``.  Default orientation is +x / +y; any subset of
edges may be reversed with ``flip``.

Sign conventions
----------------
* plaquette sign ``sigma_e`` is +1 when the edge direction agrees with the
  circulation bottom -> right -> top -> left around the plaquette;
* star sign ``gamma_e`` is +1 when the edge leaves the vertex, -1 when it
  enters it;
* a path step carries ``tau_e = +1`` when it walks an edge tail -> head.

With these choices an edge variable ``n_e = m[tail] - m[head]`` built from any
vertex labelling ``m`` has zero signed sum around every plaquette, and the
signed sum along a path from ``k`` to ``l`` telescopes to ``m[k] - m[l]``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

HORIZONTAL = 0
VERTICAL = 1


class LatticeError(ValueError):
    """Invalid lattice size or degenerate geometric request."""


@dataclass(frozen=True)
class OrientedPath:
    """Edge chain from vertex ``start`` to vertex ``end``.

    ``steps`` is a tuple of ``(edge, tau)`` pairs.  A closed loop has
    ``start == end``.
    """

    start: int
    end: int
    steps: tuple[tuple[int, int], ...]

    @property
    def edges(self) -> np.ndarray:
        return np.array([e for e, _ in self.steps], dtype=np.int64)

    @property
    def signs(self) -> np.ndarray:
        return np.array([t for _, t in self.steps], dtype=np.int64)

    def chain(self, n_edges: int) -> np.ndarray:
        """Integer edge-chain vector (multiple traversals accumulate)."""
        c = np.zeros(n_edges, dtype=np.int64)
        np.add.at(c, self.edges, self.signs)
        return c

    def reversed(self) -> "OrientedPath":
        return OrientedPath(self.end, self.start,
                            tuple((e, -t) for e, t in reversed(self.steps)))

    def __add__(self, other: "OrientedPath") -> "OrientedPath":
        if self.end != other.start:
            raise LatticeError("paths do not join")
        return OrientedPath(self.start, other.end, self.steps + other.steps)


@dataclass(frozen=True)
class Lattice:
    """Immutable incidence data of the L x L torus.

    Attributes
    ----------
    L : int
        Linear size.
    tail, head : ndarray, shape (N,)
        Endpoint vertex of each edge.
    axis : ndarray, shape (N,)
        ``HORIZONTAL`` or ``VERTICAL``.
    plaquette_edges, plaquette_sigma : ndarray, shape (P, 4)
        Edges bottom, right, top, left of each plaquette and their signs.
    star_edges, star_gamma : ndarray, shape (V, 4)
        Edges east, north, west, south of each vertex and their signs.
    """

    L: int
    tail: np.ndarray = field(repr=False)
    head: np.ndarray = field(repr=False)
    axis: np.ndarray = field(repr=False)
    plaquette_edges: np.ndarray = field(repr=False)
    plaquette_sigma: np.ndarray = field(repr=False)
    star_edges: np.ndarray = field(repr=False)
    star_gamma: np.ndarray = field(repr=False)

    @property
    def n_vertices(self) -> int:
        return self.L * self.L

    @property
    def n_edges(self) -> int:
        return 2 * self.L * self.L

    @property
    def n_plaquettes(self) -> int:
        return self.L * self.L

    # short aliases used throughout the physics code
    V = n_vertices
    N = n_edges
    P = n_plaquettes

    def vertex(self, x: int, y: int) -> int:
        return (x % self.L) + self.L * (y % self.L)

    def coords(self, v: int) -> tuple[int, int]:
        return v % self.L, v // self.L

    def h_edge(self, x: int, y: int) -> int:
        return self.vertex(x, y)

    def v_edge(self, x: int, y: int) -> int:
        return self.L * self.L + self.vertex(x, y)

    def bonds(self) -> np.ndarray:
        """Vertex pairs ``(tail, head)`` of all N edges, i.e. the clock bonds."""
        return np.stack([self.tail, self.head], axis=1)

    def gradient(self, m: np.ndarray, d: int) -> np.ndarray:
        """Edge variables ``(m[tail] - m[head]) mod d`` of a vertex labelling.

        ``m`` may carry leading batch dimensions; the vertex axis is last.
        """
        m = np.asarray(m)
        return (m[..., self.tail] - m[..., self.head]) % d

    def plaquette_flux(self, n: np.ndarray, d: int) -> np.ndarray:
        """Signed sum ``sum_e sigma_e n_e mod d`` for every plaquette."""
        n = np.asarray(n)
        return np.sum(n[..., self.plaquette_edges] * self.plaquette_sigma, axis=-1) % d

    def winding_cycles(self) -> np.ndarray:
        """Two non-contractible closed chains (row of horizontals, column of verticals)."""
        L = self.L
        cx = np.zeros(self.N, dtype=np.int64)
        cy = np.zeros(self.N, dtype=np.int64)
        for x in range(L):
            e = self.h_edge(x, 0)
            cx[e] = 1 if self.tail[e] == self.vertex(x, 0) else -1
        for y in range(L):
            e = self.v_edge(0, y)
            cy[e] = 1 if self.tail[e] == self.vertex(0, y) else -1
        return np.stack([cx, cy])

    def boundary(self, chain: np.ndarray) -> np.ndarray:
        """Vertex boundary ``sum_e c_e (tail_e - head_e)`` of an edge chain."""
        b = np.zeros(self.V, dtype=np.int64)
        chain = np.asarray(chain, dtype=np.int64)
        np.add.at(b, self.tail, chain)
        np.add.at(b, self.head, -chain)
        return b


def build_lattice(L: int, flip=None) -> Lattice:
    """Build the L x L periodic lattice.

    Parameters
    ----------
    L : int
        Linear size, at least 2 (L = 1 would create self-loops).
    flip : array_like of bool, optional
        Edges whose orientation is reversed relative to +x / +y.
    """
    if int(L) != L or L < 2:
        raise LatticeError(f"lattice size must be an integer >= 2, got {L!r}")
    L = int(L)
    V = L * L
    xs, ys = np.meshgrid(np.arange(L), np.arange(L), indexing="xy")
    xs, ys = xs.ravel(), ys.ravel()
    v = xs + L * ys
    east = (xs + 1) % L + L * ys
    north = xs + L * ((ys + 1) % L)

    tail = np.concatenate([v, v]).astype(np.int64)
    head = np.concatenate([east, north]).astype(np.int64)
    axis = np.concatenate([np.full(V, HORIZONTAL), np.full(V, VERTICAL)]).astype(np.int8)
    if flip is not None:
        flip = np.asarray(flip, dtype=bool)
        if flip.shape != (2 * V,):
            raise LatticeError(f"flip mask must have length {2 * V}")
        tail, head = np.where(flip, head, tail), np.where(flip, tail, head)

    # plaquette with bottom-left corner v: bottom, right, top, left
    bottom = v
    right = V + east
    top = north
    left = V + v
    p_edges = np.stack([bottom, right, top, left], axis=1).astype(np.int64)
    # circulation bottom (+x), right (+y), top (-x), left (-y)
    start = np.stack([v, east, (xs + 1) % L + L * ((ys + 1) % L), north], axis=1)
    p_sigma = np.where(tail[p_edges] == start, 1, -1).astype(np.int64)

    west_edge = (xs - 1) % L + L * ys
    south_edge = V + xs + L * ((ys - 1) % L)
    s_edges = np.stack([v, V + v, west_edge, south_edge], axis=1).astype(np.int64)
    s_gamma = np.where(tail[s_edges] == v[:, None], 1, -1).astype(np.int64)

    for arr in (tail, head, axis, p_edges, p_sigma, s_edges, s_gamma):
        arr.setflags(write=False)
    return Lattice(L, tail, head, axis, p_edges, p_sigma, s_edges, s_gamma)


def plaquette_signs(lat: Lattice, p: int) -> list[tuple[int, int]]:
    """``(edge, sigma)`` pairs of plaquette ``p`` (bottom, right, top, left)."""
    if not 0 <= p < lat.P:
        raise IndexError(f"plaquette {p} out of range [0, {lat.P})")
    return [(int(e), int(s)) for e, s in zip(lat.plaquette_edges[p], lat.plaquette_sigma[p])]


def vertex_signs(lat: Lattice, v: int) -> list[tuple[int, int]]:
    """``(edge, gamma)`` pairs of the star of ``v`` (east, north, west, south)."""
    if not 0 <= v < lat.V:
        raise IndexError(f"vertex {v} out of range [0, {lat.V})")
    return [(int(e), int(g)) for e, g in zip(lat.star_edges[v], lat.star_gamma[v])]


def _shortest(delta: int, L: int) -> int:
    delta %= L
    return delta - L if delta > L // 2 else delta


def axis_path(lat: Lattice, k: int, l: int, *, x_steps: int | None = None,
              y_steps: int | None = None, x_first: bool = True) -> OrientedPath:
    """Staircase path from ``k`` to ``l``.

    By default the path takes the shortest signed displacement along x, then
    along y.  ``x_steps`` / ``y_steps`` override the signed number of steps
    (they must agree with the displacement modulo L), which is how paths
    winding the other way around the torus are requested.
    """
    if k == l:
        raise LatticeError("degenerate path: endpoints coincide")
    for w in (k, l):
        if not 0 <= w < lat.V:
            raise IndexError(f"vertex {w} out of range [0, {lat.V})")
    L = lat.L
    (kx, ky), (lx, ly) = lat.coords(k), lat.coords(l)
    if x_steps is None:
        x_steps = _shortest(lx - kx, L)
    if y_steps is None:
        y_steps = _shortest(ly - ky, L)
    if (kx + x_steps - lx) % L or (ky + y_steps - ly) % L:
        raise LatticeError("step counts do not reach the target vertex")

    x, y = kx, ky
    steps: list[tuple[int, int]] = []

    def walk_x():
        nonlocal x
        s = 1 if x_steps > 0 else -1
        for _ in range(abs(x_steps)):
            nx = x + s
            e = lat.h_edge(min(x, nx), y) if s > 0 else lat.h_edge(nx, y)
            frm = lat.vertex(x, y)
            steps.append((e, 1 if lat.tail[e] == frm else -1))
            x = nx

    def walk_y():
        nonlocal y
        s = 1 if y_steps > 0 else -1
        for _ in range(abs(y_steps)):
            ny = y + s
            e = lat.v_edge(x, y) if s > 0 else lat.v_edge(x, ny)
            frm = lat.vertex(x, y)
            steps.append((e, 1 if lat.tail[e] == frm else -1))
            y = ny

    if x_first:
        walk_x()
        walk_y()
    else:
        walk_y()
        walk_x()
    return OrientedPath(k, l, tuple(steps))


def plaquette_path(lat: Lattice, p: int) -> OrientedPath:
    """Closed loop around plaquette ``p`` following the plaquette circulation."""
    v = int(lat.tail[lat.plaquette_edges[p, 0]]) if lat.plaquette_sigma[p, 0] > 0 \
        else int(lat.head[lat.plaquette_edges[p, 0]])
    return OrientedPath(v, v, tuple(plaquette_signs(lat, p)))
