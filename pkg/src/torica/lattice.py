"""Geometry and homology of the L x L torus of plaquettes.

The simulation state lives on a square lattice of L^2 plaquettes with
periodic boundaries.  Each plaquette has four neighbors; each of the
2*L^2 edges is shared by exactly two plaquettes.  Spin flips sit on
edges, excitations (anyons) on plaquettes, so the natural graph is the
plaquette adjacency graph: flipping an edge toggles the excitation
parity of the two plaquettes it joins.

Indexing is fixed once and for all:

* plaquette ``(r, c)`` has id ``r*L + c`` (row-major),
* horizontal edge ``h(r, c)`` has id ``r*L + c`` and joins plaquettes
  ``(r, c)`` and ``(r-1, c)``,
* vertical edge ``v(r, c)`` has id ``L*L + r*L + c`` and joins
  plaquettes ``(r, c)`` and ``(r, c-1)``.

Homology is read through two fixed cuts, one per torus direction: the
``L`` vertical edges in column 0 and the ``L`` horizontal edges in
row 0.  An anyon-free flip chain that winds around the torus crosses
the matching cut an odd number of times, while contractible anyon-free
loops cross each cut an even number of times, so the pair of crossing
parities identifies the homology class of the chain.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# Neighbor slots, in the fixed order used across the package.
UP, DOWN, LEFT, RIGHT = 0, 1, 2, 3


@dataclass(frozen=True)
class TorusGeometry:
    """Immutable adjacency and homology tables for an L x L torus.

    Attributes
    ----------
    L : int
        Linear lattice size (L >= 3).
    plaquette_count : int
        ``L*L``.
    edge_count : int
        ``2*L*L``.
    neighbors : (L*L, 4) int32 array
        Neighbor plaquette ids in the order (up, down, left, right).
    neighbor_edge : (L*L, 4) int32 array
        Edge shared with the corresponding neighbor.
    boundary : (L*L, 4) int32 array
        The four edges on the boundary of each plaquette (same content
        as ``neighbor_edge``; kept under the contract name).
    edge_plaquettes : (2*L*L, 2) int32 array
        The two plaquettes joined by each edge.
    cut_mask : (2*L*L,) uint8 array
        Bit 0 set for edges on the first homology cut (vertical edges
        of column 0), bit 1 for the second (horizontal edges of row 0).
    """

    L: int
    plaquette_count: int
    edge_count: int
    neighbors: np.ndarray = field(repr=False)
    neighbor_edge: np.ndarray = field(repr=False)
    boundary: np.ndarray = field(repr=False)
    edge_plaquettes: np.ndarray = field(repr=False)
    cut_mask: np.ndarray = field(repr=False)

    def plaquette_id(self, r: int, c: int) -> int:
        return (r % self.L) * self.L + (c % self.L)

    def plaquette_coords(self, p: int) -> tuple[int, int]:
        return divmod(int(p), self.L)

    def plaquettes_of_edge(self, e: int) -> tuple[int, int]:
        a, b = self.edge_plaquettes[e]
        return int(a), int(b)


def build_geometry(L: int) -> TorusGeometry:
    """Construct the adjacency and homology tables for an L x L torus.

    Parameters
    ----------
    L : int
        Linear size; must be at least 3 so that the four neighbors of
        every plaquette are distinct.

    Raises
    ------
    ValueError
        If ``L < 3``.
    """
    if L < 3:
        raise ValueError(f"lattice size must be >= 3, got {L}")

    n_plaq = L * L
    n_edge = 2 * n_plaq

    def h_edge(r: int, c: int) -> int:
        return (r % L) * L + (c % L)

    def v_edge(r: int, c: int) -> int:
        return n_plaq + (r % L) * L + (c % L)

    neighbors = np.empty((n_plaq, 4), dtype=np.int32)
    neighbor_edge = np.empty((n_plaq, 4), dtype=np.int32)
    edge_plaquettes = np.empty((n_edge, 2), dtype=np.int32)

    for r in range(L):
        for c in range(L):
            p = r * L + c
            neighbors[p, UP] = ((r - 1) % L) * L + c
            neighbors[p, DOWN] = ((r + 1) % L) * L + c
            neighbors[p, LEFT] = r * L + (c - 1) % L
            neighbors[p, RIGHT] = r * L + (c + 1) % L
            neighbor_edge[p, UP] = h_edge(r, c)
            neighbor_edge[p, DOWN] = h_edge(r + 1, c)
            neighbor_edge[p, LEFT] = v_edge(r, c)
            neighbor_edge[p, RIGHT] = v_edge(r, c + 1)

    for r in range(L):
        for c in range(L):
            edge_plaquettes[h_edge(r, c), 0] = r * L + c
            edge_plaquettes[h_edge(r, c), 1] = ((r - 1) % L) * L + c
            edge_plaquettes[v_edge(r, c), 0] = r * L + c
            edge_plaquettes[v_edge(r, c), 1] = r * L + (c - 1) % L

    cut_mask = np.zeros(n_edge, dtype=np.uint8)
    for r in range(L):
        cut_mask[v_edge(r, 0)] |= 1  # crossed by chains winding along columns
    for c in range(L):
        cut_mask[h_edge(0, c)] |= 2  # crossed by chains winding along rows

    for arr in (neighbors, neighbor_edge, edge_plaquettes, cut_mask):
        arr.setflags(write=False)

    return TorusGeometry(
        L=L,
        plaquette_count=n_plaq,
        edge_count=n_edge,
        neighbors=neighbors,
        neighbor_edge=neighbor_edge,
        boundary=neighbor_edge,
        edge_plaquettes=edge_plaquettes,
        cut_mask=cut_mask,
    )


def edge_between(p: int, q: int, geo: TorusGeometry) -> int:
    """Return the unique edge on the boundary of both ``p`` and ``q``.

    Symmetric in its arguments.  Raises ``ValueError`` for a
    non-adjacent pair, which always indicates a logic bug upstream.
    """
    row = geo.neighbors[p]
    for k in range(4):
        if row[k] == q:
            return int(geo.neighbor_edge[p, k])
    raise ValueError(f"plaquettes {p} and {q} are not adjacent")


def taxicab_distance(p: int, q: int, geo: TorusGeometry) -> int:
    """Torus taxicab distance between two plaquettes."""
    L = geo.L
    pr, pc = divmod(int(p), L)
    qr, qc = divmod(int(q), L)
    dr = abs(pr - qr)
    dc = abs(pc - qc)
    return min(dr, L - dr) + min(dc, L - dc)


def winding_parities(flips, geo: TorusGeometry) -> tuple[int, int]:
    """Crossing parities of a flip set with the two homology cuts.

    Parameters
    ----------
    flips : edge-id iterable, or uint8/bool indicator array of length
        ``geo.edge_count``.

    Returns
    -------
    (int, int)
        ``parity_k = |flips intersect cut_k| mod 2``.  For an
        anyon-free chain this is its homology class; arbitrary edge
        sets are accepted and simply scored against the cuts.
    """
    arr = np.asarray(flips)
    if arr.ndim == 1 and arr.size == geo.edge_count and arr.dtype in (np.uint8, np.bool_):
        sel = geo.cut_mask[arr != 0]
    else:
        sel = geo.cut_mask[arr.reshape(-1).astype(np.int64)]
    p1 = int(np.count_nonzero(sel & 1) & 1)
    p2 = int(np.count_nonzero(sel & 2) & 1)
    return p1, p2
