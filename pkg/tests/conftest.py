from __future__ import annotations

import numpy as np
import pytest

from torica import build_geometry, edge_between


@pytest.fixture(scope="session")
def geo4():
    return build_geometry(4)


@pytest.fixture(scope="session")
def geo5():
    return build_geometry(5)


@pytest.fixture(scope="session")
def geo8():
    return build_geometry(8)


def plaquette_ring(geo, r, c):
    """The elementary contractible loop of four plaquettes whose shared
    corner sits between rows r, r+1 and columns c, c+1."""
    L = geo.L
    ring = [(r, c), (r, (c + 1) % L), ((r + 1) % L, (c + 1) % L), ((r + 1) % L, c)]
    ids = [geo.plaquette_id(rr, cc) for rr, cc in ring]
    return [edge_between(ids[i], ids[(i + 1) % 4], geo) for i in range(4)]


def chain_edges(geo, direction, index):
    """Anyon-free noncontractible chain: the L parallel edges crossed by
    walking once around the torus along a row (direction 0) or a column
    (direction 1)."""
    L = geo.L
    edges = []
    for k in range(L):
        if direction == 0:  # walk along a row, through all columns
            p = geo.plaquette_id(index, k)
            q = geo.plaquette_id(index, (k + 1) % L)
        else:  # walk along a column, through all rows
            p = geo.plaquette_id(k, index)
            q = geo.plaquette_id((k + 1) % L, index)
        edges.append(edge_between(p, q, geo))
    return edges


def apply_edges(frame, edges):
    for e in edges:
        frame.apply_flip(e)


def rng_state_for_tests(seed):
    from torica._rng import make_state, stream_key

    return make_state(stream_key(seed, "tests"))


@pytest.fixture
def nprng():
    return np.random.default_rng(20260810)
