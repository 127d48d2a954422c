"""Clustering decoder and the operational order diagnostic.

Every excitation seeds a cluster of taxicab radius zero.  Rounds run
synchronously: each odd-parity cluster grows its radius by one, then
clusters whose balls meet (share at least one plaquette) merge,
summing parities; merging cascades until stable within the round.
The number of rounds until no odd cluster remains is the circuit
depth ``d`` -- the diagnostic quantity.  A correction is then read
off by greedily pairing excitations inside each final cluster and
joining every pair with a deterministic shortest path, so the whole
decode is a pure function of the syndrome.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .lattice import TorusGeometry, winding_parities

__all__ = ["DecodeResult", "decode", "logical_error"]


@dataclass(frozen=True)
class DecodeResult:
    """Outcome of one decode.

    ``correction`` is an edge indicator array; flipping exactly those
    edges annihilates every excitation of the input frame.  ``depth``
    counts the growth rounds executed (0 iff the input was clean).
    ``cluster_trace`` records the number of live clusters after each
    round.
    """

    correction: np.ndarray
    depth: int
    cluster_trace: tuple = field(default=())

    @property
    def correction_edges(self) -> np.ndarray:
        return np.flatnonzero(self.correction)


class _Cluster:
    __slots__ = ("members", "parity", "radius")

    def __init__(self, members, parity, radius):
        self.members = members  # indices into the anyon array
        self.parity = parity
        self.radius = radius


def _torus_distance_matrix(rows, cols, L):
    dr = np.abs(rows[:, None] - rows[None, :])
    dc = np.abs(cols[:, None] - cols[None, :])
    return np.minimum(dr, L - dr) + np.minimum(dc, L - dc)


def _shortest_path_edges(a: int, b: int, geo: TorusGeometry) -> list[int]:
    """Deterministic shortest path from plaquette ``a`` to ``b``.

    Walks rows first, then columns, taking the shorter wraparound
    direction on each axis; an exact tie goes to the positive
    direction.
    """
    L = geo.L
    ar, ac = divmod(int(a), L)
    br, bc = divmod(int(b), L)
    edges: list[int] = []

    def walk(cur_r, cur_c, delta, row_axis):
        steps_pos = delta % L
        if steps_pos == 0:
            return cur_r, cur_c
        steps_neg = L - steps_pos
        count, sign = (steps_pos, 1) if steps_pos <= steps_neg else (steps_neg, -1)
        for _ in range(count):
            p = cur_r * L + cur_c
            if row_axis:
                cur_r = (cur_r + sign) % L
            else:
                cur_c = (cur_c + sign) % L
            q = cur_r * L + cur_c
            row = geo.neighbors[p]
            for k in range(4):
                if row[k] == q:
                    edges.append(int(geo.neighbor_edge[p, k]))
                    break
        return cur_r, cur_c

    cur_r, cur_c = walk(ar, ac, br - ar, row_axis=True)
    walk(cur_r, cur_c, bc - ac, row_axis=False)
    return edges


def _merge_pass(clusters: list[_Cluster], dist: np.ndarray) -> list[_Cluster]:
    """Merge clusters whose balls intersect, cascading to a fixed point."""
    changed = True
    while changed:
        changed = False
        out: list[_Cluster] = []
        for cl in clusters:
            target = None
            for existing in out:
                gap = dist[np.ix_(existing.members, cl.members)].min()
                if gap <= existing.radius + cl.radius:
                    target = existing
                    break
            if target is None:
                out.append(_Cluster(list(cl.members), cl.parity, cl.radius))
            else:
                target.members.extend(cl.members)
                target.parity += cl.parity
                target.radius = max(target.radius, cl.radius)
                changed = True
        clusters = out
    return clusters


def decode(frame, geo: TorusGeometry) -> DecodeResult:
    """Cluster, fuse, and neutralize all excitations of ``frame``.

    Pure: reads ``frame.syndrome`` only.  The input must have an even
    excitation count (guaranteed by the frame invariants).
    """
    anyons = np.flatnonzero(frame.syndrome).astype(np.int64)
    k = int(anyons.size)
    correction = np.zeros(geo.edge_count, dtype=np.uint8)
    if k == 0:
        return DecodeResult(correction=correction, depth=0)
    if k % 2:
        raise ValueError("odd excitation count; frame invariants violated")

    rows, cols = np.divmod(anyons, geo.L)
    dist = _torus_distance_matrix(rows, cols, geo.L)

    clusters = [_Cluster([i], 1, 0) for i in range(k)]
    trace = []
    depth = 0
    while any(cl.parity % 2 for cl in clusters):
        depth += 1
        for cl in clusters:
            if cl.parity % 2:
                cl.radius += 1
        clusters = _merge_pass(clusters, dist)
        trace.append(len(clusters))

    for cl in clusters:
        members = sorted(cl.members, key=lambda i: int(anyons[i]))
        while members:
            best = None
            for ii in range(len(members)):
                for jj in range(ii + 1, len(members)):
                    a, b = members[ii], members[jj]
                    key = (int(dist[a, b]), int(anyons[a]), int(anyons[b]))
                    if best is None or key < best[0]:
                        best = (key, a, b)
            _, a, b = best
            for e in _shortest_path_edges(int(anyons[a]), int(anyons[b]), geo):
                correction[e] ^= 1
            members.remove(a)
            members.remove(b)

    return DecodeResult(correction=correction, depth=depth, cluster_trace=tuple(trace))


def logical_error(frame, geo: TorusGeometry) -> tuple[int, int]:
    """Homology class of the frame after completing the correction.

    Decodes the current syndrome, overlays the correction on the
    accumulated flips, and returns one bit per torus direction,
    relative to the frame's initial configuration.  Either bit set
    means the stored information was lost.
    """
    result = decode(frame, geo)
    total = frame.flips ^ result.correction
    w1, w2 = winding_parities(total, geo)
    i1, i2 = frame.init_winding
    return w1 ^ i1, w2 ^ i2
