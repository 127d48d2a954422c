"""Numba kernels shared by the frame, field, and engine modules.

Everything here operates on the flat arrays owned by higher-level
wrappers; nothing allocates inside the hot loop.  The layout contract:

* ``flips``    uint8[2*L*L]   edge flip parities
* ``syndrome`` uint8[L*L]     plaquette excitation bits
* ``anyon_list`` int32[L*L]   occupied plaquettes, dense prefix
* ``anyon_slot`` int32[L*L]   position of each plaquette in the list, -1 if absent
* ``values`` / ``scratch`` float64[L*L]  feedback field, double buffered
* ``meta``   int64[8]   [anyon_count, wind1, wind2, n_create, n_hop,
                         n_field, frozen, unused]
* ``tbox``   float64[1] simulation clock
"""

from __future__ import annotations

import numpy as np
from numba import njit

from ._rng import next_below, next_double, next_exponential

META_ANYONS = 0
META_WIND1 = 1
META_WIND2 = 2
META_CREATED = 3
META_HOPPED = 4
META_FIELD = 5
META_FROZEN = 6

EVENT_NONE = -1
EVENT_CREATE = 0
EVENT_HOP = 1
EVENT_FIELD = 2


@njit(cache=True, nogil=True, inline="always")
def _toggle_plaquette(syndrome, anyon_list, anyon_slot, meta, p):
    if syndrome[p]:
        syndrome[p] = 0
        i = anyon_slot[p]
        last = meta[META_ANYONS] - 1
        moved = anyon_list[last]
        anyon_list[i] = moved
        anyon_slot[moved] = i
        anyon_slot[p] = -1
        meta[META_ANYONS] = last
    else:
        syndrome[p] = 1
        anyon_list[meta[META_ANYONS]] = p
        anyon_slot[p] = meta[META_ANYONS]
        meta[META_ANYONS] += 1


@njit(cache=True, nogil=True)
def flip_edge(flips, syndrome, anyon_list, anyon_slot, meta, edge_plaq, edge_cut, e):
    """Toggle one edge: flip bit, both syndromes, registry, winding. O(1)."""
    flips[e] ^= 1
    _toggle_plaquette(syndrome, anyon_list, anyon_slot, meta, edge_plaq[e, 0])
    _toggle_plaquette(syndrome, anyon_list, anyon_slot, meta, edge_plaq[e, 1])
    w = edge_cut[e]
    meta[META_WIND1] ^= np.int64(w & 1)
    meta[META_WIND2] ^= np.int64((w >> 1) & 1)


@njit(cache=True, nogil=True, fastmath=True, inline="always")
def sweep_field(values, scratch, syndrome, L, project, chi):
    """One synchronous field update; all reads see the pre-sweep buffer.

    With ``project`` set, the alternating (+1/-1 checkerboard)
    component of the result is removed.  That component is constant
    over the four neighbors of every plaquette, so it can never change
    a motion decision, but on even lattices the synchronous rule
    amplifies it by 1 + 1/L^2 per sweep until it overflows; projecting
    keeps the physically coupled part of the field exact.
    """
    n = L * L
    inv_l2 = 1.0 / n
    for r in range(L):
        bm = ((r - 1) % L) * L
        bp = ((r + 1) % L) * L
        b = r * L
        scratch[b] = (
            0.25 * (values[bm] + values[bp] + values[b + L - 1] + values[b + 1])
            + syndrome[b]
            - values[b] * inv_l2
        )
        for c in range(1, L - 1):
            scratch[b + c] = (
                0.25 * (values[bm + c] + values[bp + c] + values[b + c - 1] + values[b + c + 1])
                + syndrome[b + c]
                - values[b + c] * inv_l2
            )
        e = L - 1
        scratch[b + e] = (
            0.25 * (values[bm + e] + values[bp + e] + values[b + e - 1] + values[b])
            + syndrome[b + e]
            - values[b + e] * inv_l2
        )
    if project:
        alt = 0.0
        for i in range(n):
            alt += scratch[i] * chi[i]
        a = alt * inv_l2
        for i in range(n):
            values[i] = scratch[i] - a * chi[i]
    else:
        for i in range(n):
            values[i] = scratch[i]


@njit(cache=True, nogil=True)
def async_site_update(values, syndrome, nbr, p):
    """Apply the field rule to a single plaquette, in place."""
    n = values.size
    avg = 0.25 * (
        values[nbr[p, 0]] + values[nbr[p, 1]] + values[nbr[p, 2]] + values[nbr[p, 3]]
    )
    values[p] = avg + syndrome[p] - values[p] / n


@njit(cache=True, nogil=True, inline="always")
def target_edge(values, nbr, nbr_edge, p, rng_state):
    """Edge toward the neighbor with the largest field value.

    Ties are broken uniformly at random from the trajectory stream.
    """
    best = values[nbr[p, 0]]
    for k in range(1, 4):
        v = values[nbr[p, k]]
        if v > best:
            best = v
    ties = 0
    for k in range(4):
        if values[nbr[p, k]] == best:
            ties += 1
    if ties > 1:
        j = next_below(rng_state, ties)
    else:
        j = 0
    seen = 0
    for k in range(4):
        if values[nbr[p, k]] == best:
            if seen == j:
                return nbr_edge[p, k]
            seen += 1
    return nbr_edge[p, 0]  # unreachable


@njit(cache=True, nogil=True)
def advance(
    flips,
    syndrome,
    anyon_list,
    anyon_slot,
    values,
    scratch,
    chi,
    rng_state,
    meta,
    tbox,
    edge_plaq,
    edge_cut,
    nbr,
    nbr_edge,
    L,
    gamma1,
    gamma2,
    gamma3,
    sync_mode,
    project,
    t_target,
    max_events,
    event_out,
):
    """Run the event loop until the clock reaches ``t_target``.

    Exact direct-method sampling: exponential waiting times at the
    current total rate, event class chosen with probability equal to
    its rate share, then a uniform member of the class.  A waiting
    time that would overshoot ``t_target`` stops the loop with the
    clock at ``t_target`` (memorylessness makes the discard exact).

    ``max_events >= 0`` additionally caps the number of executed
    events (used by the single-step driver).  Returns the number of
    events executed; ``event_out`` reports the last one as
    (type, edge-or-plaquette id).
    """
    t = tbox[0]
    n_edges = flips.size
    n_plaq = syndrome.size
    create_rate = gamma1 * n_edges
    field_rate = gamma3 if sync_mode else gamma3 * n_plaq
    events = np.int64(0)
    event_out[0] = EVENT_NONE
    event_out[1] = -1
    while events != max_events:
        total = create_rate + gamma2 * meta[META_ANYONS] + field_rate
        if total <= 0.0:
            meta[META_FROZEN] = 1
            t = t_target
            break
        dt = next_exponential(rng_state, total)
        if t + dt > t_target:
            t = t_target
            break
        t += dt
        u = next_double(rng_state) * total
        if u < create_rate:
            e = next_below(rng_state, n_edges)
            flip_edge(flips, syndrome, anyon_list, anyon_slot, meta, edge_plaq, edge_cut, e)
            meta[META_CREATED] += 1
            event_out[0] = EVENT_CREATE
            event_out[1] = e
        elif u < create_rate + gamma2 * meta[META_ANYONS]:
            i = next_below(rng_state, meta[META_ANYONS])
            p = anyon_list[i]
            e = target_edge(values, nbr, nbr_edge, p, rng_state)
            flip_edge(flips, syndrome, anyon_list, anyon_slot, meta, edge_plaq, edge_cut, e)
            meta[META_HOPPED] += 1
            event_out[0] = EVENT_HOP
            event_out[1] = e
        else:
            if sync_mode:
                sweep_field(values, scratch, syndrome, L, project, chi)
                event_out[1] = -1
            else:
                p = next_below(rng_state, n_plaq)
                async_site_update(values, syndrome, nbr, p)
                event_out[1] = p
            meta[META_FIELD] += 1
            event_out[0] = EVENT_FIELD
        events += 1
    tbox[0] = t
    return events
