"""The classical feedback field that steers anyon motion.

One real value per plaquette.  A synchronous update replaces every
value simultaneously by the average of its four neighbors, plus one
where an anyon sits, minus the old value divided by L^2 (a weak decay
that stops unbounded growth).  Anyons always move toward the neighbor
with the largest field value, so occupied regions broadcast their
location outward and pull partners together.

On even lattices the synchronous rule linearly amplifies the +1/-1
checkerboard component of the field by 1 + 1/L^2 per sweep (eventually
overflowing a double), while that component is provably invisible to
motion decisions: it is constant over the four neighbors of any
plaquette.  ``project_alternating`` removes it after each sweep, which
leaves every motion decision and every other field mode bit-exact.
The engine switches the projection on for synchronous runs on even
lattices; the plain rule is the default here so that single sweeps
match the update equation verbatim.
"""

from __future__ import annotations

import numpy as np

from . import _kernels as kernels
from ._rng import next_below
from .lattice import TorusGeometry

__all__ = ["CaField", "sweep_update", "target_neighbor"]


class CaField:
    """Field values plus the scratch buffer for synchronous sweeps."""

    __slots__ = ("geo", "values", "scratch", "chi", "project_alternating")

    def __init__(self, geo: TorusGeometry, project_alternating: bool = False):
        self.geo = geo
        self.values = np.zeros(geo.plaquette_count, dtype=np.float64)
        self.scratch = np.zeros(geo.plaquette_count, dtype=np.float64)
        r, c = np.divmod(np.arange(geo.plaquette_count), geo.L)
        self.chi = np.where((r + c) % 2 == 0, 1.0, -1.0)
        if project_alternating and geo.L % 2 == 1:
            project_alternating = False  # mode does not exist on odd lattices
        self.project_alternating = project_alternating

    def copy(self) -> "CaField":
        out = CaField(self.geo, self.project_alternating)
        out.values[:] = self.values
        return out

    def grid(self) -> np.ndarray:
        """Field as an (L, L) view for inspection and dumps."""
        return self.values.reshape(self.geo.L, self.geo.L)


def sweep_update(field: CaField, frame, geo: TorusGeometry) -> None:
    """One synchronous update of every plaquette from pre-sweep values."""
    kernels.sweep_field(
        field.values,
        field.scratch,
        frame.syndrome,
        geo.L,
        field.project_alternating,
        field.chi,
    )


def async_update(field: CaField, frame, geo: TorusGeometry, p: int) -> None:
    """Apply the update rule to plaquette ``p`` alone, in place."""
    kernels.async_site_update(field.values, frame.syndrome, geo.neighbors, p)


def target_neighbor(p: int, field: CaField, geo: TorusGeometry, rng) -> int:
    """Neighbor of ``p`` with the largest field value; ties uniform.

    ``rng`` is a uint64[4] trajectory stream state; it is consumed only
    when two or more neighbors tie at the maximum.
    """
    nbrs = geo.neighbors[p]
    vals = field.values[nbrs]
    best = vals.max()
    tied = np.flatnonzero(vals == best)
    if tied.size == 1:
        return int(nbrs[tied[0]])
    j = next_below(rng, tied.size)
    return int(nbrs[tied[j]])
