"""Event-driven engine: exact continuous-time sampling of the dynamics.

Three event classes compete: pair creation (rate ``gamma1`` per edge),
anyon motion (``gamma2`` per anyon, toward the largest neighboring
field value), and field update (``gamma3`` for a synchronous sweep, or
``gamma3`` per plaquette in asynchronous mode).  Waiting times are
exponential at the total rate; classes are selected with probability
equal to their rate share; the member within a class is uniform.
Rates never depend on the field, so this two-level scheme is exact.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels as kernels
from ._rng import make_state, stream_key
from .cafield import CaField
from .frame import PauliFrame, new_frame
from .lattice import TorusGeometry

__all__ = [
    "RatesConfig",
    "TrajectoryState",
    "FrozenTrajectoryError",
    "Event",
    "make_trajectory",
    "total_rate",
    "step",
    "run_until",
]

_EVENT_NAMES = {
    kernels.EVENT_CREATE: "create",
    kernels.EVENT_HOP: "hop",
    kernels.EVENT_FIELD: "field",
}


class FrozenTrajectoryError(RuntimeError):
    """Raised by :func:`step` when no process can ever fire again."""


@dataclass(frozen=True)
class RatesConfig:
    """The three process rates, in whatever common time unit you like.

    ``gamma2`` is the conventional reference (the hop rate of a single
    anyon); sweeps and thresholds elsewhere express ``gamma1`` and
    ``gamma3`` in units of it.
    """

    gamma1: float
    gamma2: float = 1.0
    gamma3: float = 0.0

    def __post_init__(self):
        for name in ("gamma1", "gamma2", "gamma3"):
            v = getattr(self, name)
            if not np.isfinite(v) or v < 0:
                raise ValueError(f"{name} must be a nonnegative finite rate, got {v}")


@dataclass(frozen=True)
class Event:
    """One executed event, for observers and trace logs."""

    kind: str  # "create" | "hop" | "field"
    location: int  # edge id for flips, plaquette id for async updates, -1 otherwise
    time: float


class TrajectoryState:
    """Everything one independent run owns: frame, field, clock, stream."""

    __slots__ = ("geo", "frame", "field", "rates", "rng", "tbox", "sync", "_event_out")

    def __init__(
        self,
        geo: TorusGeometry,
        frame: PauliFrame,
        field: CaField,
        rates: RatesConfig,
        rng: np.ndarray,
        sync: bool = True,
    ):
        self.geo = geo
        self.frame = frame
        self.field = field
        self.rates = rates
        self.rng = rng
        self.tbox = np.zeros(1, dtype=np.float64)
        self.sync = sync
        self._event_out = np.zeros(2, dtype=np.int64)

    @property
    def t(self) -> float:
        return float(self.tbox[0])

    @property
    def event_counts(self) -> dict[str, int]:
        m = self.frame.meta
        return {
            "create": int(m[kernels.META_CREATED]),
            "hop": int(m[kernels.META_HOPPED]),
            "field": int(m[kernels.META_FIELD]),
        }

    @property
    def frozen(self) -> bool:
        return bool(self.frame.meta[kernels.META_FROZEN])


def make_trajectory(
    geo: TorusGeometry,
    rates: RatesConfig,
    master_seed: int,
    trajectory: int = 0,
    init_mode: str = "ground",
    sync: bool = True,
    key_parts: tuple = (),
) -> TrajectoryState:
    """Build a fresh trajectory with its own deterministic stream.

    The stream key absorbs the geometry, the rates, the init mode, the
    update mode, any extra labels, and the trajectory index, so every
    (configuration, master seed, index) triple names one trajectory.
    """
    key = stream_key(
        master_seed,
        geo.L,
        rates.gamma1,
        rates.gamma2,
        rates.gamma3,
        init_mode,
        "sync" if sync else "async",
        *key_parts,
        trajectory,
    )
    rng = make_state(key)
    frame = new_frame(geo, init_mode, rng)
    field = CaField(geo, project_alternating=sync)
    return TrajectoryState(geo, frame, field, rates, rng, sync=sync)


def total_rate(state: TrajectoryState) -> float:
    """Sum of all process rates in the current configuration."""
    r = state.rates
    field_rate = r.gamma3 if state.sync else r.gamma3 * state.geo.plaquette_count
    return r.gamma1 * state.geo.edge_count + r.gamma2 * state.frame.anyon_count + field_rate


def _advance(state: TrajectoryState, t_target: float, max_events: int) -> int:
    f = state.frame
    return kernels.advance(
        f.flips,
        f.syndrome,
        f.anyon_list,
        f.anyon_slot,
        state.field.values,
        state.field.scratch,
        state.field.chi,
        state.rng,
        f.meta,
        state.tbox,
        state.geo.edge_plaquettes,
        state.geo.cut_mask,
        state.geo.neighbors,
        state.geo.neighbor_edge,
        state.geo.L,
        state.rates.gamma1,
        state.rates.gamma2,
        state.rates.gamma3,
        state.sync,
        state.field.project_alternating,
        t_target,
        np.int64(max_events),
        state._event_out,
    )


def step(state: TrajectoryState) -> Event:
    """Execute exactly one event and return it.

    Raises :class:`FrozenTrajectoryError` when the total rate is zero,
    which can only happen with ``gamma3 = 0`` and nothing else active.
    """
    if total_rate(state) <= 0.0:
        state.frame.meta[kernels.META_FROZEN] = 1
        raise FrozenTrajectoryError("total rate is zero; no event can occur")
    executed = _advance(state, np.inf, max_events=1)
    assert executed == 1
    kind, loc = state._event_out
    return Event(_EVENT_NAMES[int(kind)], int(loc), state.t)


def run_until(
    state: TrajectoryState,
    t_max: float,
    observers=(),
    times=None,
) -> TrajectoryState:
    """Advance the trajectory to ``t_max``, visiting observer times.

    ``observers`` are callables ``(time, state)`` invoked at each entry
    of ``times`` (default: only ``t_max``) with read-only intent; they
    must not mutate the state.  A frozen trajectory fast-forwards its
    clock.  The final clock equals ``t_max`` exactly.
    """
    if t_max < state.t:
        raise ValueError(f"t_max={t_max} is before the current time {state.t}")
    if times is None:
        times = (t_max,)
    last = state.t
    for t_k in times:
        if t_k < last or t_k > t_max:
            raise ValueError("observer times must be nondecreasing and within t_max")
        _advance(state, float(t_k), max_events=-1)
        last = t_k
        for obs in observers:
            obs(t_k, state)
    if state.t < t_max:
        _advance(state, float(t_max), max_events=-1)
    return state


def run_traced(state: TrajectoryState, t_max: float, writer) -> TrajectoryState:
    """Slow per-event driver for debugging: one trace row per event.

    ``writer`` receives ``(time, kind, location)`` tuples.  Statistics
    are identical to :func:`run_until`; only the pace differs.
    """
    while state.t < t_max:
        if total_rate(state) <= 0.0:
            state.tbox[0] = t_max
            state.frame.meta[kernels.META_FROZEN] = 1
            break
        executed = _advance(state, t_max, max_events=1)
        if executed == 0:
            break  # waiting time overshot t_max; clock already capped
        writer(state.t, _EVENT_NAMES[int(state._event_out[0])], int(state._event_out[1]))
    state.tbox[0] = t_max
    return state
