"""Mutable error state of one trajectory.

A :class:`PauliFrame` records which edges carry a flip, the derived
plaquette excitation bits, a dense registry of occupied plaquettes
supporting O(1) membership and uniform selection, and the two winding
parities maintained incrementally.  All hot-path mutation goes through
the shared numba kernels, so the Python-facing methods and the engine
see exactly the same state transitions.
"""

from __future__ import annotations

import struct

import numpy as np

from . import _kernels as kernels
from ._rng import make_state, next_u64, stream_key
from .lattice import TorusGeometry, winding_parities

SNAPSHOT_MAGIC = b"TCPF"
SNAPSHOT_VERSION = 1
_HEADER = struct.Struct("<4sHHII")  # magic, version, reserved, L, reserved2


class PauliFrame:
    """Edge flips plus everything derived from them, kept incrementally.

    Attributes
    ----------
    flips : uint8[2*L*L]
        1 where an edge has been flipped an odd number of times.
    syndrome : uint8[L*L]
        1 where a plaquette hosts an excitation (anyon).
    meta : int64[8]
        Shared scratch header consumed by the kernels; slots 0..2 hold
        the anyon count and the two winding bits.
    init_winding : (int, int)
        Winding parities of the initial flip configuration; logical
        readout is reported relative to this.
    """

    __slots__ = (
        "geo",
        "flips",
        "syndrome",
        "anyon_list",
        "anyon_slot",
        "meta",
        "init_winding",
    )

    def __init__(self, geo: TorusGeometry, flips: np.ndarray | None = None):
        self.geo = geo
        if flips is None:
            flips = np.zeros(geo.edge_count, dtype=np.uint8)
        else:
            flips = np.ascontiguousarray(flips, dtype=np.uint8) & 1
            if flips.shape != (geo.edge_count,):
                raise ValueError("flip array has wrong length")
        self.flips = flips
        self.syndrome = np.zeros(geo.plaquette_count, dtype=np.uint8)
        self.anyon_list = np.zeros(geo.plaquette_count, dtype=np.int32)
        self.anyon_slot = np.full(geo.plaquette_count, -1, dtype=np.int32)
        self.meta = np.zeros(8, dtype=np.int64)
        self._derive()
        self.init_winding = self.winding

    def _derive(self) -> None:
        """Rebuild syndromes, registry, and winding from the flip bits."""
        geo = self.geo
        syn = (self.flips[geo.boundary].sum(axis=1) & 1).astype(np.uint8)
        self.syndrome[:] = syn
        occupied = np.flatnonzero(syn).astype(np.int32)
        self.anyon_slot[:] = -1
        self.anyon_list[: occupied.size] = occupied
        self.anyon_slot[occupied] = np.arange(occupied.size, dtype=np.int32)
        self.meta[kernels.META_ANYONS] = occupied.size
        w1, w2 = winding_parities(self.flips, geo)
        self.meta[kernels.META_WIND1] = w1
        self.meta[kernels.META_WIND2] = w2

    @property
    def anyon_count(self) -> int:
        return int(self.meta[kernels.META_ANYONS])

    @property
    def anyons(self) -> np.ndarray:
        """Occupied plaquettes, in registry order (not sorted)."""
        return self.anyon_list[: self.anyon_count].copy()

    @property
    def winding(self) -> tuple[int, int]:
        return int(self.meta[kernels.META_WIND1]), int(self.meta[kernels.META_WIND2])

    def apply_flip(self, e: int) -> None:
        """Toggle edge ``e`` and all derived state. O(1)."""
        kernels.flip_edge(
            self.flips,
            self.syndrome,
            self.anyon_list,
            self.anyon_slot,
            self.meta,
            self.geo.edge_plaquettes,
            self.geo.cut_mask,
            e,
        )

    def copy(self) -> "PauliFrame":
        other = PauliFrame(self.geo, self.flips.copy())
        other.init_winding = self.init_winding
        return other

    def state_equal(self, other: "PauliFrame") -> bool:
        """Field-by-field equality of the derived state.

        Registry order is irrelevant, so occupied sets are compared.
        """
        return (
            self.geo.L == other.geo.L
            and bool(np.array_equal(self.flips, other.flips))
            and bool(np.array_equal(self.syndrome, other.syndrome))
            and self.anyon_count == other.anyon_count
            and set(self.anyons.tolist()) == set(other.anyons.tolist())
            and self.winding == other.winding
        )


def new_frame(geo: TorusGeometry, init_mode: str = "ground", rng=None) -> PauliFrame:
    """Create a frame in the requested initial state.

    Parameters
    ----------
    init_mode : {"ground", "mixed"}
        ``ground`` starts from the all-zero flip configuration.
        ``mixed`` flips every edge independently with probability 1/2,
        which in the excitation basis is the uniform mixture over error
        configurations.
    rng : int seed or uint64[4] xoshiro state, required for ``mixed``
        When a state array is given, words are consumed from it (so a
        trajectory stream stays reproducible end to end).
    """
    if init_mode == "ground":
        return PauliFrame(geo)
    if init_mode != "mixed":
        raise ValueError(f"unknown init mode: {init_mode!r}")
    if rng is None:
        raise ValueError("mixed initial state requires a seed or rng state")
    state = rng if isinstance(rng, np.ndarray) else make_state(stream_key(int(rng), "mixed-init"))
    n_words = (geo.edge_count + 63) // 64
    words = np.empty(n_words, dtype=np.uint64)
    for w in range(n_words):
        words[w] = next_u64(state)
    flips = np.unpackbits(words.view(np.uint8), bitorder="little")[: geo.edge_count]
    return PauliFrame(geo, flips)


def apply_flip(frame: PauliFrame, e: int) -> None:
    frame.apply_flip(e)


def recompute_from_scratch(frame: PauliFrame, geo: TorusGeometry) -> PauliFrame:
    """Fresh frame with all derived state rebuilt from the flip bits.

    Serves as the consistency oracle for the incremental updates.
    """
    out = PauliFrame(geo, frame.flips.copy())
    out.init_winding = frame.init_winding
    return out


def snapshot_bytes(frame: PauliFrame, time: float) -> bytes:
    """Serialize (flips bitmap, time) for checkpoints and golden files.

    Layout: 16-byte header (magic ``TCPF``, version, lattice size),
    little-endian float64 time, then the flip bits packed LSB-first.
    """
    header = _HEADER.pack(SNAPSHOT_MAGIC, SNAPSHOT_VERSION, 0, frame.geo.L, 0)
    packed = np.packbits(frame.flips, bitorder="little").tobytes()
    return header + struct.pack("<d", float(time)) + packed


def frame_from_snapshot(data: bytes, geo: TorusGeometry | None = None):
    """Inverse of :func:`snapshot_bytes`; returns ``(frame, time)``."""
    magic, version, _, L, _ = _HEADER.unpack_from(data, 0)
    if magic != SNAPSHOT_MAGIC:
        raise ValueError("not a frame snapshot (bad magic)")
    if version != SNAPSHOT_VERSION:
        raise ValueError(f"unsupported snapshot version {version}")
    if geo is None:
        from .lattice import build_geometry

        geo = build_geometry(L)
    elif geo.L != L:
        raise ValueError(f"snapshot is for L={L}, geometry has L={geo.L}")
    (time,) = struct.unpack_from("<d", data, _HEADER.size)
    n_edges = geo.edge_count
    raw = np.frombuffer(data, dtype=np.uint8, offset=_HEADER.size + 8)
    flips = np.unpackbits(raw, bitorder="little")[:n_edges]
    return PauliFrame(geo, flips), time
