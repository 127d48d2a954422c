"""Per-measurement extraction and ensemble statistics.

A measurement freezes the observables of one trajectory at one time:
excitation density, normalized circuit depth from the clustering
decoder, and the logical readout bits.  Aggregation groups
measurements by time and reports means, unbiased variances, bootstrap
confidence intervals, and the logical failure fraction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .decoder import decode
from .lattice import TorusGeometry, winding_parities

__all__ = [
    "Measurement",
    "GroupStats",
    "EnsembleStats",
    "measure",
    "aggregate",
    "bootstrap_ci",
]


@dataclass(frozen=True)
class Measurement:
    """Observables of one trajectory at one measurement time."""

    time: float
    anyon_density: float
    depth_normalized: float
    logical_bits: tuple[int, int]
    trajectory: int = 0

    @property
    def failed(self) -> bool:
        return bool(self.logical_bits[0] or self.logical_bits[1])


def measure(state, geo: TorusGeometry | None = None, trajectory: int = 0) -> Measurement:
    """Extract the observables without touching the trajectory.

    The decode runs on the live frame read-only; the logical bits are
    computed on a scratch overlay of flips and correction.
    """
    geo = geo or state.geo
    frame = state.frame
    n = frame.anyon_count / geo.plaquette_count
    result = decode(frame, geo)
    total = frame.flips ^ result.correction
    w1, w2 = winding_parities(total, geo)
    i1, i2 = frame.init_winding
    return Measurement(
        time=float(state.t),
        anyon_density=float(n),
        depth_normalized=result.depth / geo.plaquette_count,
        logical_bits=(w1 ^ i1, w2 ^ i2),
        trajectory=trajectory,
    )


def bootstrap_ci(values, n_resamples: int = 1000, seed: int = 0, statistic=None, alpha: float = 0.05):
    """Percentile bootstrap interval for a statistic of an iid sample.

    The sample is sorted first so the interval is invariant under
    permutations of the input.  Returns ``(lo, hi)``; a single-point
    sample collapses to a zero-width interval at its value.
    """
    arr = np.sort(np.asarray(values, dtype=np.float64))
    if statistic is None:
        statistic = np.mean
    if arr.size == 0:
        return (math.nan, math.nan)
    if arr.size == 1 or np.all(arr == arr[0]):
        v = float(statistic(arr))
        return (v, v)
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, arr.size, size=(n_resamples, arr.size))
    stats = statistic(arr[idx], axis=1)
    lo, hi = np.percentile(stats, [100 * alpha / 2, 100 * (1 - alpha / 2)])
    return (float(lo), float(hi))


@dataclass(frozen=True)
class GroupStats:
    """Mean / variance / CI triple per observable at one time."""

    time: float
    count: int
    density_mean: float
    density_var: float
    density_ci: tuple[float, float]
    depth_mean: float
    depth_var: float
    depth_var_ci: tuple[float, float]
    depth_ci: tuple[float, float]
    p_failure: float
    p_failure_ci: tuple[float, float]
    underfilled: bool  # fewer than 2 samples: variances undefined


@dataclass(frozen=True)
class EnsembleStats:
    """Per-time rows of aggregated observables, ordered by time."""

    rows: tuple[GroupStats, ...]

    @property
    def final(self) -> GroupStats:
        return self.rows[-1]

    def at_time(self, t: float) -> GroupStats:
        for row in self.rows:
            if row.time == t:
                return row
        raise KeyError(f"no measurement group at t={t}")


def _var(arr) -> float:
    return float(np.var(arr, ddof=1)) if arr.size >= 2 else math.nan


def aggregate(measurements, n_resamples: int = 1000, seed: int = 0) -> EnsembleStats:
    """Group measurements by time and reduce each group.

    Groups with fewer than 2 entries are flagged ``underfilled`` and
    report NaN variances.  The reduction is invariant under permuting
    the input list.
    """
    by_time: dict[float, list[Measurement]] = {}
    for m in measurements:
        by_time.setdefault(m.time, []).append(m)
    rows = []
    for t in sorted(by_time):
        group = by_time[t]
        dens = np.sort(np.array([m.anyon_density for m in group]))
        depth = np.sort(np.array([m.depth_normalized for m in group]))
        fails = np.sort(np.array([1.0 if m.failed else 0.0 for m in group]))
        var_stat = lambda a, axis=None: np.var(a, ddof=1, axis=axis)  # noqa: E731
        rows.append(
            GroupStats(
                time=float(t),
                count=len(group),
                density_mean=float(dens.mean()),
                density_var=_var(dens),
                density_ci=bootstrap_ci(dens, n_resamples, seed),
                depth_mean=float(depth.mean()),
                depth_var=_var(depth),
                depth_var_ci=(
                    bootstrap_ci(depth, n_resamples, seed, statistic=var_stat)
                    if depth.size >= 2
                    else (math.nan, math.nan)
                ),
                depth_ci=bootstrap_ci(depth, n_resamples, seed),
                p_failure=float(fails.mean()),
                p_failure_ci=bootstrap_ci(fails, n_resamples, seed),
                underfilled=len(group) < 2,
            )
        )
    return EnsembleStats(rows=tuple(rows))
