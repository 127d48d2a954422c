"""Ensemble orchestration: schedules, threshold location, phase sweeps.

Trajectories are embarrassingly parallel; each derives its own stream
from (master seed, run labels, trajectory index), so results are a
pure function of the plan regardless of worker count.  Sweep points
run sequentially (bisection is inherently sequential) and aggregate by
associative reduction over the trajectory index order.
"""

from __future__ import annotations

import math
import os
import time as _time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .dynamics import RatesConfig, make_trajectory, run_until, total_rate
from .lattice import build_geometry
from .observables import EnsembleStats, aggregate, measure

__all__ = [
    "ExperimentPlan",
    "SweepPoint",
    "ThresholdResult",
    "steady_state_time",
    "measurement_grid",
    "run_ensemble",
    "calibrate_steady_const",
    "locate_critical_gamma1",
    "phase_diagram",
]


@dataclass(frozen=True)
class ExperimentPlan:
    """Everything needed to reproduce a run, and nothing else."""

    sizes: tuple[int, ...]
    gamma1_grid: tuple[float, ...]
    gamma3: float
    trajectories: int
    master_seed: int
    gamma2: float = 1.0
    steady_const: float = 1.0
    grid_points: int = 32
    init_mode: str = "ground"
    sync: bool = True
    criterion: str = "p_eps"  # or "depth_var"
    depth_var_floor: float = 1e-3
    workers: int | None = None
    max_events_per_point: float | None = None

    def __post_init__(self):
        if self.trajectories < 2:
            raise ValueError("need at least 2 trajectories per point")
        if self.steady_const <= 0:
            raise ValueError("steady-state constant must be positive")
        if any(L < 3 for L in self.sizes):
            raise ValueError("lattice sizes must be >= 3")
        if self.criterion not in ("p_eps", "depth_var"):
            raise ValueError(f"unknown criterion {self.criterion!r}")


@dataclass(frozen=True)
class SweepPoint:
    """One evaluated (L, rates) point with its ensemble statistics."""

    L: int
    gamma1: float
    gamma2: float
    gamma3: float
    trajectories: int
    seed: int
    t_max: float
    stats: EnsembleStats | None
    wall_seconds: float = 0.0
    event_counts: dict = field(default_factory=dict)
    skipped: bool = False  # event budget exceeded; no data


@dataclass(frozen=True)
class ThresholdResult:
    """Located crossing for one field-update rate."""

    gamma3: float
    gamma1_c: float
    bracket: tuple[float, float]
    censored: str | None  # None, "low", or "high"
    criterion: str
    evaluations: tuple = ()


def steady_state_time(L: int, gamma1: float, c: float, gamma2: float = 1.0) -> float:
    """Horizon after which logical failures have had time to develop.

    Diffusive error spreading reaches the wrap-around scale on times
    of order L^4 over the injection rate; ``c`` rescales the horizon
    and is validated by the saturation self-test.  With no injection
    the hop rate sets the fallback scale.
    """
    if gamma1 > 0:
        return c * L**4 / gamma1
    return c * L**4 / gamma2


def measurement_grid(t_max: float, points: int = 32, span_decades: float = 3.0):
    """Logarithmic observation times ending exactly at ``t_max``."""
    if points < 2:
        return (float(t_max),)
    grid = np.geomspace(t_max * 10.0 ** (-span_decades), t_max, points + 1)
    grid[-1] = t_max
    return tuple(float(t) for t in grid)


def _estimated_events(L: int, rates: RatesConfig, t_max: float, n_traj: int, sync: bool) -> float:
    field_rate = rates.gamma3 if sync else rates.gamma3 * L * L
    per_unit = rates.gamma1 * 2 * L * L + field_rate  # hop load not known up front
    return per_unit * t_max * n_traj


def run_ensemble(plan: ExperimentPlan, L: int, gamma1: float, gamma3: float | None = None) -> SweepPoint:
    """Run ``plan.trajectories`` independent runs of one parameter point.

    Deterministic: the outcome depends only on the plan fields and the
    point parameters, never on scheduling.  Points whose up-front
    event estimate exceeds the plan budget are skipped with a flag.
    """
    gamma3 = plan.gamma3 if gamma3 is None else gamma3
    rates = RatesConfig(gamma1=gamma1, gamma2=plan.gamma2, gamma3=gamma3)
    t_max = steady_state_time(L, gamma1, plan.steady_const, plan.gamma2)
    est = _estimated_events(L, rates, t_max, plan.trajectories, plan.sync)
    if plan.max_events_per_point is not None and est > plan.max_events_per_point:
        return SweepPoint(
            L=L,
            gamma1=gamma1,
            gamma2=plan.gamma2,
            gamma3=gamma3,
            trajectories=plan.trajectories,
            seed=plan.master_seed,
            t_max=t_max,
            stats=None,
            skipped=True,
        )

    geo = build_geometry(L)
    times = measurement_grid(t_max, plan.grid_points)

    def one(idx: int):
        state = make_trajectory(
            geo,
            rates,
            master_seed=plan.master_seed,
            trajectory=idx,
            init_mode=plan.init_mode,
            sync=plan.sync,
            key_parts=(plan.steady_const,),
        )
        out = []
        run_until(
            state,
            t_max,
            observers=(lambda t, s: out.append(measure(s, geo, trajectory=idx)),),
            times=times,
        )
        return state, out

    started = _time.perf_counter()
    workers = plan.workers or min(plan.trajectories, os.cpu_count() or 1)
    measurements = []
    counts = {"create": 0, "hop": 0, "field": 0}
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one, range(plan.trajectories)))
    else:
        results = [one(i) for i in range(plan.trajectories)]
    for state, ms in results:
        measurements.extend(ms)
        for k, v in state.event_counts.items():
            counts[k] += v
    stats = aggregate(measurements, seed=plan.master_seed)
    return SweepPoint(
        L=L,
        gamma1=gamma1,
        gamma2=plan.gamma2,
        gamma3=gamma3,
        trajectories=plan.trajectories,
        seed=plan.master_seed,
        t_max=t_max,
        stats=stats,
        wall_seconds=_time.perf_counter() - started,
        event_counts=counts,
    )


def calibrate_steady_const(
    plan: ExperimentPlan,
    L: int = 8,
    gamma1: float = 0.05,
    max_doublings: int = 3,
) -> float:
    """Validate (or grow) the steady-state constant by saturation.

    At a clearly mixing point, the failure probability must stop
    moving between the last two observation times: the change has to
    be under two combined bootstrap standard errors.  If not, the
    constant doubles and the check reruns.
    """
    c = plan.steady_const
    for _ in range(max_doublings + 1):
        point = run_ensemble(replace(plan, steady_const=c), L, gamma1)
        rows = point.stats.rows
        last, prev = rows[-1], rows[-2]
        se_last = (last.p_failure_ci[1] - last.p_failure_ci[0]) / 3.92
        se_prev = (prev.p_failure_ci[1] - prev.p_failure_ci[0]) / 3.92
        combined = math.hypot(se_last, se_prev)
        if abs(last.p_failure - prev.p_failure) <= 2 * max(combined, 1e-12):
            return c
        c *= 2
    return c


def _classify_point(plan: ExperimentPlan, small, large) -> tuple[int, bool]:
    """Side of the transition at one injection rate.

    Returns (side, ambiguous): side +1 means the trivial phase (the
    larger system fails at least as often, or both are mixed), -1 the
    self-correcting phase.  ``ambiguous`` is set when the difference
    CI straddles zero.
    """
    if plan.criterion == "depth_var":
        # depth_var tracks d/L^2, so Var(d)/L^2 needs a factor L^2 back
        row = large.stats.final
        scale = float(large.L) ** 2
        side = 1 if row.depth_var * scale > plan.depth_var_floor else -1
        lo, hi = row.depth_var_ci
        ambiguous = lo * scale <= plan.depth_var_floor <= hi * scale
        return side, ambiguous
    ps, pl = small.stats.final, large.stats.final
    diff = pl.p_failure - ps.p_failure
    hw = (pl.p_failure_ci[1] - pl.p_failure_ci[0]) / 2 + (
        ps.p_failure_ci[1] - ps.p_failure_ci[0]
    ) / 2
    both_mixed = ps.p_failure >= 0.5 and pl.p_failure >= 0.5
    side = 1 if (both_mixed or diff > 0) else -1
    ambiguous = (abs(diff) <= hw) and not both_mixed
    return side, ambiguous


def locate_critical_gamma1(
    plan: ExperimentPlan,
    gamma3: float,
    L_pair: tuple[int, int],
    bracket_factor: float = 1.3,
) -> ThresholdResult:
    """Bisect (on log gamma1) the finite-size crossing of the readout.

    Below the transition the larger system fails less; above, more (or
    both are fully mixed).  The bisection narrows the bracket until
    its ratio drops under ``bracket_factor`` or both ends are
    statistically ambiguous.  Returns the geometric midpoint with the
    bracket as its confidence interval; a missing sign change on the
    initial grid censors the result at that boundary.
    """
    L_small, L_large = L_pair
    if L_small >= L_large:
        raise ValueError("L_pair must be increasing")
    lo = min(plan.gamma1_grid)
    hi = max(plan.gamma1_grid)
    if lo >= hi:
        raise ValueError("gamma1 grid must span a bracket")
    evaluations = []

    def classify(g1: float) -> tuple[int, bool]:
        small = run_ensemble(plan, L_small, g1, gamma3)
        large = run_ensemble(plan, L_large, g1, gamma3)
        evaluations.append((small, large))
        return _classify_point(plan, small, large)

    side_lo, amb_lo = classify(lo)
    side_hi, amb_hi = classify(hi)
    if side_lo == side_hi:
        censored = "high" if side_lo < 0 else "low"
        g = hi if side_lo < 0 else lo
        return ThresholdResult(
            gamma3=gamma3,
            gamma1_c=g,
            bracket=(lo, hi),
            censored=censored,
            criterion=plan.criterion,
            evaluations=tuple(evaluations),
        )

    while hi / lo > bracket_factor and not (amb_lo and amb_hi):
        mid = math.sqrt(lo * hi)
        side, amb = classify(mid)
        if side == side_lo:
            lo, amb_lo = mid, amb
        else:
            hi, amb_hi = mid, amb
    return ThresholdResult(
        gamma3=gamma3,
        gamma1_c=math.sqrt(lo * hi),
        bracket=(lo, hi),
        censored=None,
        criterion=plan.criterion,
        evaluations=tuple(evaluations),
    )


def phase_diagram(plan: ExperimentPlan, gamma3_list, L_pair: tuple[int, int]):
    """Critical injection rate for each field-update rate, in order."""
    if not gamma3_list:
        raise ValueError("need at least one field-update rate")
    results = [locate_critical_gamma1(plan, g3, L_pair) for g3 in sorted(gamma3_list)]
    return results
